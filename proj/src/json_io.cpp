#include "pestab/json_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "pestab/error.hpp"

namespace pestab {

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw DomainError("matrix must be a non-empty array of rows");
  const auto rows = j.size();
  std::size_t cols = 0;
  for (const auto& r : j) {
    if (!r.is_array()) throw DomainError("matrix rows must be arrays");
    if (cols == 0) cols = r.size();
    if (r.size() != cols || cols == 0) throw DomainError("matrix rows must have equal, nonzero length");
  }
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      const auto& v = j[i][k];
      if (!v.is_number()) throw DomainError("matrix entries must be numbers");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw DomainError("matrix entries must be finite");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = d;
    }
  }
  return m;
}

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json signal_to_json(const PwcSignal& s) {
  Json j;
  j["breakpoints"] = s.breakpoints();
  j["values"] = s.values();
  if (s.is_periodic()) j["extension"] = {{"periodic", s.period()}};
  else j["extension"] = {{"hold", std::get<Hold>(s.extension()).value}};
  return j;
}

PwcSignal signal_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("breakpoints") || !j.contains("values") || !j.contains("extension")) {
    throw DomainError("signal needs breakpoints, values and extension");
  }
  const auto bps = j.at("breakpoints").get<std::vector<double>>();
  const auto vals = j.at("values").get<std::vector<double>>();
  const Json& ext = j.at("extension");
  if (ext.contains("periodic")) return PwcSignal(bps, vals, Periodic{ext.at("periodic").get<double>()});
  if (ext.contains("hold")) return PwcSignal(bps, vals, Hold{ext.at("hold").get<double>()});
  throw DomainError("signal extension must be {\"periodic\": P} or {\"hold\": v}");
}

Json certificate_to_json(const Certificate& c) {
  Json j;
  j["name"] = c.name;
  j["pass"] = c.pass;
  Json m = Json::object();
  for (const auto& [k, v] : c.measured) {
    if (std::isfinite(v)) m[k] = v;
    else m[k] = v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  }
  j["measured"] = m;
  j["tolerance"] = c.tolerance;
  j["battery"] = {{"seed", c.battery.seed}, {"size", c.battery.size}, {"spec", c.battery.spec}};
  j["notes"] = c.notes;
  return j;
}

Json gramian_to_json(const GramianReport& r, const PeClass& cls) {
  Json j;
  j["t"] = r.t;
  j["T"] = cls.T;
  j["mu"] = cls.mu;
  j["min_sv"] = r.min_sv;
  j["controllable"] = r.controllable;
  if (r.witness) j["witness"] = vec_to_json(*r.witness);
  return j;
}

Json threshold_to_json(const ThresholdResult& r) {
  Json j;
  j["t"] = r.t;
  j["T"] = r.cls.T;
  j["mu"] = r.cls.mu;
  j["min_sv"] = r.min_sv;
  j["scale"] = r.scale;
  j["controllable"] = !r.adversarial && r.claim;
  j["regime"] = r.adversarial ? "adversarial" : "battery";
  j["claim_holds"] = r.claim;
  j["signals_checked"] = r.signals_checked;
  j["worst_signal"] = r.worst_label;
  if (r.witness) j["witness"] = vec_to_json(*r.witness);
  return j;
}

Json gain_to_json(const std::string& kind, const Json& params, const Mat& K) {
  Json j = params.is_object() ? params : Json::object();
  j["kind"] = kind;
  j["K"] = mat_to_json(K);
  return j;
}

Json destabilizer_to_json(const Mat& K, double nu_hat, const DestabilizerRun& run) {
  Json j;
  j["K"] = mat_to_json(K);
  j["nu_hat"] = nu_hat;
  j["class"] = {{"T", run.cls.T}, {"mu", run.cls.mu}};
  j["growth_per_rev"] = run.growth_per_rev;
  j["revolutions"] = run.revolutions;
  j["revolution_norms"] = run.revolution_norms;
  j["induced_signal"] = signal_to_json(run.induced_signal);
  j["induced_signal_pe"] = {{"ok", run.pe.ok},
                            {"worst_window_start", run.pe.worst_window_start},
                            {"worst_integral", run.pe.worst_integral}};
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace pestab
