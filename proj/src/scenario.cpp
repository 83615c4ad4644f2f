#include "pestab/scenario.hpp"

#include <fstream>
#include <sstream>

#include "pestab/gains.hpp"

namespace pestab {

namespace {

const Json& need(const Json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object() || !obj.contains(key)) throw ScenarioError(ptr + "/" + key, "required field is missing");
  return obj.at(key);
}

double number(const Json& v, const std::string& ptr) {
  if (!v.is_number()) throw ScenarioError(ptr, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ScenarioError(ptr, "expected a finite number");
  return d;
}

double number_or(const Json& obj, const std::string& key, const std::string& ptr, double fallback) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), ptr + "/" + key);
}

Mat matrix(const Json& v, const std::string& ptr) {
  try {
    return mat_from_json(v);
  } catch (const Error& e) {
    throw ScenarioError(ptr, e.what());
  }
}

DutyPattern pattern_from(const std::string& name, const std::string& ptr) {
  if (name == "front") return DutyPattern::front();
  if (name == "back") return DutyPattern::back();
  if (name.rfind("split:", 0) == 0) {
    try {
      const int k = std::stoi(name.substr(6));
      if (k >= 1) return DutyPattern::split(k);
    } catch (const std::exception&) {
    }
  }
  throw ScenarioError(ptr, "pattern must be front, back or split:<k>");
}

}  // namespace

Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw ScenarioError("", "scenario must be a JSON object");
  Scenario s;
  s.raw = j;

  const Json& sys = need(j, "system", "");
  if (sys.contains("preset")) {
    if (!sys.at("preset").is_string()) throw ScenarioError("/system/preset", "expected a string");
    s.preset = sys.at("preset").get<std::string>();
    if (s.preset == "double_integrator") {
      s.A = di_A();
      s.B = di_B();
    } else if (s.preset == "rotation") {
      s.A = Mat(2, 2);
      s.A << 0, 1, -1, 0;
      s.B = di_B();
    } else {
      throw ScenarioError("/system/preset", "unknown preset '" + s.preset + "' (double_integrator, rotation)");
    }
  } else {
    s.A = matrix(need(sys, "A", "/system"), "/system/A");
    s.B = matrix(need(sys, "B", "/system"), "/system/B");
    if (s.A.rows() != s.A.cols()) throw ScenarioError("/system/A", "must be square");
    if (s.B.rows() != s.A.rows()) throw ScenarioError("/system/B", "must have as many rows as A");
  }
  const auto n = s.A.rows();

  if (j.contains("class")) {
    const Json& c = j.at("class");
    const double T = number(need(c, "T", "/class"), "/class/T");
    const double mu = number(need(c, "mu", "/class"), "/class/mu");
    if (!(mu > 0.0) || !(mu <= T)) throw ScenarioError("/class", "need 0 < mu <= T");
    s.cls = PeClass::make(T, mu);
  }

  if (j.contains("gain")) {
    const Json& g = j.at("gain");
    GainSpec gs;
    if (!g.contains("kind") || !g.at("kind").is_string()) throw ScenarioError("/gain/kind", "expected a string");
    gs.kind = g.at("kind").get<std::string>();
    if (gs.kind == "di") {
      gs.rho = number(need(g, "rho", "/gain"), "/gain/rho");
      gs.k = number(need(g, "k", "/gain"), "/gain/k");
      gs.lambda = number_or(g, "lambda", "/gain", 1.0);
    } else if (gs.kind == "neutral") {
      gs.r = number_or(g, "r", "/gain", 1.0);
    } else if (gs.kind == "multi") {
      gs.k = number(need(g, "k", "/gain"), "/gain/k");
    } else if (gs.kind == "explicit") {
      gs.K = matrix(need(g, "K", "/gain"), "/gain/K");
      if (gs.K.rows() != s.B.cols() || gs.K.cols() != n) {
        throw ScenarioError("/gain/K", "must be " + std::to_string(s.B.cols()) + "x" + std::to_string(n));
      }
    } else {
      throw ScenarioError("/gain/kind", "unknown gain kind '" + gs.kind + "' (di, neutral, multi, explicit)");
    }
    s.gain = gs;
  }

  if (j.contains("signal")) {
    const Json& g = j.at("signal");
    SignalSpec ss;
    if (!g.contains("kind") || !g.at("kind").is_string()) throw ScenarioError("/signal/kind", "expected a string");
    ss.kind = g.at("kind").get<std::string>();
    if (ss.kind == "constant") {
      ss.value = number(need(g, "value", "/signal"), "/signal/value");
      if (ss.value < 0.0 || ss.value > 1.0) throw ScenarioError("/signal/value", "must lie in [0, 1]");
    } else if (ss.kind == "duty") {
      ss.phase = number_or(g, "phase", "/signal", 0.0);
      ss.on_value = number_or(g, "on_value", "/signal", 1.0);
      if (g.contains("pattern")) {
        if (!g.at("pattern").is_string()) throw ScenarioError("/signal/pattern", "expected a string");
        ss.pattern = pattern_from(g.at("pattern").get<std::string>(), "/signal/pattern");
      }
    } else if (ss.kind == "pwc") {
      try {
        ss.pwc = signal_from_json(g);
      } catch (const std::exception& e) {
        throw ScenarioError("/signal", e.what());
      }
    } else if (ss.kind == "zeta") {
      ss.revolutions = static_cast<int>(number_or(g, "revolutions", "/signal", 10));
      if (ss.revolutions < 1) throw ScenarioError("/signal/revolutions", "must be >= 1");
    } else {
      throw ScenarioError("/signal/kind", "unknown signal kind '" + ss.kind + "' (constant, duty, pwc, zeta)");
    }
    s.signal = ss;
  }

  s.horizon = number_or(j, "horizon", "", 10.0);
  if (!(s.horizon > 0.0)) throw ScenarioError("/horizon", "must be positive");
  if (j.contains("max_step")) {
    s.max_step = number(j.at("max_step"), "/max_step");
    if (!(*s.max_step > 0.0)) throw ScenarioError("/max_step", "must be positive");
  }
  if (j.contains("x0")) {
    const Json& xs = j.at("x0");
    if (!xs.is_array() || xs.empty()) throw ScenarioError("/x0", "expected a non-empty array of states");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::string ptr = "/x0/" + std::to_string(i);
      if (!xs[i].is_array() || static_cast<Eigen::Index>(xs[i].size()) != n) {
        throw ScenarioError(ptr, "expected " + std::to_string(n) + " numbers");
      }
      Vec v(n);
      for (Eigen::Index k = 0; k < n; ++k) v(k) = number(xs[i][k], ptr + "/" + std::to_string(k));
      if (v.norm() == 0.0) throw ScenarioError(ptr, "initial state must be nonzero");
      s.x0.push_back(v);
    }
  } else {
    Vec v = Vec::Zero(n);
    v(0) = 1.0;
    s.x0.push_back(v);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ScenarioError("/seed", "expected a non-negative integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("battery")) {
    const double size = number(need(j.at("battery"), "size", "/battery"), "/battery/size");
    if (size < 1 || size != std::floor(size)) throw ScenarioError("/battery/size", "must be a positive integer");
    s.battery_size = static_cast<int>(size);
  }
  if (j.contains("tolerances")) s.tol = number_or(j.at("tolerances"), "default", "/tolerances", s.tol);
  if (j.contains("t_grid")) {
    const Json& g = j.at("t_grid");
    if (!g.is_array()) throw ScenarioError("/t_grid", "expected an array of times");
    for (std::size_t i = 0; i < g.size(); ++i) s.t_grid.push_back(number(g[i], "/t_grid/" + std::to_string(i)));
  }
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ScenarioError("/params", "expected an object");
    s.params = j.at("params");
  }
  if (j.contains("sweep")) {
    const Json& w = j.at("sweep");
    SweepSpec sw;
    const Json& ps = need(w, "params", "/sweep");
    if (!ps.is_object()) throw ScenarioError("/sweep/params", "expected an object of value lists");
    for (const auto& [key, vals] : ps.items()) {
      const std::string ptr = "/sweep/params/" + key;
      if (!vals.is_array()) throw ScenarioError(ptr, "expected an array");
      std::vector<double> v;
      for (std::size_t i = 0; i < vals.size(); ++i) v.push_back(number(vals[i], ptr + "/" + std::to_string(i)));
      sw.params.emplace_back(key, v);
    }
    if (w.contains("max_cells")) sw.max_cells = static_cast<long long>(number(w.at("max_cells"), "/sweep/max_cells"));
    s.sweep = sw;
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ScenarioError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(j);
}

const PeClass& require_class(const Scenario& s) {
  if (!s.cls) throw ScenarioError("/class", "required field is missing");
  return *s.cls;
}

Mat scenario_gain(const Scenario& s) {
  if (!s.gain) throw ScenarioError("/gain", "required field is missing");
  const GainSpec& g = *s.gain;
  if (g.kind == "di") return di_gain(require_class(s), g.rho, g.k, g.lambda).K;
  if (g.kind == "neutral") return neutral_gain(s.A, s.B, g.r);
  if (g.kind == "multi") return multi_input_gain(s.B, g.k);
  return g.K;
}

PwcSignal scenario_signal(const Scenario& s) {
  if (!s.signal) throw ScenarioError("/signal", "required field is missing");
  const SignalSpec& g = *s.signal;
  if (g.kind == "constant") return PwcSignal::constant(g.value);
  if (g.kind == "duty") return make_duty(require_class(s), g.phase, g.on_value, g.pattern);
  if (g.kind == "pwc") return *g.pwc;
  throw ScenarioError("/signal/kind", "state-feedback signal has no open-loop form here");
}

double param(const Scenario& s, const std::string& key, double fallback) {
  if (!s.params.contains(key)) return fallback;
  return number(s.params.at(key), "/params/" + key);
}

}  // namespace pestab
