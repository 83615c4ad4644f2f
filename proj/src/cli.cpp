#include "pestab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "pestab/adversary.hpp"
#include "pestab/certify.hpp"
#include "pestab/gains.hpp"
#include "pestab/parallel.hpp"
#include "pestab/reachability.hpp"
#include "pestab/scenario.hpp"
#include "pestab/simcore.hpp"

namespace pestab {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

const std::vector<std::string> kLemmas{"claim1", "multi", "finite", "ff00", "ff01",
                                       "final0", "c2",    "ouf0",   "technic", "q1yes"};

struct Options {
  std::string scenario;
  std::string lemma;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> tol;
};

struct Context {
  Scenario s;
  fs::path out;
  int workers = 1;
  std::ostream* log = nullptr;
};

Context make_context(const Options& o) {
  Context c;
  c.s = load_scenario(o.scenario);
  if (o.seed) c.s.seed = *o.seed;
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw ScenarioError("--tol", "must be positive");
    c.s.tol = *o.tol;
  }
  c.workers = o.workers ? std::max(1, *o.workers) : default_workers();
  c.out = o.out_dir;
  fs::create_directories(c.out);
  return c;
}

Json meta(const Context& c) {
  return {{"tool", "pestab"},
          {"version", kVersion},
          {"seed", c.s.seed},
          {"tolerances", {{"default", c.s.tol}}},
          {"scenario_hash", fnv1a_hex(c.s.raw.dump())}};
}

void write_json(const fs::path& p, const Json& j) {
  std::ofstream f(p);
  f << std::setw(2) << j << "\n";
}

bool explicit_x0(const Scenario& s) { return s.raw.contains("x0"); }

std::vector<BatteryMember> battery(const Context& c) {
  return make_battery(require_class(c.s), c.s.battery_size, c.s.seed);
}

BatteryInfo battery_info(const Context& c) {
  return {c.s.seed, c.s.battery_size, "make_battery(T, mu, size, seed)"};
}

struct DiParams {
  double rho = 0.2;
  double k = 4.0;
  double lambda = 1.0;
};

DiParams di_params(const Scenario& s) {
  DiParams p;
  if (s.gain && s.gain->kind == "di") {
    p = {s.gain->rho, s.gain->k, s.gain->lambda};
  } else {
    if (s.cls) p.rho = 0.8 * s.cls->ratio() / 2.0;
    p.rho = param(s, "rho", p.rho);
    p.k = param(s, "k", p.k);
    p.lambda = param(s, "lambda", p.lambda);
  }
  if (!(p.k > 0.0)) throw ScenarioError("/gain/k", "must be positive");
  if (!(p.lambda >= 1.0)) throw ScenarioError("/gain/lambda", "must be >= 1");
  return p;
}

void require_planar_di(const Scenario& s, const std::string& lemma) {
  if (s.A.rows() != 2 || s.B.cols() != 1 || !s.A.isApprox(di_A()) || !s.B.isApprox(di_B())) {
    throw PreconditionError("lemma " + lemma + " needs the double_integrator system");
  }
}

/// Combines per-run certificates: counts add, max_* and constants C* take the
/// maximum, everything else the minimum.
Certificate aggregate(const std::string& name, const std::vector<Certificate>& parts) {
  static const std::vector<std::string> summed{"violations", "sojourns", "checked_pairs", "windows",
                                               "crossings",  "long_excursions", "runs", "samples"};
  Certificate out;
  out.name = name;
  out.pass = !parts.empty();
  for (const auto& p : parts) {
    out.pass = out.pass && p.pass;
    out.tolerance = std::max(out.tolerance, p.tolerance);
    for (const auto& [key, v] : p.measured) {
      auto it = out.measured.find(key);
      if (it == out.measured.end()) {
        out.measured[key] = v;
        continue;
      }
      if (std::find(summed.begin(), summed.end(), key) != summed.end()) it->second += v;
      else if (key.rfind("max_", 0) == 0 || key[0] == 'C') it->second = std::max(it->second, v);
      else it->second = std::min(it->second, v);
    }
    if (!p.pass) {
      for (const auto& n : p.notes) out.notes.push_back(n);
    }
  }
  out.measured["runs_checked"] = static_cast<double>(parts.size());
  return out;
}

std::vector<Vec> di_x0s(const Scenario& s, double k) {
  if (explicit_x0(s)) return s.x0;
  return f_angle_grid(static_cast<int>(param(s, "x0_count", 8)), k);
}

std::vector<Trajectory> di_runs(const Context& c, const DiParams& p) {
  const double horizon = c.s.raw.contains("horizon") ? c.s.horizon : 20.0 / p.k;
  return di_base_batch(p.rho, p.k, p.lambda, battery(c), di_x0s(c.s, p.k), horizon, c.workers);
}

PeClass lambda_class(const PeClass& cls, double lambda) { return PeClass::make(cls.T / lambda, cls.mu / lambda); }

Certificate certify_lemma(const std::string& lemma, const Context& c, Json& extra) {
  const Scenario& s = c.s;
  if (lemma == "claim1") {
    const auto bat = battery(c);
    const int n = static_cast<int>(s.A.rows());
    std::vector<Vec> grid;
    if (explicit_x0(s)) {
      grid = s.x0;
    } else if (n == 2) {
      grid = circle_grid(32);
    } else {
      std::mt19937_64 rng(s.seed);
      std::normal_distribution<double> g;
      for (int i = 0; i < 32; ++i) {
        Vec v(n);
        for (int j = 0; j < n; ++j) v(j) = g(rng);
        grid.push_back(v.normalized());
      }
    }
    Certificate eta = estimate_eta(s.A, s.B, require_class(s), bat, grid, c.workers);
    const double r = s.gain && s.gain->kind == "neutral" ? s.gain->r : 1.0;
    const auto runs = cross_runs(bat, {grid.front()});
    const auto trajs = simulate_batch(s.A, s.B, -r * s.B.transpose(), runs, s.horizon,
                                      s.max_step.value_or(1e-2 * require_class(s).T), c.workers);
    std::vector<Certificate> vs;
    for (const auto& t : trajs) vs.push_back(check_V_neutral(t, s.B, r));
    const Certificate v = aggregate("V_neutral", vs);
    extra["V_neutral"] = certificate_to_json(v);
    eta.pass = eta.pass && v.pass;
    eta.measured["V_violations"] = v.measured.at("violations");
    eta.battery = battery_info(c);
    return eta;
  }
  if (lemma == "multi") {
    require_planar_di(s, lemma);
    const DiParams p = di_params(s);
    const Mat K = di_gain(require_class(s), p.rho, p.k, 1.0).K;
    std::vector<double> lambdas{0.5, 2.0, 8.0};
    if (s.params.contains("lambdas")) lambdas = s.params.at("lambdas").get<std::vector<double>>();
    const auto bat = battery(c);
    const std::size_t nsig = std::min<std::size_t>(bat.size(), 5);
    std::vector<Certificate> parts;
    for (double l : lambdas) {
      for (std::size_t i = 0; i < nsig; ++i) {
        for (const auto& x0 : s.x0) {
          Certificate one = rescaling_identity(K, bat[i].signal, x0, l, s.raw.contains("horizon") ? s.horizon : 5.0);
          one.measured.erase("lambda");
          parts.push_back(one);
        }
      }
    }
    Certificate out = aggregate("multi", parts);
    out.tolerance = 1e-9;
    out.battery = battery_info(c);
    return out;
  }
  if (lemma == "technic") {
    const Mat K = s.gain ? scenario_gain(s) : (Mat(1, 2) << -1.0, -1.0).finished();
    std::vector<int> idx;
    for (int e = 0; e <= 10; ++e) idx.push_back(1 << e);
    std::vector<WeakStarRow> rows;
    Certificate out = weak_star_demo(s.A, s.B, K, s.x0.front(), param(s, "duty", 0.5), idx,
                                     s.raw.contains("horizon") ? s.horizon : 10.0, &rows);
    std::ofstream csv(c.out / "technic.csv");
    csv << "i,sup_distance\n";
    Json table = Json::array();
    for (const auto& r : rows) {
      csv << r.i << "," << fmt(r.sup_distance) << "\n";
      table.push_back({{"i", r.i}, {"sup_distance", r.sup_distance}});
    }
    extra["table"] = table;
    return out;
  }
  if (lemma == "q1yes") {
    const double k = s.gain && s.gain->kind == "multi" ? s.gain->k : param(s, "k", 1.0);
    const auto runs = cross_runs(battery(c), s.x0);
    Certificate out = multi_input_check(s.A, s.B, k, runs, s.horizon, c.workers);
    out.battery = battery_info(c);
    return out;
  }

  // Remaining selectors work on the double integrator in the base frame.
  require_planar_di(s, lemma);
  const PeClass& cls = require_class(s);
  const DiParams p = di_params(s);
  const ConeGeometry geom = cone_geometry(p.rho, p.k, cls.ratio());
  if (lemma == "final0") return comparison_final0(p.rho, p.k, cls.ratio());
  if (lemma == "c2") return comparison_c2(p.rho, p.k, cls.ratio());

  const PeClass cl = lambda_class(cls, p.lambda);
  const auto trajs = di_runs(c, p);
  std::vector<Certificate> parts;
  if (lemma == "finite") {
    for (const auto& t : trajs) {
      parts.push_back(dwell_times(t, geom));
      for (const auto& so : outer_sojourns(t, geom)) {
        if (so.length() <= 0.0) continue;
        Certificate f = check_F_monotone(slice(t, so.t_begin, so.t_end), geom, cl);
        f.measured.erase("c_closed_form");
        parts.push_back(f);
      }
    }
    Certificate out = aggregate("finite", parts);
    out.measured["c_closed_form"] = geom.c_rho();
    out.battery = battery_info(c);
    return out;
  }
  if (lemma == "ff00") {
    for (const auto& t : trajs) parts.push_back(check_quadrant_V(t, p.rho, p.k));
  } else if (lemma == "ff01") {
    for (const auto& t : trajs) {
      for (const auto& so : middle_sojourns(t, geom)) {
        if (so.length() > 0.0) parts.push_back(check_cs_decay(slice(t, so.t_begin, so.t_end), geom, cl));
      }
    }
  } else if (lemma == "ouf0") {
    for (const auto& t : trajs) parts.push_back(chain_contraction(t, p.k));
  }
  Certificate out = aggregate(lemma, parts);
  if (lemma == "ff00") {
    // runs that never enter the quadrant are vacuous, not failures
    out.pass = out.measured["violations"] == 0.0 && out.measured["checked_pairs"] > 0.0;
  }
  if (parts.empty()) out.notes.push_back("no qualifying trajectory pieces in the battery");
  out.battery = battery_info(c);
  return out;
}

int cmd_certify(const Options& o, std::ostream& out) {
  if (std::find(kLemmas.begin(), kLemmas.end(), o.lemma) == kLemmas.end()) {
    std::string list;
    for (const auto& l : kLemmas) list += (list.empty() ? "" : ", ") + l;
    throw ScenarioError("--lemma", "unknown selector '" + o.lemma + "'; valid selectors: " + list);
  }
  const Context c = make_context(o);
  Json extra = Json::object();
  const Certificate cert = certify_lemma(o.lemma, c, extra);
  Json j = certificate_to_json(cert);
  j["lemma"] = o.lemma;
  j["meta"] = meta(c);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(c.out / ("certificate_" + o.lemma + ".json"), j);
  out << std::setw(2) << j << "\n";
  return cert.pass ? 0 : 1;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const Context c = make_context(o);
  const Scenario& s = c.s;
  const Mat K = scenario_gain(s);
  Json runs = Json::array();
  for (std::size_t j = 0; j < s.x0.size(); ++j) {
    Trajectory traj;
    Json info;
    if (s.signal && s.signal->kind == "zeta") {
      const DestabilizerRun d = run_destabilizer(K, require_class(s), s.x0[j], s.signal->revolutions,
                                                 s.max_step.value_or(0.0));
      traj = d.traj;
      info["growth_per_rev"] = d.growth_per_rev;
      info["induced_signal"] = signal_to_json(d.induced_signal);
    } else {
      const ClosedLoop sys = ClosedLoop::make(s.A, s.B, K, scenario_signal(s));
      traj = propagate(sys, 0.0, s.x0[j], s.horizon, s.max_step.value_or(default_max_step(sys)));
    }
    traj.label = "x" + std::to_string(j);
    traj = attach_energy(traj);
    if (s.A.rows() == 2) {
      traj = polar_lift(traj);
      if (K.rows() == 1 && K(0, 1) < 0.0) traj = attach_F(traj, -K(0, 1));
    }
    const std::string name = "trajectory_" + std::to_string(j) + ".csv";
    std::ofstream csv(c.out / name);
    write_csv(csv, traj);
    const DecayFit fit = decay_rate(traj, traj.start());
    info["label"] = traj.label;
    info["csv"] = name;
    info["x0"] = vec_to_json(s.x0[j]);
    info["final_norm_ratio"] = traj.states.back().norm() / traj.states.front().norm();
    info["decay_fit"] = {{"gamma_hat", fit.gamma_hat},
                         {"C_hat", fit.C_hat},
                         {"residual", fit.residual},
                         {"accepted", fit.accepted},
                         {"samples", fit.samples}};
    info["decaying"] = fit.gamma_hat > 0.0;
    if (!(fit.gamma_hat > 0.0)) err << "warning: " << traj.label << " is not decaying (gamma_hat <= 0)\n";
    runs.push_back(info);
  }
  Json summary{{"meta", meta(c)}, {"gain", mat_to_json(K)}, {"horizon", s.horizon}, {"runs", runs}};
  write_json(c.out / "summary.json", summary);
  out << std::setw(2) << summary << "\n";
  return 0;
}

int cmd_threshold(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Scenario& s = c.s;
  const PeClass& cls = require_class(s);
  std::vector<double> grid = s.t_grid;
  if (grid.empty()) {
    for (int i = 1; i <= 30; ++i) grid.push_back(i * cls.T / 20.0);
  }
  const auto bat = battery(c);
  std::ofstream csv(c.out / "threshold.csv");
  csv << "t,regime,min_sv,scale,relative_min_sv,alpha1_min_sv,claim,worst_signal\n";
  Json rows = Json::array();
  bool all = true;
  for (double t : grid) {
    if (!(t > 0.0)) throw ScenarioError("/t_grid", "times must be positive");
    const ThresholdResult r = threshold_check(s.A, s.B, cls, t, bat);
    const double ones = gramian(s.A, s.B, PwcSignal::constant(1.0), t).min_sv;
    all = all && r.claim;
    csv << fmt(t) << "," << (r.adversarial ? "adversarial" : "battery") << "," << fmt(r.min_sv) << "," << fmt(r.scale)
        << "," << fmt(r.min_sv / r.scale) << "," << fmt(ones) << "," << (r.claim ? 1 : 0) << "," << r.worst_label << "\n";
    Json row = threshold_to_json(r);
    row["alpha1_min_sv"] = ones;
    rows.push_back(row);
  }
  Json j{{"meta", meta(c)}, {"threshold", cls.T - cls.mu}, {"T", cls.T}, {"mu", cls.mu}, {"rows", rows},
         {"all_claims_hold", all}};
  write_json(c.out / "threshold.json", j);
  out << std::setw(2) << j << "\n";
  return all ? 0 : 1;
}

int cmd_destabilize(const Options& o, std::ostream& out, std::ostream& err) {
  const Context c = make_context(o);
  const Scenario& s = c.s;
  const PeClass& cls = require_class(s);
  const Mat K = scenario_gain(s);
  if (K.rows() != 1 || K.cols() != 2) throw ScenarioError("/gain", "destabilize needs a 1x2 gain");
  QPartition::from_gain(K);
  const NuSearch nu = find_nu(K);
  const int revolutions = s.signal && s.signal->kind == "zeta" ? s.signal->revolutions
                                                               : static_cast<int>(param(s, "revolutions", 10));
  Json j;
  if (cls.ratio() > nu.nu_hat) {
    err << "warning: mu/T = " << cls.ratio() << " exceeds nu_hat = " << nu.nu_hat
        << "; the construction does not apply, reporting decay of alpha = mu/T instead\n";
    const Mat M = di_A() + cls.ratio() * di_B() * K;
    double rate = std::numeric_limits<double>::infinity();
    for (const auto& ev : matkit::eig(M)) rate = std::min(rate, -ev.real());
    const ClosedLoop sys = ClosedLoop::make(di_A(), di_B(), K, PwcSignal::constant(cls.ratio()));
    Trajectory traj = propagate(sys, 0.0, s.x0.front(), s.horizon, default_max_step(sys));
    std::ofstream csv(c.out / "destabilizer.csv");
    write_csv(csv, attach_energy(traj));
    j = {{"status", "not_applicable"},
         {"nu_hat", nu.nu_hat},
         {"ratio", cls.ratio()},
         {"K", mat_to_json(K)},
         {"constant_alpha_decay_rate", rate},
         {"final_norm_ratio", traj.states.back().norm() / traj.states.front().norm()}};
    j["meta"] = meta(c);
    write_json(c.out / "destabilizer.json", j);
    out << std::setw(2) << j << "\n";
    return 0;
  }
  const DestabilizerRun run = run_destabilizer(K, cls, s.x0.front(), revolutions, s.max_step.value_or(0.0));
  j = destabilizer_to_json(K, nu.nu_hat, run);
  j["status"] = run.growth_per_rev > 1.0 && run.pe.ok ? "destabilized" : "failed";
  j["meta"] = meta(c);
  write_json(c.out / "destabilizer.json", j);
  write_json(c.out / "induced_signal.json", signal_to_json(run.induced_signal));
  std::ofstream csv(c.out / "destabilizer.csv");
  write_csv(csv, attach_energy(run.traj));
  out << std::setw(2) << j << "\n";
  return run.growth_per_rev > 1.0 && run.pe.ok ? 0 : 1;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const Context c = make_context(o);
  const Scenario& s = c.s;
  if (!s.sweep) throw ScenarioError("/sweep", "required field is missing");
  static const std::vector<std::string> known{"k", "lambda", "rho", "mu", "T"};
  const auto& params = s.sweep->params;
  for (const auto& [name, vals] : params) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ScenarioError("/sweep/params/" + name, "unknown parameter (k, lambda, rho, mu, T)");
    }
  }
  long long total = params.empty() ? 0 : 1;
  for (const auto& pr : params) total *= static_cast<long long>(pr.second.size());
  const long long cells = std::min(total, s.sweep->max_cells);

  const std::string path = (c.out / "sweep.csv").string();
  std::ofstream csv(path);
  for (const auto& pr : params) csv << pr.first << ",";
  csv << "min_decay_rate,worst_signal,status\n";

  const PeClass base_cls = s.cls.value_or(PeClass::make(1.0, 0.5));
  const DiParams base = di_params(s);
  std::vector<std::string> lines(static_cast<std::size_t>(cells));
  parallel_for(lines.size(), c.workers, [&](std::size_t cell) {
    std::map<std::string, double> v{{"k", base.k}, {"lambda", base.lambda}, {"rho", base.rho},
                                    {"mu", base_cls.mu}, {"T", base_cls.T}};
    std::ostringstream line;
    std::size_t rem = cell;
    std::vector<double> picked(params.size());
    for (std::size_t q = params.size(); q-- > 0;) {
      const auto& vals = params[q].second;
      picked[q] = vals[rem % vals.size()];
      rem /= vals.size();
    }
    for (std::size_t q = 0; q < params.size(); ++q) {
      v[params[q].first] = picked[q];
      line << fmt(picked[q]) << ",";
    }
    try {
      const PeClass cls = PeClass::make(v["T"], v["mu"]);
      const Mat K = di_gain(cls, v["rho"], v["k"], v["lambda"]).K;
      const auto bat = make_battery(cls, s.battery_size, s.seed);
      double worst = std::numeric_limits<double>::infinity();
      std::string label;
      for (const auto& b : bat) {
        if (!b.signal.is_periodic()) continue;
        const double r = periodic_decay_rate(di_A(), di_B() * K, b.signal);
        if (r < worst) {
          worst = r;
          label = b.label;
        }
      }
      line << fmt(worst) << "," << label << ",ok";
    } catch (const Error& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      line << "nan,," << "invalid: " << msg;
    }
    lines[cell] = line.str();
  });
  for (const auto& l : lines) csv << l << "\n";
  if (cells < total) {
    err << "sweep: evaluated " << cells << " of " << total << " cells (max_cells reached)\n";
    out << path << "\n";
    return 3;
  }
  out << path << "\n";
  return 0;
}

int cmd_tune(const Options& o, std::ostream& out) {
  const Context c = make_context(o);
  const Scenario& s = c.s;
  const PeClass& cls = require_class(s);
  TuneOptions opt;
  opt.seed = s.seed;
  opt.workers = c.workers;
  opt.battery_size = static_cast<int>(param(s, "battery_size", s.raw.contains("battery") ? s.battery_size : 24));
  opt.x0_count = static_cast<int>(param(s, "x0_count", opt.x0_count));
  opt.horizon = param(s, "horizon_periods", opt.horizon);
  opt.search_budget = static_cast<int>(param(s, "search_budget", opt.search_budget));
  const double rho = s.gain && s.gain->kind == "di" ? s.gain->rho : param(s, "rho", 0.8 * cls.ratio() / 2.0);
  const TuneResult r = tune(cls, rho, opt);
  Json j{{"meta", meta(c)},
         {"found", r.found},
         {"rho", rho},
         {"k_star_hat", r.k_star_hat},
         {"lambda_star_hat", r.lambda_star_hat},
         {"k_pass", r.k_pass},
         {"lambda_pass", r.lambda_pass},
         {"log", r.log}};
  if (r.found) j["gain"] = gain_to_json("di", {{"rho", rho}, {"k", r.k_star_hat}, {"lambda", r.lambda_star_hat}},
                                        di_gain(cls, rho, r.k_star_hat, r.lambda_star_hat).K);
  write_json(c.out / "tune.json", j);
  out << std::setw(2) << j << "\n";
  return r.found ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pestab: stability of linear systems under persistently exciting gains"};
  app.set_version_flag("--version", std::string("pestab ") + kVersion);
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required();
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--workers", o.workers, "worker threads (default PESTAB_WORKERS)");
    sub->add_option("--tol", o.tol, "override the default tolerance");
  };
  auto* sim = app.add_subcommand("simulate", "propagate trajectories, write CSV and a summary");
  auto* cert = app.add_subcommand("certify", "run one numerical certificate");
  auto* thr = app.add_subcommand("threshold", "Gramian singularity across a time grid");
  auto* des = app.add_subcommand("destabilize", "state-feedback destabilizing signal for a planar gain");
  auto* swp = app.add_subcommand("sweep", "parameter grid of worst decay rates");
  auto* tun = app.add_subcommand("tune", "doubling search for a stabilizing double-integrator gain");
  for (auto* sub : {sim, cert, thr, des, swp, tun}) common(sub);
  cert->add_option("--lemma", o.lemma, "selector")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "pestab " << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(o, out, err);
    if (*cert) return cmd_certify(o, out);
    if (*thr) return cmd_threshold(o, out);
    if (*des) return cmd_destabilize(o, out, err);
    if (*swp) return cmd_sweep(o, out, err);
    if (*tun) return cmd_tune(o, out);
  } catch (const ScenarioError& e) {
    err << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    err << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "property failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pestab
