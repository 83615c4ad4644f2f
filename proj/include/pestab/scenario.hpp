#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pestab/error.hpp"
#include "pestab/json_io.hpp"

namespace pestab {

/// Invalid scenario input; `pointer` is the JSON pointer of the offending value.
class ScenarioError : public DomainError {
 public:
  ScenarioError(const std::string& pointer, const std::string& message)
      : DomainError(pointer.empty() ? message : pointer + ": " + message), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct GainSpec {
  std::string kind;  // di | neutral | multi | explicit
  double rho = 0.0;
  double k = 1.0;
  double lambda = 1.0;
  double r = 1.0;
  Mat K;  // explicit only
};

struct SignalSpec {
  std::string kind;  // constant | duty | pwc | zeta
  double value = 1.0;
  double phase = 0.0;
  double on_value = 1.0;
  DutyPattern pattern = DutyPattern::front();
  std::optional<PwcSignal> pwc;
  int revolutions = 10;
};

struct SweepSpec {
  std::vector<std::pair<std::string, std::vector<double>>> params;  // in key order
  long long max_cells = 10000;
};

struct Scenario {
  Json raw;
  std::string preset;  // empty for custom systems
  Mat A;
  Mat B;
  std::optional<GainSpec> gain;
  std::optional<SignalSpec> signal;
  std::optional<PeClass> cls;
  double horizon = 10.0;
  std::vector<Vec> x0;
  std::optional<double> max_step;
  std::uint64_t seed = 1;
  int battery_size = 50;
  double tol = 1e-9;
  std::vector<double> t_grid;
  Json params = Json::object();
  std::optional<SweepSpec> sweep;
};

Scenario parse_scenario(const Json& j);
Scenario load_scenario(const std::string& path);

/// Gain matrix described by the scenario's gain block.
Mat scenario_gain(const Scenario& s);

/// Open-loop signal described by the scenario's signal block (not zeta).
PwcSignal scenario_signal(const Scenario& s);

const PeClass& require_class(const Scenario& s);

/// Number parameter from "params", or the fallback.
double param(const Scenario& s, const std::string& key, double fallback);

}  // namespace pestab
