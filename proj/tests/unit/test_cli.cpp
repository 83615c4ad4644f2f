#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pestab/cli.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

fs::path scratch() {
  static int n = 0;
  const fs::path p = fs::temp_directory_path() / ("pestab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_scenario(const fs::path& dir, const std::string& text) {
  const fs::path f = dir / "scenario.json";
  std::ofstream(f) << text;
  return f;
}

Run cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"pestab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pestab::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Run run_scenario(const std::string& cmd, const std::string& text, const fs::path& dir, std::vector<std::string> extra = {}) {
  const fs::path f = write_scenario(dir, text);
  std::vector<std::string> args{cmd, "--scenario", f.string(), "--out-dir", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> v;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

const std::string kDi = R"({"system":{"preset":"double_integrator"},"class":{"T":1,"mu":0.5},)";

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("pestab 1.0.0") != std::string::npos);
  CHECK(cli({}).code == 2);
  CHECK(cli({"simulate"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
}

TEST_CASE("malformed and invalid scenarios exit 2") {
  const auto d = scratch();
  auto r = run_scenario("simulate", "{bad", d);
  CHECK(r.code == 2);
  CHECK(r.err.find("malformed JSON") != std::string::npos);

  r = cli({"simulate", "--scenario", (d / "missing.json").string()});
  CHECK(r.code == 2);

  r = run_scenario("simulate", kDi + R"("class":{"T":1,"mu":2}})", d);
  CHECK(r.code == 2);
}

TEST_CASE("certify selectors") {
  const auto d = scratch();
  auto r = run_scenario("certify", kDi + R"("gain":{"kind":"di","rho":0.2,"k":2,"lambda":2}})", d,
                        {"--lemma", "nosuch"});
  CHECK(r.code == 2);
  CHECK(r.err.find("valid selectors") != std::string::npos);
  CHECK(r.err.find("ff00") != std::string::npos);

  // rho above mu/2T violates the cone ordering
  r = run_scenario("certify", kDi + R"("gain":{"kind":"di","rho":0.3,"k":4,"lambda":2}})", d, {"--lemma", "c2"});
  CHECK(r.code == 2);

  r = run_scenario("certify", kDi + R"("gain":{"kind":"di","rho":0.2,"k":4,"lambda":2}})", d, {"--lemma", "c2"});
  CHECK(r.code == 0);
  const Json c2 = Json::parse(slurp(d / "certificate_c2.json"));
  CHECK(c2["pass"] == true);
  CHECK(c2["lemma"] == "c2");

  r = run_scenario("certify", kDi + R"("gain":{"kind":"di","rho":0.2,"k":2,"lambda":2},"battery":{"size":6}})", d,
                   {"--lemma", "ff00", "--seed", "3"});
  CHECK(r.code == 0);
  const Json ff = Json::parse(slurp(d / "certificate_ff00.json"));
  CHECK(ff["pass"] == true);
  CHECK(ff["measured"]["checked_pairs"].get<double>() > 0);
  for (const char* key : {"tool", "version", "seed", "tolerances", "scenario_hash"}) CHECK(ff["meta"].contains(key));
  CHECK(ff["meta"]["seed"] == 3);
  CHECK(ff["meta"]["version"] == "1.0.0");
}

TEST_CASE("technic table") {
  const auto d = scratch();
  const auto r = run_scenario("certify", kDi + R"("gain":{"kind":"explicit","K":[[-1,-1]]}})", d,
                              {"--lemma", "technic"});
  CHECK(r.code == 0);
  const auto rows = lines(d / "technic.csv");
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0].find(',') != std::string::npos);
}

TEST_CASE("destabilize") {
  const auto d = scratch();
  auto r = run_scenario("destabilize", kDi + R"("gain":{"kind":"explicit","K":[[1,-1]]}})", d);
  CHECK(r.code == 2);
  CHECK(r.err.find("A+bK is not Hurwitz") != std::string::npos);

  r = run_scenario("destabilize",
                   R"({"system":{"preset":"double_integrator"},"class":{"T":1,"mu":1},"gain":{"kind":"explicit","K":[[-1,-1]]}})",
                   d);
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);

  r = run_scenario("destabilize",
                   R"({"system":{"preset":"double_integrator"},"class":{"T":1,"mu":0.0745132162705},"gain":{"kind":"explicit","K":[[-1,-1]]},"x0":[[-1,0]]})",
                   d);
  CHECK(r.code == 0);
  const Json j = Json::parse(slurp(d / "destabilizer.json"));
  CHECK(j.dump().find("growth_per_rev") != std::string::npos);
  CHECK(fs::exists(d / "induced_signal.json"));
  CHECK(fs::exists(d / "destabilizer.csv"));
}

TEST_CASE("threshold csv") {
  const auto d = scratch();
  const auto r = run_scenario("threshold", kDi + R"("t_grid":[0.3,1.0],"battery":{"size":10}})", d);
  CHECK(r.code == 0);
  const auto rows = lines(d / "threshold.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "t,regime,min_sv,scale,relative_min_sv,alpha1_min_sv,claim,worst_signal");
  CHECK(rows[1].rfind("0.3,", 0) == 0);
}

TEST_CASE("sweep") {
  const std::string base = kDi + R"("gain":{"kind":"di","rho":0.2,"k":1},"battery":{"size":6},)";
  const auto d1 = scratch();
  const auto d2 = scratch();
  const std::string sw = base + R"("sweep":{"params":{"k":[1,2],"lambda":[1,2]}}})";
  CHECK(run_scenario("sweep", sw, d1, {"--workers", "1"}).code == 0);
  CHECK(run_scenario("sweep", sw, d2, {"--workers", "4"}).code == 0);
  const auto a = lines(d1 / "sweep.csv");
  CHECK(a == lines(d2 / "sweep.csv"));
  REQUIRE(a.size() == 5);
  CHECK(a[0] == "k,lambda,min_decay_rate,worst_signal,status");
  CHECK(a[1].rfind("1,1,", 0) == 0);
  CHECK(a[2].rfind("1,2,", 0) == 0);

  const auto d3 = scratch();
  CHECK(run_scenario("sweep", base + R"("sweep":{"params":{"k":[],"lambda":[1,2]}}})", d3).code == 0);
  CHECK(lines(d3 / "sweep.csv").size() == 1);

  const auto d4 = scratch();
  CHECK(run_scenario("sweep", base + R"("sweep":{"params":{"k":[1,2,4],"lambda":[1,2]},"max_cells":4}})", d4).code == 3);
}

TEST_CASE("simulate") {
  const auto d = scratch();
  auto r = run_scenario("simulate",
                        kDi + R"("gain":{"kind":"explicit","K":[[-1,-1]]},"signal":{"kind":"constant","value":0},"horizon":5})",
                        d);
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const Json s = Json::parse(slurp(d / "summary.json"));
  CHECK(s["runs"][0]["decaying"] == false);
  const auto rows = lines(d / "trajectory_0.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == "t,x1,x2,alpha,V,r,theta,F_theta");
  CHECK(rows[1].rfind("0,1,0,", 0) == 0);

  const auto d2 = scratch();
  r = run_scenario("simulate",
                   kDi + R"("gain":{"kind":"di","rho":0.2,"k":2,"lambda":2},"signal":{"kind":"duty","pattern":"front"},"horizon":20})",
                   d2);
  CHECK(r.code == 0);
  CHECK(Json::parse(slurp(d2 / "summary.json"))["runs"][0]["decaying"] == true);
}

TEST_CASE("binary entry point") {
  const char* bin = std::getenv("PESTAB_BIN");
  if (!bin) SKIP("PESTAB_BIN not set");
  const auto d = scratch();
  const fs::path f = write_scenario(d, "{bad");
  const std::string cmd = std::string(bin) + " simulate --scenario " + f.string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(WEXITSTATUS(std::system((std::string(bin) + " --version > /dev/null").c_str())) == 0);
}
