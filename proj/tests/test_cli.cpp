#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smd/cli.hpp"

using namespace smd;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "smd_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("schedule-dump") {
  const auto r = call({"schedule-dump", "--kind", "theorem1", "--ell", "1", "--lambda0", "1", "--sigma2", "1", "--T", "100"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "t,eta");
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line == std::to_string(rows) + ",0.10000000000000001");
    ++rows;
  }
  CHECK(rows == 100);
  const auto stich = call({"schedule-dump", "--kind", "stich", "--a", "1", "--d", "2", "--T", "4"});
  CHECK(stich.out == "t,eta\n0,0.5\n1,0.5\n2,0.25\n3,0.20000000000000001\n");
}

TEST_CASE("usage errors exit 2") {
  CHECK(call({"run", "--unknown-flag", "1"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"fosp-check", "--points", "0"}).code == 2);
  CHECK(call({"fosp-check", "--instances", "0", "--suite", "lemma1"}).code == 2);
  CHECK(call({"run", "--instance", "nonsense:1"}).code == 2);
  CHECK(call({"run", "--schedule", "constant"}).code == 2);
  CHECK(call({"rl", "--eta", "fast"}).code == 2);
  CHECK(call({"dp", "--dims", "4,x"}).code == 2);
  CHECK(call({"schedule-dump", "--kind", "bogus"}).code == 2);
  const auto cfg = scratch("bad.json");
  std::ofstream(cfg) << R"({"T": 10, "speed": 3})";
  CHECK(call({"run", "--config", cfg.string()}).code == 2);
  std::ofstream(cfg) << "{not json";
  CHECK(call({"run", "--config", cfg.string()}).code == 2);
}

TEST_CASE("fosp-check") {
  const auto gap = call({"fosp-check", "--suite", "gap"});
  CHECK(gap.code == 0);
  CHECK(gap.out.find("gap,x=0.5,euclidean,1,1,0,5,5,5\n") != std::string::npos);
  CHECK(call({"fosp-check", "--suite", "gap", "--perturb-measure"}).code == 1);
  CHECK(call({"fosp-check", "--suite", "lemma2", "--points", "5", "--perturb-measure"}).code == 1);
  CHECK(call({"fosp-check", "--instances", "10", "--points", "5"}).code == 0);
}

TEST_CASE("identical runs give identical bytes; sidecars replay") {
  const auto a = scratch("a.csv"), b = scratch("b.csv"), c = scratch("c.csv");
  const std::vector<std::string> base = {"run", "--instance", "simplex_quadratic:4,2", "--geometry", "entropy",
                                         "--T", "300", "--seed", "5"};
  auto with_out = [&](const fs::path& p) {
    auto v = base;
    v.push_back("--out");
    v.push_back(p.string());
    return v;
  };
  REQUIRE(call(with_out(a)).code == 0);
  REQUIRE(call(with_out(b)).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(fs::exists(cli::sidecar_path(a.string())));

  REQUIRE(call({"replay", cli::sidecar_path(a.string()), "--out", c.string()}).code == 0);
  CHECK(slurp(a) == slurp(c));

  // Config supplies defaults, flags win.
  const auto d = scratch("d.csv");
  REQUIRE(call({"run", "--config", cli::sidecar_path(a.string()), "--T", "50", "--out", d.string()}).code == 0);
  const auto meta = nlohmann::json::parse(slurp(cli::sidecar_path(d.string())));
  CHECK(meta["config"]["T"] == 50);
  CHECK(meta["config"]["geometry"] == "entropy");
  CHECK(meta["config"]["seed"] == 5);

  const auto e = scratch("e.csv");
  REQUIRE(call({"rl", "--mdp", "garnet:4,3,2,7", "--T", "30", "--batch", "10", "--out", e.string()}).code == 0);
  const auto f = scratch("f.csv");
  REQUIRE(call({"replay", cli::sidecar_path(e.string()), "--out", f.string()}).code == 0);
  CHECK(slurp(e) == slurp(f));
}

TEST_CASE("specs") {
  CHECK(cli::make_instance("quadratic_l1:3,1").dim == 3);
  CHECK(cli::make_instance("policy:gridworld").dim == 80);
  CHECK(cli::make_instance("policy:garnet:3,2,2,1@0.5").dim == 6);
  CHECK(cli::make_geometry("entropy", cli::make_instance("policy:gridworld")).kind() ==
        DgfKind::ProductSimplexEntropy);
  CHECK(cli::make_geometry("polynorm:2", cli::make_instance("gap")).growth_exponent() == 2.0);
  CHECK_THROWS_AS(cli::make_geometry("kl", cli::make_instance("gap")), std::invalid_argument);
  CHECK(cli::make_noise("gaussian:0.5").sigma == 0.5);
  CHECK_THROWS_AS(cli::make_noise("gaussian:-1"), std::invalid_argument);
  CHECK(cli::parse_sweep_method("smdr2") == cli::SweepMethod::SMDr2);
}

TEST_CASE("constant-step gradient descent on a quadratic: stable below 2/ell") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 4.0, 1.0;
  const auto inst = make_quadratic_l1(a, 0.0, FeasibleSet::all_space(), Vector::Ones(2));
  RunConfig cfg;
  cfg.bfbe = false;
  cfg.enforce_step_cap = false;
  cfg.store_iterates = false;
  for (double eta : {0.05, 0.25, 0.45, 0.49}) {
    const auto r = run_smd(inst, DistanceGenerator::euclidean(), NoiseModel::none(), Schedule::constant(eta), 3000, 1, cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.final_phi - *inst.phi_star < 1e-10);
  }
  for (double eta : {0.51, 0.6, 1.0}) {
    const auto r = run_smd(inst, DistanceGenerator::euclidean(), NoiseModel::none(), Schedule::constant(eta), 3000, 1, cfg);
    CHECK(r.diverged);
  }
}

TEST_CASE("sweep plumbing") {
  const auto inst = make_autoencoder(6, 2, 30, 3, 10);
  cli::SweepOptions opt;
  opt.log2_min = -6;
  opt.log2_max = -4;
  opt.T = 50;
  const auto cells = cli::step_size_sweep(inst, opt);
  REQUIRE(cells.size() == 12);
  CHECK(cells[0].method == cli::SweepMethod::SGD);
  CHECK(cells[0].log2_eta == -6);
  CHECK(cells[11].method == cli::SweepMethod::ClipSGD);
  opt.threads = 3;
  const auto again = cli::step_size_sweep(inst, opt);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].final_loss == again[i].final_loss);
  std::vector<cli::SweepCell> fake = {{cli::SweepMethod::SGD, 0, 1.0, 1.0, false},
                                      {cli::SweepMethod::SGD, 1, 2.0, 1.9, false},
                                      {cli::SweepMethod::SGD, 2, 4.0, 2.5, false},
                                      {cli::SweepMethod::SGD, 3, 8.0, 0.0, true}};
  CHECK(cli::good_step_sizes(fake, cli::SweepMethod::SGD) == std::vector<int>{0, 1});

  const auto out = scratch("sweep.csv");
  REQUIRE(call({"sweep", "--T", "20", "--log2-min", "-8", "--log2-max", "-7", "--d-f", "6", "--d-e", "2", "--n", "30",
                "--batch", "10", "--out", out.string()})
              .code == 0);
  CHECK(slurp(out).rfind("method,log2_eta,eta,final_F,diverged\nsgd,-8,", 0) == 0);
}
