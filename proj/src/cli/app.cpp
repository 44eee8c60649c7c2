#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "output.hpp"
#include "smd/cli.hpp"
#include "smd/dp.hpp"
#include "smd/rl.hpp"

namespace smd::cli {

using nlohmann::json;

namespace {

// A bad value in the config or on the command line.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// ---------------------------------------------------------------------------
// Parameter records. Field names double as JSON keys; flags use dashes.

struct FospParams {
  std::string suite = "all";
  int instances = 100;
  int points = 20;
  double rho_mult = 4.0;
  double slack = 1e-7;
  bool perturb_measure = false;
  std::uint64_t seed = 1;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FospParams, suite, instances, points, rho_mult, slack, perturb_measure,
                                                seed, out)

struct RunParams {
  std::string instance = "quadratic_l1:5,1";
  std::string geometry = "euclidean";
  std::string schedule = "theorem1";
  std::string noise = "gaussian:0.1";
  long T = 1000;
  std::uint64_t seed = 1;
  long stride = 0;
  double bfbe_rho_mult = 3.0;
  bool lyapunov = false;
  bool phi_plus = false;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunParams, instance, geometry, schedule, noise, T, seed, stride,
                                                bfbe_rho_mult, lyapunov, phi_plus, out)

struct SweepParams {
  std::string methods = "sgd,smdr1,smdr2,clipsgd";
  int log2_min = -19;
  int log2_max = 7;
  long T = 10000;
  long d_f = 64;
  long d_e = 8;
  long n = 1000;
  long batch = 100;
  std::uint64_t data_seed = 1;
  std::uint64_t seed = 1;
  double clip_radius = 1.0;
  int threads = 1;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SweepParams, methods, log2_min, log2_max, T, d_f, d_e, n, batch,
                                                data_seed, seed, clip_radius, threads, out)

struct DpParams {
  std::string geometry = "both";
  std::string dims = "4,16,64,256";
  double epsilon = 1.0;
  double delta = 1e-5;
  long n = 1000;
  double G = 1.0;
  double c2 = 1.0;
  double c1 = 1.0;
  long T = 1000;
  int replicas = 20;
  double beta = 0.1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DpParams, geometry, dims, epsilon, delta, n, G, c2, c1, T, replicas,
                                                beta, seed, threads, out)

struct RlParams {
  std::string mdp = "gridworld";
  double gamma = 0.6;
  std::string algo = "smpg";
  std::string eta = "theory";
  long T = 1000;
  int batch = 0;
  int horizon = 0;
  std::uint64_t seed = 1;
  long stride = 0;
  bool bfbe = true;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RlParams, mdp, gamma, algo, eta, T, batch, horizon, seed, stride, bfbe,
                                                out)

struct ScheduleParams {
  std::string kind = "constant";
  long T = 100;
  double eta = 0.1;
  double ell = 1.0;
  double lambda0 = 1.0;
  double sigma2 = 1.0;
  double eta0 = 0.1;
  double q = 1.0;
  double a = 1.0;
  double d = 1.0;
  double mu = 1.0;
  double eps = 1e-3;
  double alpha = 2.0;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScheduleParams, kind, T, eta, ell, lambda0, sigma2, eta0, q, a, d, mu,
                                                eps, alpha, out)

std::string flag(const char* key) {
  std::string name = std::string("--") + key;
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

#define SMD_OPT(app, p, field, help) (app)->add_option(flag(#field), (p).field, help)->capture_default_str()

void bind(CLI::App* app, FospParams& p) {
  SMD_OPT(app, p, suite, "all, lemma1, lemma2 or gap")->check(CLI::IsMember({"all", "lemma1", "lemma2", "gap"}));
  SMD_OPT(app, p, instances, "random instances in the sandwich suite");
  SMD_OPT(app, p, points, "sampled points per instance");
  SMD_OPT(app, p, rho_mult, "sandwich suite uses rho = rho_mult * ell");
  SMD_OPT(app, p, slack, "tolerance on every inequality");
  app->add_flag(flag("perturb_measure"), p.perturb_measure, "scale the BFBE by 1/4 (negative control)");
  SMD_OPT(app, p, seed, "seed");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

void bind(CLI::App* app, RunParams& p) {
  SMD_OPT(app, p, instance, "instance spec, e.g. quadratic_l1:5,1 or simplex_quadratic:4,2");
  SMD_OPT(app, p, geometry, "euclidean, entropy or polynorm:p");
  SMD_OPT(app, p, schedule, "constant:eta, theorem1[:ell,lambda0,sigma2], square_summable:eta0,q, stich:a,d, "
                            "theorem3:mu,eps,alpha");
  SMD_OPT(app, p, noise, "none, gaussian:sigma or minibatch");
  SMD_OPT(app, p, T, "iterations");
  SMD_OPT(app, p, seed, "seed");
  SMD_OPT(app, p, stride, "checkpoint stride (0: T/100)");
  SMD_OPT(app, p, bfbe_rho_mult, "BFBE at rho = mult * ell");
  app->add_flag(flag("lyapunov"), p.lyapunov, "record the Lyapunov value");
  app->add_flag(flag("phi_plus"), p.phi_plus, "record Phi at the gradient-mapping point");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

void bind(CLI::App* app, SweepParams& p) {
  SMD_OPT(app, p, methods, "comma list of sgd, smdr1, smdr2, clipsgd");
  SMD_OPT(app, p, log2_min, "smallest step 2^log2_min");
  SMD_OPT(app, p, log2_max, "largest step 2^log2_max");
  SMD_OPT(app, p, T, "iterations per run");
  SMD_OPT(app, p, d_f, "feature dimension");
  SMD_OPT(app, p, d_e, "encoding dimension");
  SMD_OPT(app, p, n, "samples");
  SMD_OPT(app, p, batch, "minibatch size");
  SMD_OPT(app, p, data_seed, "data seed");
  SMD_OPT(app, p, seed, "minibatch seed");
  SMD_OPT(app, p, clip_radius, "ClipSGD radius");
  SMD_OPT(app, p, threads, "worker threads");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

void bind(CLI::App* app, DpParams& p) {
  SMD_OPT(app, p, geometry, "both, euclidean or entropy")->check(CLI::IsMember({"both", "euclidean", "entropy"}));
  SMD_OPT(app, p, dims, "comma list of dimensions");
  SMD_OPT(app, p, epsilon, "privacy epsilon");
  SMD_OPT(app, p, delta, "privacy delta");
  SMD_OPT(app, p, n, "dataset size");
  SMD_OPT(app, p, G, "gradient l2 bound");
  SMD_OPT(app, p, c2, "accountant constant c2");
  SMD_OPT(app, p, c1, "accountant constant c1");
  SMD_OPT(app, p, T, "iterations");
  SMD_OPT(app, p, replicas, "replicas per cell");
  SMD_OPT(app, p, beta, "report the (1 - beta) quantile");
  SMD_OPT(app, p, seed, "seed");
  SMD_OPT(app, p, threads, "worker threads");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

void bind(CLI::App* app, RlParams& p) {
  SMD_OPT(app, p, mdp, "gridworld or garnet:S,A,b,seed");
  SMD_OPT(app, p, gamma, "discount");
  SMD_OPT(app, p, algo, "pspg or smpg")->check(CLI::IsMember({"pspg", "smpg"}));
  SMD_OPT(app, p, eta, "theory (1/(2L)) or a number");
  SMD_OPT(app, p, T, "iterations");
  SMD_OPT(app, p, batch, "episodes per gradient (0: exact gradients)");
  SMD_OPT(app, p, horizon, "episode length (0: default)");
  SMD_OPT(app, p, seed, "seed");
  SMD_OPT(app, p, stride, "record stride (0: T/100)");
  SMD_OPT(app, p, bfbe, "record the BFBE in the algorithm's geometry");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

void bind(CLI::App* app, ScheduleParams& p) {
  SMD_OPT(app, p, kind, "constant, theorem1, square_summable, stich or theorem3")
      ->check(CLI::IsMember({"constant", "theorem1", "square_summable", "stich", "theorem3"}));
  SMD_OPT(app, p, T, "horizon");
  SMD_OPT(app, p, eta, "constant step");
  SMD_OPT(app, p, ell, "smoothness constant");
  SMD_OPT(app, p, lambda0, "initial gap term");
  SMD_OPT(app, p, sigma2, "noise variance");
  SMD_OPT(app, p, eta0, "square-summable initial step");
  SMD_OPT(app, p, q, "square-summable exponent");
  SMD_OPT(app, p, a, "stich a");
  SMD_OPT(app, p, d, "stich d");
  SMD_OPT(app, p, mu, "growth modulus");
  SMD_OPT(app, p, eps, "target accuracy");
  SMD_OPT(app, p, alpha, "growth exponent");
  SMD_OPT(app, p, out, "CSV path (stdout when empty)");
}

#undef SMD_OPT

// ---------------------------------------------------------------------------
// Commands

int cmd_fosp_check(const FospParams& p, std::ostream& out) {
  if (p.points < 1 || (p.instances < 1 && (p.suite == "all" || p.suite == "lemma1"))) {
    throw UsageError("fosp-check needs at least one instance and one sample point");
  }
  if (!(p.slack >= 0.0)) throw UsageError("slack must be nonnegative");
  const double scale = p.perturb_measure ? 0.25 : 1.0;
  const auto euc = DistanceGenerator::euclidean();
  CsvTable table({"suite", "case", "geometry", "rho", "samples", "violations", "min_ratio", "max_ratio", "reference"});
  int violations = 0;
  const bool all = p.suite == "all";

  if (all || p.suite == "lemma1") {
    if (!(p.rho_mult > 3.0)) throw UsageError("rho_mult must exceed 3 (the sandwich constant needs rho > 3 ell)");
    for (int i = 0; i < p.instances; ++i) {
      const auto inst = make_random_quadratic_l1(1 + i % 10, replica_seed(p.seed, static_cast<std::uint64_t>(i)),
                                                 i % 2 == 0, false);
      const double ell = inst.ell_for(euc);
      const auto r = verify_lemma1(inst, euc, p.points, ell, p.rho_mult * ell, 1.0,
                                   replica_seed(p.seed, static_cast<std::uint64_t>(i)), p.slack);
      violations += r.violations;
      table.row().add("lemma1").add(inst.name + "#" + std::to_string(i)).add("euclidean").add(p.rho_mult * ell);
      table.add(r.samples).add(r.violations).add(r.min_ratio).add(r.max_ratio).add(r.constant);
    }
  }

  if (all || p.suite == "lemma2") {
    struct Case {
      CompositeInstance inst;
      std::vector<std::string> geometries;
    };
    std::vector<Case> cases;
    cases.push_back({make_random_quadratic_l1(5, p.seed, true), {"euclidean"}});
    cases.push_back({make_random_quadratic_l1(4, p.seed, false), {"euclidean"}});
    cases.push_back({make_random_simplex_quadratic(6, p.seed), {"euclidean", "entropy"}});
    cases.push_back({make_bfbe_gap_instance(), {"euclidean"}});
    cases.push_back({make_dp_simplex_instance(8, p.seed), {"euclidean", "entropy"}});
    cases.push_back({make_instance("policy:garnet:4,3,2," + std::to_string(p.seed)), {"euclidean", "entropy"}});
    cases.push_back({make_autoencoder(6, 2, 40, p.seed), {"euclidean", "polynorm:1", "polynorm:2"}});
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto& inst = cases[c].inst;
      for (const auto& gname : cases[c].geometries) {
        const auto dgf = make_geometry(gname, inst);
        double ell = 1.0;
        try {
          ell = inst.ell_for(dgf);
        } catch (const DomainError&) {
          // No global constant (autoencoder); the inequality needs none.
        }
        for (double mult : {1.0, 4.0}) {
          const double rho = mult * (ell > 0.0 ? ell : 1.0);
          Rng rng(replica_seed(p.seed, c), Stream::kSampling);
          int bad = 0;
          double min_ratio = std::numeric_limits<double>::infinity();
          for (int k = 0; k < p.points; ++k) {
            const Vector x = sample_feasible_point(inst, rng);
            const double lhs = 2.0 * scale * bfbe(x, 0.5 * rho, inst, dgf);
            const double rhs = bgm(x, rho, inst, dgf);
            if (lhs < rhs - p.slack * (1.0 + rhs)) ++bad;
            if (rhs > 0.0) min_ratio = std::min(min_ratio, lhs / rhs);
          }
          violations += bad;
          table.row().add("lemma2").add(inst.name).add(gname).add(rho).add(p.points).add(bad).add(min_ratio);
          table.add(std::numeric_limits<double>::quiet_NaN()).add(1.0);
        }
      }
    }
  }

  if (all || p.suite == "gap") {
    const auto inst = make_bfbe_gap_instance();
    for (double rho : {1.0, 1.5, 2.0}) {
      for (int k = 1; k <= 10; ++k) {
        const double x = 0.1 * k;
        const Vector pt = Vector::Constant(1, x);
        const double d = scale * bfbe(pt, rho, inst, euc);
        const double g = bgm(pt, rho, inst, euc);
        const double d_ref = gap_instance_bfbe(x, rho), g_ref = gap_instance_bgm(x, rho);
        const bool ok = std::abs(d - d_ref) <= 1e-9 && std::abs(g - g_ref) <= 1e-9;
        violations += ok ? 0 : 1;
        char label[16];
        std::snprintf(label, sizeof label, "x=%.1f", x);
        table.row().add("gap").add(label).add("euclidean").add(rho).add(1).add(ok ? 0 : 1);
        table.add(d / g).add(d / g).add(d_ref / g_ref);
      }
    }
  }

  json summary{{"violations", violations}};
  emit(table, p.out, "fosp-check", json(p), summary, out);
  return violations == 0 ? kOk : kViolation;
}

Schedule build_schedule(const std::string& spec, const CompositeInstance& inst, const DistanceGenerator& dgf,
                        const NoiseModel& noise, long T) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> f;
  if (colon != std::string::npos) {
    for (const auto& item : split_list(spec.substr(colon + 1))) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size() || used == 0) throw UsageError("bad number '" + item + "' in schedule");
      f.push_back(v);
    }
  }
  auto need = [&](std::size_t n) {
    if (f.size() != n) throw UsageError("schedule '" + spec + "' needs " + std::to_string(n) + " fields");
  };
  if (kind == "constant") {
    need(1);
    return Schedule::constant(f[0]);
  }
  if (kind == "theorem1") {
    if (f.empty()) {
      const double ell = inst.ell_for(dgf);
      const double lambda0 = theorem1_lambda0(inst, dgf, inst.x0);
      const double sigma2 = StochasticOracle(inst, noise, 0).variance_bound(dgf);
      if (std::isnan(sigma2)) throw UsageError("theorem1 needs a declared noise variance (not minibatch)");
      return Schedule::theorem1(ell, lambda0, sigma2, T);
    }
    need(3);
    return Schedule::theorem1(f[0], f[1], f[2], T);
  }
  if (kind == "square_summable") {
    need(2);
    return Schedule::square_summable(f[0], f[1]);
  }
  if (kind == "stich") {
    need(2);
    return Schedule::stich(f[0], f[1], T);
  }
  if (kind == "theorem3") {
    need(3);
    return Schedule::theorem3(f[0], f[1], f[2], inst.ell_for(dgf), T);
  }
  throw UsageError("unknown schedule '" + spec + "'");
}

int cmd_run(const RunParams& p, std::ostream& out) {
  if (p.T < 1) throw UsageError("T must be at least 1");
  const auto inst = make_instance(p.instance);
  const auto dgf = make_geometry(p.geometry, inst);
  const auto noise = make_noise(p.noise);
  const auto schedule = build_schedule(p.schedule, inst, dgf, noise, p.T);
  RunConfig cfg;
  cfg.stride = p.stride;
  cfg.store_iterates = false;
  cfg.lyapunov = p.lyapunov;
  cfg.phi_plus = p.phi_plus;
  cfg.bfbe_rho = p.bfbe_rho_mult * inst.ell_for(dgf);
  const auto rec = run_smd(inst, dgf, noise, schedule, p.T, p.seed, cfg);

  CsvTable table({"t", "eta", "phi", "bfbe", "lyapunov", "phi_plus"});
  for (const auto& cp : rec.checkpoints) {
    table.row().add(cp.t).add(cp.eta).add(cp.phi).add(cp.bfbe).add(cp.lyapunov).add(cp.phi_plus);
  }
  json summary{{"status", rec.status},
               {"diverged", rec.diverged},
               {"selected_index", rec.selected_index},
               {"final_phi", rec.final_phi},
               {"sum_eta", rec.sum_eta},
               {"schedule", schedule.describe()},
               {"noise", noise.describe()},
               {"geometry", dgf.name()}};
  emit(table, p.out, "run", json(p), summary, out);
  return rec.status.rfind("solver_error", 0) == 0 ? kSolverFailure : kOk;
}

int cmd_sweep(const SweepParams& p, std::ostream& out) {
  SweepOptions opt;
  opt.methods.clear();
  for (const auto& name : split_list(p.methods)) opt.methods.push_back(parse_sweep_method(name));
  opt.log2_min = p.log2_min;
  opt.log2_max = p.log2_max;
  opt.T = p.T;
  opt.seed = p.seed;
  opt.clip_radius = p.clip_radius;
  opt.threads = p.threads;
  const auto inst = make_autoencoder(p.d_f, p.d_e, p.n, p.data_seed, p.batch);
  const auto cells = step_size_sweep(inst, opt);

  CsvTable table({"method", "log2_eta", "eta", "final_F", "diverged"});
  for (const auto& c : cells) {
    table.row().add(sweep_method_name(c.method)).add(c.log2_eta).add(c.eta);
    table.add(c.diverged ? std::string("diverged") : format_double(c.final_loss)).add(c.diverged);
  }
  json good = json::object();
  for (auto m : opt.methods) good[sweep_method_name(m)] = good_step_sizes(cells, m);
  emit(table, p.out, "sweep", json(p), json{{"good_log2_eta_within_2x_best", good}}, out);
  return kOk;
}

int cmd_dp(const DpParams& p, std::ostream& out) {
  std::vector<Index> dims;
  for (const auto& item : split_list(p.dims)) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || used == 0 || v < 1) throw UsageError("bad dimension '" + item + "'");
    dims.push_back(v);
  }
  if (dims.empty()) throw UsageError("dims must not be empty");
  PrivacyBudget budget;
  budget.epsilon = p.epsilon, budget.delta = p.delta, budget.n = p.n, budget.G = p.G, budget.c2 = p.c2, budget.c1 = p.c1;
  std::vector<DpGeometry> geometries;
  if (p.geometry != "entropy") geometries.push_back(DpGeometry::Euclidean);
  if (p.geometry != "euclidean") geometries.push_back(DpGeometry::Entropy);
  const auto scan = dimension_scan(dims, budget, p.T, p.replicas, p.seed, p.beta, p.threads, geometries);

  CsvTable table({"dim", "geometry", "mean_bfbe", "quantile_bfbe", "ratio_l2_over_entropy"});
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const auto& r = scan.rows[i];
    const double ratio = scan.ratio.empty() ? std::numeric_limits<double>::quiet_NaN() : scan.ratio[i / geometries.size()];
    table.row().add(static_cast<long long>(r.dim)).add(dp_geometry_name(r.geometry)).add(r.mean).add(r.quantile);
    table.add(ratio);
  }
  json summary{{"sigma2", scan.sigma2}, {"notes", calibration_notes(budget, p.T)}};
  if (!scan.ratio.empty()) summary["spearman"] = scan.spearman;
  emit(table, p.out, "dp", json(p), summary, out);
  return kOk;
}

int cmd_rl(const RlParams& p, std::ostream& out) {
  const auto mdp = make_mdp(p.mdp, p.gamma);
  PolicyRunConfig cfg;
  cfg.T = p.T;
  if (p.eta != "theory") {
    std::size_t used = 0;
    try {
      cfg.eta = std::stod(p.eta, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != p.eta.size() || !(cfg.eta > 0.0)) throw UsageError("eta must be 'theory' or positive");
  }
  if (p.T < 1 || p.batch < 0 || p.horizon < 0) throw UsageError("T >= 1, batch >= 0 and horizon >= 0 required");
  cfg.batch = p.batch;
  cfg.horizon = p.horizon;
  cfg.seed = p.seed;
  cfg.stride = p.stride;
  cfg.bfbe = p.bfbe;
  const auto algo = parse_policy_algo(p.algo);
  const auto res = run_policy_optimization(mdp, algo, cfg);

  CsvTable table({"t", "V_p", "gap", "bfbe", "var_frobenius", "var_2inf"});
  for (const auto& r : res.rows) {
    table.row().add(r.t).add(r.value).add(r.gap).add(r.bfbe).add(r.var_frobenius).add(r.var_2inf);
  }
  const auto c = smoothness_constants(mdp);
  json summary{{"eta", res.eta},         {"V_star", res.v_star}, {"L_F", c.L_F},
               {"L_21", c.L_21},         {"states", mdp.S},     {"actions", mdp.A},
               {"min_entry", res.min_entry}};
  emit(table, p.out, "rl", json(p), summary, out);
  return kOk;
}

int cmd_schedule_dump(const ScheduleParams& p, std::ostream& out) {
  if (p.T < 1) throw UsageError("T must be at least 1");
  Schedule s = Schedule::constant(p.eta);
  if (p.kind == "theorem1") s = Schedule::theorem1(p.ell, p.lambda0, p.sigma2, p.T);
  if (p.kind == "square_summable") s = Schedule::square_summable(p.eta0, p.q);
  if (p.kind == "stich") s = Schedule::stich(p.a, p.d, p.T);
  if (p.kind == "theorem3") s = Schedule::theorem3(p.mu, p.eps, p.alpha, p.ell, p.T);
  CsvTable table({"t", "eta"});
  for (long t = 0; t < p.T; ++t) table.row().add(t).add(s.eta(t));
  emit(table, p.out, "schedule-dump", json(p), json{{"schedule", s.describe()}}, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// Config loading and dispatch

// Rejects keys the parameter record does not know.
template <typename Params>
Params params_from_json(const json& config) {
  if (!config.is_object()) throw UsageError("config must be a JSON object");
  const json known = Params{};
  for (const auto& [key, value] : config.items()) {
    if (!known.contains(key)) throw UsageError("unknown config key '" + key + "'");
  }
  try {
    return config.get<Params>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

json load_config_file(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("config")) {
    if (doc.contains("command") && doc["command"] != command) {
      throw UsageError("config " + path + " belongs to '" + doc["command"].get<std::string>() + "'");
    }
    return doc["config"];
  }
  return doc;
}

int dispatch(const std::string& command, const json& config, std::ostream& out) {
  if (command == "fosp-check") return cmd_fosp_check(params_from_json<FospParams>(config), out);
  if (command == "run") return cmd_run(params_from_json<RunParams>(config), out);
  if (command == "sweep") return cmd_sweep(params_from_json<SweepParams>(config), out);
  if (command == "dp") return cmd_dp(params_from_json<DpParams>(config), out);
  if (command == "rl") return cmd_rl(params_from_json<RlParams>(config), out);
  if (command == "schedule-dump") return cmd_schedule_dump(params_from_json<ScheduleParams>(config), out);
  throw UsageError("unknown command '" + command + "'");
}

// Finds the --config value given to the subcommand, if any.
std::string find_config_flag(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

template <typename Params>
CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Params& params,
                      std::string& config_path) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", config_path, "JSON config (a bare object or a .meta.json sidecar); flags override it");
  bind(sub, params);
  return sub;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic mirror descent experiments", "smd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FospParams fosp;
  RunParams runp;
  SweepParams sweep;
  DpParams dp;
  RlParams rl;
  ScheduleParams sched;
  std::string config_path, replay_path, replay_out;

  try {
    // Config values become the defaults that flags override.
    const std::string config_file = find_config_flag(args);
    if (!config_file.empty() && !args.empty()) {
      const std::string& command = args[0];
      const json config = load_config_file(config_file, command);
      if (command == "fosp-check") fosp = params_from_json<FospParams>(config);
      else if (command == "run") runp = params_from_json<RunParams>(config);
      else if (command == "sweep") sweep = params_from_json<SweepParams>(config);
      else if (command == "dp") dp = params_from_json<DpParams>(config);
      else if (command == "rl") rl = params_from_json<RlParams>(config);
      else if (command == "schedule-dump") sched = params_from_json<ScheduleParams>(config);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  auto* c_fosp = add_command(app, "fosp-check", "verify the stationarity-measure inequalities", fosp, config_path);
  auto* c_run = add_command(app, "run", "one stochastic mirror descent run", runp, config_path);
  auto* c_sweep = add_command(app, "sweep", "step-size sweep on the autoencoder", sweep, config_path);
  auto* c_dp = add_command(app, "dp", "differentially private dimension scan", dp, config_path);
  auto* c_rl = add_command(app, "rl", "policy optimisation on a tabular MDP", rl, config_path);
  auto* c_sched = add_command(app, "schedule-dump", "tabulate a step-size schedule", sched, config_path);
  auto* c_replay = app.add_subcommand("replay", "regenerate a CSV from its .meta.json sidecar");
  c_replay->add_option("sidecar", replay_path, "path to <csv>.meta.json")->required();
  c_replay->add_option("--out", replay_out, "write here instead of the recorded path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_replay->parsed()) {
      std::ifstream in(replay_path);
      if (!in) throw UsageError("cannot read " + replay_path);
      json meta;
      try {
        meta = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError(replay_path + " is not valid JSON: " + e.what());
      }
      if (!meta.contains("command") || !meta.contains("config")) throw UsageError(replay_path + " is not a sidecar");
      json config = meta["config"];
      if (!replay_out.empty()) config["out"] = replay_out;
      return dispatch(meta["command"].get<std::string>(), config, out);
    }
    if (c_fosp->parsed()) return dispatch("fosp-check", json(fosp), out);
    if (c_run->parsed()) return dispatch("run", json(runp), out);
    if (c_sweep->parsed()) return dispatch("sweep", json(sweep), out);
    if (c_dp->parsed()) return dispatch("dp", json(dp), out);
    if (c_rl->parsed()) return dispatch("rl", json(rl), out);
    if (c_sched->parsed()) return dispatch("schedule-dump", json(sched), out);
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace smd::cli
