// Command-line driver: experiment sweeps, single runs, spectral diagnostics,
// kernel-matching demo and the iterative-vs-recurrence oracle check.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dclkr/bench.hpp"
#include "dclkr/datagen.hpp"
#include "dclkr/distill.hpp"
#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"
#include "dclkr/protocols.hpp"

namespace {

using namespace dclkr;
using json = nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitCoverage = 3;
constexpr int kExitCheckFailed = 4;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  double beta = 1.0;
  double alpha_n0 = 1.0;
};

struct SweepFlags {
  std::string task;
  std::string algorithms;
  std::vector<int> m_values;
  int repetitions = 0;
  Index test_size = 0;
  unsigned workers = 0;
  bool no_timing = false;
  bool trace = false;
  std::string rounds_rule;
  int m = 10;
  int repetition = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI config file ([sweep] and per-algorithm sections)");
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--out", f.out, "Output path (default stdout)");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--beta", f.beta, "Public-input tilt in (0,1]");
  cmd->add_option("--alpha-n0", f.alpha_n0, "Multiplier on the public-input count rule");
}

void add_sweep_flags(CLI::App* cmd, SweepFlags& f) {
  cmd->add_option("--task", f.task, "toy1d or toy3d");
  cmd->add_option("--algorithms", f.algorithms, "Comma list of dcl-kr,central-krr,central-krgd,dc-ny,dkrr-ny-cm");
  cmd->add_option("--test-size", f.test_size, "Test sample size");
  cmd->add_option("--rounds-rule", f.rounds_rule, "DCL-KR schedule: rounds or total-iterations")
      ->check(CLI::IsMember({"rounds", "total-iterations"}));
  cmd->add_flag("--no-timing", f.no_timing, "Write wall_ms as 0 so output is reproducible byte for byte");
  cmd->add_flag("--trace", f.trace, "Also emit per-round DCL-KR records");
}

bench::SweepConfig build_config(const CommonFlags& c, const SweepFlags& s, CLI::App* cmd) {
  TaskSpec task = TaskSpec::toy1d();
  if (!s.task.empty()) task = TaskSpec::parse(s.task);
  bench::SweepConfig cfg = bench::SweepConfig::defaults_for(task);
  if (!c.config.empty()) cfg = bench::load_sweep_config(c.config, cfg);
  if (!s.task.empty() && cfg.task.kind != task.kind) {
    cfg.task = task;
    cfg.constants = bench::SweepConfig::default_constants(task.kind);
  }
  if (cmd->count("--seed")) cfg.seed = c.seed;
  if (cmd->count("--beta")) cfg.beta = c.beta;
  if (cmd->count("--alpha-n0")) cfg.n0_alpha = c.alpha_n0;
  if (!s.algorithms.empty()) {
    cfg.algorithms.clear();
    std::stringstream ss(s.algorithms);
    std::string name;
    while (std::getline(ss, name, ',')) cfg.algorithms.push_back(bench::parse_algorithm(name));
  }
  const auto given = [cmd](const char* name) {
    return cmd->get_option_no_throw(name) != nullptr && cmd->count(name) > 0;
  };
  if (given("--m-values")) cfg.m_values = s.m_values;
  if (given("--repetitions")) cfg.repetitions = s.repetitions;
  if (given("--workers")) cfg.workers = s.workers;
  if (cmd->count("--test-size")) cfg.test_size = s.test_size;
  if (!s.rounds_rule.empty()) {
    cfg.rounds_rule = s.rounds_rule == "rounds" ? bench::RoundsRule::Rounds : bench::RoundsRule::TotalIterations;
  }
  if (s.no_timing) cfg.record_timing = false;
  if (s.trace) cfg.trace_rounds = true;
  cfg.validate();
  return cfg;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError("cannot open output '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void emit_records(const CommonFlags& c, const std::vector<bench::RunRecord>& records) {
  Output out(c.out);
  if (c.format == "json") {
    bench::write_json(out.stream(), records);
  } else {
    bench::write_csv(out.stream(), records);
  }
}

void emit_json(const CommonFlags& c, const json& doc) {
  Output out(c.out);
  out.stream() << doc.dump(2) << '\n';
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not a number");
    }
  }
  return out;
}

struct DiagnoseFlags {
  std::string kernel = "min";
  int dim = 1;
  double bandwidth = 0.2;
  Index n = 2000;
  std::string sampling = "grid";
  std::string lambdas = "0.1,0.01,0.001";
  std::string epsilons = "0.01,0.03,0.1,0.3";
  int top = 10;
};

int run_diagnose(const CommonFlags& c, const DiagnoseFlags& d) {
  const KernelSpec kernel = KernelSpec::parse(d.kernel, d.dim, d.bandwidth);
  if (d.n < 2) throw ConfigError("diagnose needs n >= 2");
  PointSet pts(d.n, d.dim);
  if (d.sampling == "grid") {
    if (d.dim != 1) throw ConfigError("grid sampling is one-dimensional; use --sampling uniform");
    for (Index i = 0; i < d.n; ++i) pts(i, 0) = static_cast<double>(i + 1) / static_cast<double>(d.n);
  } else {
    Rng rng(c.seed);
    for (Index i = 0; i < d.n; ++i) {
      for (int k = 0; k < d.dim; ++k) pts(i, k) = rng.uniform();
    }
  }
  const auto spectrum = bench::normalized_gram_spectrum(kernel, pts);
  json doc;
  doc["kernel"] = kernel.name();
  doc["n"] = d.n;
  doc["kappa"] = kernel.kappa();
  json top = json::array();
  for (int i = 0; i < std::min<int>(d.top, static_cast<int>(spectrum.size())); ++i) {
    json row{{"index", i + 1}, {"eigenvalue", spectrum[static_cast<std::size_t>(i)]}};
    if (kernel.kind() == KernelKind::Min) {
      const double w = (2.0 * (i + 1) - 1.0) * std::numbers::pi / 2.0;
      row["analytic"] = 1.0 / (w * w);
    }
    top.push_back(row);
  }
  doc["top_eigenvalues"] = top;
  json eff = json::array();
  for (const double lambda : parse_doubles(d.lambdas)) {
    const double kappa2 = kernel.kappa() * kernel.kappa();
    eff.push_back({{"lambda", lambda},
                   {"effective_dimension", bench::effective_dimension(spectrum, lambda)},
                   {"bound", kappa2 / lambda}});
  }
  doc["effective_dimension"] = eff;
  json rad = json::array();
  for (const double eps : parse_doubles(d.epsilons)) {
    rad.push_back({{"epsilon", eps}, {"R", bench::rademacher_r(spectrum, eps, d.n)}});
  }
  doc["rademacher"] = rad;
  emit_json(c, doc);
  return 0;
}

struct DistillFlags {
  std::vector<std::string> features;
  int parties = 3;
  Index rows = 64;
  Index cols = 8;
  int steps = 200;
  double step_size = 5.0;
  double eta0 = 0.5;
};

int run_distill(const CommonFlags& c, const DistillFlags& d) {
  std::vector<Matrix> feats;
  if (!d.features.empty()) {
    for (const auto& path : d.features) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open feature file '" + path + "'");
      feats.push_back(distill::read_feature_csv(in));
    }
  } else {
    // Random linear features of a shared latent input, one map per party.
    Rng rng(c.seed);
    Matrix latent(d.rows, 4);
    for (Index i = 0; i < latent.size(); ++i) latent.data()[i] = rng.normal();
    for (int j = 0; j < d.parties; ++j) {
      Matrix map(4, d.cols);
      for (Index i = 0; i < map.size(); ++i) map.data()[i] = rng.normal() * (j + 1);
      Matrix noise(d.rows, d.cols);
      for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = 0.5 * rng.normal();
      feats.push_back((latent * map).array().tanh().matrix() + noise);
    }
  }
  if (feats.empty()) throw ConfigError("no feature matrices");
  for (const auto& f : feats) {
    if (f.rows() != feats[0].rows()) throw ConfigError("feature matrices must share the sample count");
  }
  std::vector<Matrix> grams;
  std::vector<double> weights(feats.size(), 1.0 / static_cast<double>(feats.size()));
  for (const auto& f : feats) grams.push_back(distill::feature_gram(f));
  const Matrix target = distill::ensemble_gram(grams, weights);

  json doc;
  doc["parties"] = json::array();
  std::vector<double> alphas;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto res = distill::match_kernel(feats[i], target, d.step_size, d.steps);
    const double alpha = distill::subsampled_self_hsic(res.features, c.seed + i);
    alphas.push_back(alpha);
    doc["parties"].push_back({{"index", i},
                              {"cka_before", res.cka_path.front()},
                              {"cka_after", res.cka_path.back()},
                              {"self_hsic", alpha}});
  }
  const auto rates = distill::lr_scale(alphas, d.eta0);
  for (std::size_t i = 0; i < rates.size(); ++i) doc["parties"][i]["learning_rate"] = rates[i];
  emit_json(c, doc);
  return 0;
}

struct OracleFlags {
  int instances = 20;
  double tolerance = 1e-8;
};

int run_oracle_check(const CommonFlags& c, const OracleFlags& o) {
  Rng root(c.seed);
  double worst = 0.0;
  json cases = json::array();
  for (int s = 0; s < o.instances; ++s) {
    Rng rng = root.split(static_cast<std::uint64_t>(s));
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    std::vector<PartyDataset> parties;
    for (int i = 0; i < m; ++i) {
      const Index ni = 1 + static_cast<Index>(rng.uniform_index(10));
      PartyDataset p{PointSet(ni, 1), Vector(ni)};
      for (Index r = 0; r < ni; ++r) {
        p.x(r, 0) = rng.uniform();
        p.y(r) = rng.normal();
      }
      parties.push_back(std::move(p));
    }
    FederationConfig cfg;
    cfg.kernel = KernelSpec::min_kernel();
    const Index n0 = 1 + static_cast<Index>(rng.uniform_index(12));
    cfg.public_inputs = PointSet(n0, 1);
    for (Index r = 0; r < n0; ++r) cfg.public_inputs(r, 0) = rng.uniform();
    cfg.local_steps = rng.uniform_index(2) == 0 ? 1 : 3;
    cfg.rounds = rng.uniform_index(2) == 0 ? 1 : 4;
    cfg.eta = 0.5;
    cfg.weights = weights_from_sizes(parties);
    cfg.seed = static_cast<std::uint64_t>(s);
    const Vector iterative = dcl_kr(parties, cfg).model.evaluate(cfg.public_inputs);
    const Vector oracle = dcl_kr_recurrence_oracle(parties, cfg);
    const double diff = (iterative - oracle).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    cases.push_back({{"instance", s}, {"m", m}, {"n0", n0}, {"E", cfg.local_steps}, {"T", cfg.rounds}, {"max_abs_diff", diff}});
  }
  const bool pass = worst <= o.tolerance;
  emit_json(c, json{{"instances", cases}, {"max_abs_diff", worst}, {"tolerance", o.tolerance}, {"pass", pass}});
  return pass ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distillation-based collaborative kernel regression simulator"};
  app.require_subcommand(1);

  CommonFlags common;
  SweepFlags sweep_flags;
  DiagnoseFlags diag;
  DistillFlags dist;
  OracleFlags oracle;

  auto* sweep = app.add_subcommand("sweep", "Run the full (m x repetition x algorithm) experiment grid");
  add_common(sweep, common);
  add_sweep_flags(sweep, sweep_flags);
  sweep->add_option("--m-values", sweep_flags.m_values, "Party counts")->delimiter(',');
  sweep->add_option("--repetitions", sweep_flags.repetitions, "Repetitions per party count");
  sweep->add_option("--workers", sweep_flags.workers, "Concurrent (m, repetition) jobs");

  auto* run = app.add_subcommand("run", "Run one (m, repetition) configuration");
  add_common(run, common);
  add_sweep_flags(run, sweep_flags);
  run->add_option("--m", sweep_flags.m, "Party count");
  run->add_option("--repetition", sweep_flags.repetition, "Repetition index (selects the derived seed)");

  auto* diagnose = app.add_subcommand("diagnose", "Eigendecay, effective dimension and R(epsilon) report");
  add_common(diagnose, common);
  diagnose->add_option("--kernel", diag.kernel, "min, wendland0, wendland2 or gaussian");
  diagnose->add_option("--dim", diag.dim, "Input dimension");
  diagnose->add_option("--bandwidth", diag.bandwidth, "Gaussian bandwidth");
  diagnose->add_option("--n", diag.n, "Sample size");
  diagnose->add_option("--sampling", diag.sampling, "grid (1-D, points i/n) or uniform")
      ->check(CLI::IsMember({"grid", "uniform"}));
  diagnose->add_option("--lambda", diag.lambdas, "Comma list of lambda values");
  diagnose->add_option("--epsilon", diag.epsilons, "Comma list of epsilon values");
  diagnose->add_option("--top", diag.top, "Number of leading eigenvalues to report");

  auto* demo = app.add_subcommand("distill-demo", "CKA kernel matching on feature matrices");
  add_common(demo, common);
  demo->add_option("--features", dist.features, "Feature CSV files, one per party")->delimiter(',');
  demo->add_option("--parties", dist.parties, "Random parties when no files are given");
  demo->add_option("--rows", dist.rows, "Random feature rows");
  demo->add_option("--cols", dist.cols, "Random feature columns");
  demo->add_option("--steps", dist.steps, "Gradient ascent steps");
  demo->add_option("--step-size", dist.step_size, "Gradient ascent step size");
  demo->add_option("--eta0", dist.eta0, "Base learning rate for HSIC scaling");

  auto* check = app.add_subcommand("oracle-check", "Compare iterative DCL-KR against the dense recurrence");
  add_common(check, common);
  check->add_option("--instances", oracle.instances, "Random instances");
  check->add_option("--tolerance", oracle.tolerance, "Maximum allowed absolute difference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) {
      const auto cfg = build_config(common, sweep_flags, sweep);
      emit_records(common, bench::run_sweep(cfg));
      return 0;
    }
    if (*run) {
      auto cfg = build_config(common, sweep_flags, run);
      cfg.m_values = {sweep_flags.m};
      cfg.validate();
      auto records = bench::run_single(cfg, sweep_flags.m, sweep_flags.repetition);
      emit_records(common, records);
      return 0;
    }
    if (*diagnose) return run_diagnose(common, diag);
    if (*demo) return run_distill(common, dist);
    if (*check) return run_oracle_check(common, oracle);
  } catch (const CoverageError& e) {
    std::cerr << "coverage failure: " << e.what() << '\n';
    return kExitCoverage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateInputError& e) {
    std::cerr << "degenerate input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
