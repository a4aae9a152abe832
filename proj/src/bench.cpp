#include "dclkr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"
#include "dclkr/local_solvers.hpp"
#include "dclkr/protocols.hpp"
#include "dclkr/rkhs.hpp"

namespace dclkr::bench {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::DclKr: return "dcl-kr";
    case Algorithm::CentralKrr: return "central-krr";
    case Algorithm::CentralKrgd: return "central-krgd";
    case Algorithm::DcNy: return "dc-ny";
    case Algorithm::DkrrNyCm: return "dkrr-ny-cm";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (const auto a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

bool uses_ridge(Algorithm a) {
  return a == Algorithm::CentralKrr || a == Algorithm::DcNy || a == Algorithm::DkrrNyCm;
}

std::map<Algorithm, double> SweepConfig::default_constants(TaskKind task) {
  if (task == TaskKind::Toy1D) {
    return {{Algorithm::CentralKrr, 0.055}, {Algorithm::CentralKrgd, 15.0}, {Algorithm::DcNy, 0.006},
            {Algorithm::DkrrNyCm, 0.008},   {Algorithm::DclKr, 2.5}};
  }
  return {{Algorithm::CentralKrr, 0.016}, {Algorithm::CentralKrgd, 50.0}, {Algorithm::DcNy, 0.002},
          {Algorithm::DkrrNyCm, 0.005},   {Algorithm::DclKr, 12.5}};
}

SweepConfig SweepConfig::defaults_for(const TaskSpec& task) {
  SweepConfig cfg;
  cfg.task = task;
  cfg.constants = default_constants(task.kind);
  return cfg;
}

double SweepConfig::constant(Algorithm a) const {
  const auto it = constants.find(a);
  if (it != constants.end()) return it->second;
  return default_constants(task.kind).at(a);
}

void SweepConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("sweep lists no algorithms");
  if (m_values.empty()) throw ConfigError("sweep lists no party counts");
  for (const int m : m_values) {
    if (m < 1) throw ConfigError("party counts must be positive");
  }
  if (n_per_party < 1) throw ConfigError("n_per_party must be positive");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (test_size < 1) throw ConfigError("test_size must be positive");
  if (!(n0_alpha > 0.0)) throw ConfigError("alpha-n0 must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (local_steps < 1) throw ConfigError("local_steps must be at least 1");
  check_learning_rate(eta, task.kernel());
  for (const auto a : algorithms) {
    if (!(constant(a) > 0.0)) throw ConfigError("constant for " + algorithm_name(a) + " must be positive");
  }
}

std::uint64_t run_seed(std::uint64_t base, int m, int repetition) {
  Rng root(base);
  return root.split({static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(repetition)})();
}

int gd_iterations(double constant, Index n, const TaskSpec& task) {
  return std::max(1, static_cast<int>(constant * std::pow(static_cast<double>(n), task.rate_exponent())));
}

double ridge_lambda(double constant, Index n, const TaskSpec& task) {
  return constant * std::pow(static_cast<double>(n), -task.rate_exponent());
}

int dcl_rounds(const SweepConfig& cfg, Index n) {
  const double budget = cfg.constant(Algorithm::DclKr) * std::pow(static_cast<double>(n), cfg.task.rate_exponent());
  if (cfg.rounds_rule == RoundsRule::TotalIterations) {
    return std::max(1, static_cast<int>(budget / cfg.local_steps));
  }
  return std::max(1, static_cast<int>(budget));
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

PartyDataset noise_free_test(const TaskSpec& task, Index size, Rng rng) {
  TaskSpec clean = task;
  clean.noise_sd = 0.0;
  return sample_task(clean, size, rng);
}

}  // namespace

std::vector<RunRecord> run_single(const SweepConfig& cfg, int m, int repetition) {
  cfg.validate();
  const std::uint64_t seed = run_seed(cfg.seed, m, repetition);
  const Rng root(seed);
  const TaskSpec& task = cfg.task;
  const KernelSpec kernel = task.kernel();
  const Index n = static_cast<Index>(cfg.n_per_party) * m;

  Rng pool_rng = root.split(1);
  Rng part_rng = root.split(2);
  Rng public_rng = root.split(3);
  const PartyDataset pool = sample_task(task, n, pool_rng);

  std::vector<PartyDataset> parties;
  try {
    for (auto& p : partition_noniid(pool, m, PartitionSpec::for_task(task), part_rng)) {
      // A party that received no points has weight n_i/n = 0.
      if (!p.empty()) parties.push_back(std::move(p));
    }
  } catch (const CoverageError& e) {
    throw CoverageError(std::string(e.what()) + " (m=" + std::to_string(m) + ", seed=" + std::to_string(seed) + ")",
                        e.attempts());
  }

  const Index n0 = public_count_rule(n, task.r(), task.s(), cfg.n0_alpha);
  const PointSet z = sample_public(n0, cfg.beta, task.dim(), public_rng);
  // Excess risk is measured against the noise-free target.
  const PartyDataset test = noise_free_test(task, cfg.test_size, root.split(4));

  std::optional<SpanBasis> basis;
  double basis_ms = 0.0;
  auto span_basis = [&]() -> const SpanBasis& {
    if (!basis) {
      const auto start = Clock::now();
      basis.emplace(kernel, z);
      basis_ms = ms_since(start);
    }
    return *basis;
  };

  std::vector<RunRecord> out;
  auto emit = [&](Algorithm a, int round, double rmse, double ms) {
    out.push_back(RunRecord{algorithm_name(a), m, n, n0, seed, round, rmse, cfg.record_timing ? ms : 0.0});
  };

  for (const auto a : cfg.algorithms) {
    const double constant = cfg.constant(a);
    switch (a) {
      case Algorithm::DclKr: {
        const SpanBasis& b = span_basis();
        const auto start = Clock::now();
        FederationConfig fed;
        fed.rounds = dcl_rounds(cfg, n);
        fed.local_steps = cfg.local_steps;
        fed.eta = cfg.eta;
        fed.weights = weights_from_sizes(parties);
        fed.public_inputs = z;
        fed.kernel = kernel;
        fed.seed = seed;
        DclKrOptions opts;
        opts.basis = &b;
        if (cfg.trace_rounds) opts.holdout = &test;
        const DclKrResult res = dcl_kr(parties, fed, opts);
        const double rmse = evaluate_rmse(res.model, test);
        const double ms = ms_since(start) + basis_ms;
        for (std::size_t t = 0; t < res.trace.holdout_rmse.size(); ++t) {
          emit(a, static_cast<int>(t) + 1, res.trace.holdout_rmse[t], 0.0);
        }
        emit(a, -1, rmse, ms);
        break;
      }
      case Algorithm::CentralKrr: {
        const auto start = Clock::now();
        const auto f = krr_closed_form(kernel, pool, ridge_lambda(constant, n, task));
        emit(a, -1, evaluate_rmse(f, test), ms_since(start));
        break;
      }
      case Algorithm::CentralKrgd: {
        const auto start = Clock::now();
        const auto f = kernel_gd(kernel, pool, cfg.eta, gd_iterations(constant, n, task));
        emit(a, -1, evaluate_rmse(f, test), ms_since(start));
        break;
      }
      case Algorithm::DcNy: {
        const SpanBasis& b = span_basis();
        const auto start = Clock::now();
        const auto f = dc_ny(parties, b, ridge_lambda(constant, n, task));
        emit(a, -1, evaluate_rmse(f, test), ms_since(start) + basis_ms);
        break;
      }
      case Algorithm::DkrrNyCm: {
        const SpanBasis& b = span_basis();
        const auto start = Clock::now();
        const auto f = dkrr_ny_cm(parties, b, ridge_lambda(constant, n, task), cfg.dkrr_eta, cfg.dkrr_iterations);
        emit(a, -1, evaluate_rmse(f, test), ms_since(start) + basis_ms);
        break;
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  // Canonical order: algorithms by enum, m ascending, duplicates dropped.
  SweepConfig cfg = config;
  std::sort(cfg.algorithms.begin(), cfg.algorithms.end());
  cfg.algorithms.erase(std::unique(cfg.algorithms.begin(), cfg.algorithms.end()), cfg.algorithms.end());
  std::sort(cfg.m_values.begin(), cfg.m_values.end());
  cfg.m_values.erase(std::unique(cfg.m_values.begin(), cfg.m_values.end()), cfg.m_values.end());

  struct Job {
    int m;
    int rep;
  };
  std::vector<Job> jobs;
  for (const int m : cfg.m_values) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) jobs.push_back({m, rep});
  }
  std::vector<std::vector<RunRecord>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto run_job = [&](std::size_t j) {
    try {
      results[j] = run_single(cfg, jobs[j].m, jobs[j].rep);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      run_job(j);
      if (errors[j]) break;
    }
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < jobs.size(); j += workers) run_job(j);
      });
    }
  }
  // Report the first failing job in canonical order, whatever the schedule.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<RunRecord> out;
  for (const auto a : cfg.algorithms) {
    const std::string name = algorithm_name(a);
    for (const auto& job_records : results) {
      for (const auto& r : job_records) {
        if (r.algorithm == name) out.push_back(r);
      }
    }
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    std::ostringstream line;
    line << r.algorithm << ',' << r.m << ',' << r.n << ',' << r.n0 << ',' << r.seed << ',';
    if (r.round < 0) {
      line << "final";
    } else {
      line << r.round;
    }
    line << ',' << std::setprecision(17) << r.rmse << ',' << std::fixed << std::setprecision(3) << r.wall_ms;
    out << line.str() << '\n';
  }
}

void write_json(std::ostream& out, std::span<const RunRecord> records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json row;
    row["algorithm"] = r.algorithm;
    row["m"] = r.m;
    row["n"] = r.n;
    row["n0"] = r.n0;
    row["seed"] = r.seed;
    if (r.round < 0) {
      row["round"] = "final";
    } else {
      row["round"] = r.round;
    }
    row["rmse"] = r.rmse;
    row["wall_ms"] = r.wall_ms;
    arr.push_back(std::move(row));
  }
  out << arr.dump(2) << '\n';
}

std::vector<MeanPoint> mean_final_rmse(std::span<const RunRecord> records, std::string_view algorithm) {
  std::map<int, MeanPoint> by_m;
  for (const auto& r : records) {
    if (r.round >= 0 || r.algorithm != algorithm) continue;
    auto& p = by_m[r.m];
    p.m = r.m;
    p.n = r.n;
    p.mean_rmse += r.rmse;
    ++p.count;
  }
  std::vector<MeanPoint> out;
  for (auto& [m, p] : by_m) {
    p.mean_rmse /= p.count;
    out.push_back(p);
  }
  return out;
}

SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw ConfigError("slope fit needs at least two points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [n, rmse] : points) {
    if (!(n > 0.0) || !(rmse > 0.0)) throw ConfigError("slope fit needs positive n and rmse");
    lx.push_back(std::log10(n));
    ly.push_back(std::log10(rmse));
  }
  const auto k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("slope fit needs at least two distinct n values");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / k);
  return fit;
}

double effective_dimension(std::span<const double> eigvals, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("effective dimension needs lambda > 0");
  double sum = 0.0;
  for (const double v : eigvals) {
    const double e = std::max(v, 0.0);
    sum += e / (e + lambda);
  }
  return sum;
}

double rademacher_r(std::span<const double> eigvals, double epsilon, Index n) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (n < 1) throw ConfigError("sample size must be positive");
  const double e2 = epsilon * epsilon;
  double sum = 0.0;
  for (const double v : eigvals) sum += std::min(std::max(v, 0.0), e2);
  return std::sqrt(sum / static_cast<double>(n));
}

std::vector<double> normalized_gram_spectrum(const KernelSpec& kernel, const PointSet& points) {
  const Matrix k = gram(kernel, points) / static_cast<double>(points.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(k, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveError("Gram spectrum computation failed");
  std::vector<double> vals(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(vals.begin(), vals.end(), std::greater<>());
  return vals;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T get_as(const boost::property_tree::ptree& tree, const std::string& key) {
  try {
    return tree.get<T>(key);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

SweepConfig load_sweep_config(const std::string& path, SweepConfig base) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config '" + path + "': " + e.what());
  }
  static const std::vector<std::string> known_sweep_keys{
      "task",     "algorithms",   "m_values", "n_per_party", "alpha_n0", "beta",
      "repetitions", "seed",      "test_size", "eta",        "local_steps", "rounds_rule",
      "dkrr_eta", "dkrr_iterations", "record_timing", "trace_rounds", "workers"};

  if (const auto sweep = tree.get_child_optional("sweep")) {
    for (const auto& [key, _] : *sweep) {
      if (std::find(known_sweep_keys.begin(), known_sweep_keys.end(), key) == known_sweep_keys.end()) {
        throw ConfigError("unknown [sweep] key '" + key + "'");
      }
    }
    const auto& s = *sweep;
    if (const auto task = s.get_optional<std::string>("task")) {
      const TaskSpec parsed = TaskSpec::parse(*task);
      if (parsed.kind != base.task.kind) {
        base.task = parsed;
        base.constants = SweepConfig::default_constants(parsed.kind);
      }
    }
    if (const auto v = s.get_optional<std::string>("algorithms")) {
      base.algorithms.clear();
      for (const auto& name : split_list(*v)) base.algorithms.push_back(parse_algorithm(name));
    }
    if (const auto v = s.get_optional<std::string>("m_values")) {
      base.m_values.clear();
      for (const auto& item : split_list(*v)) {
        try {
          base.m_values.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw ConfigError("m_values entry '" + item + "' is not an integer");
        }
      }
    }
    if (s.count("n_per_party")) base.n_per_party = get_as<int>(s, "n_per_party");
    if (s.count("alpha_n0")) base.n0_alpha = get_as<double>(s, "alpha_n0");
    if (s.count("beta")) base.beta = get_as<double>(s, "beta");
    if (s.count("repetitions")) base.repetitions = get_as<int>(s, "repetitions");
    if (s.count("seed")) base.seed = get_as<std::uint64_t>(s, "seed");
    if (s.count("test_size")) base.test_size = get_as<Index>(s, "test_size");
    if (s.count("eta")) base.eta = get_as<double>(s, "eta");
    if (s.count("local_steps")) base.local_steps = get_as<int>(s, "local_steps");
    if (const auto v = s.get_optional<std::string>("rounds_rule")) {
      if (*v == "rounds") {
        base.rounds_rule = RoundsRule::Rounds;
      } else if (*v == "total-iterations") {
        base.rounds_rule = RoundsRule::TotalIterations;
      } else {
        throw ConfigError("rounds_rule must be 'rounds' or 'total-iterations'");
      }
    }
    if (s.count("dkrr_eta")) base.dkrr_eta = get_as<double>(s, "dkrr_eta");
    if (s.count("dkrr_iterations")) base.dkrr_iterations = get_as<int>(s, "dkrr_iterations");
    if (s.count("record_timing")) base.record_timing = get_as<bool>(s, "record_timing");
    if (s.count("trace_rounds")) base.trace_rounds = get_as<bool>(s, "trace_rounds");
    if (s.count("workers")) base.workers = get_as<unsigned>(s, "workers");
  }

  for (const auto a : kAllAlgorithms) {
    const auto section = tree.get_child_optional(algorithm_name(a));
    if (!section) continue;
    for (const auto& [key, _] : *section) {
      if (key != "C" && key != "D") throw ConfigError("unknown [" + algorithm_name(a) + "] key '" + key + "'");
    }
    const std::string key = uses_ridge(a) ? "C" : "D";
    if (section->count(key)) base.constants[a] = get_as<double>(*section, key);
    const std::string wrong = uses_ridge(a) ? "D" : "C";
    if (section->count(wrong)) {
      throw ConfigError("[" + algorithm_name(a) + "] takes " + key + ", not " + wrong);
    }
  }
  for (const auto& [name, _] : tree) {
    if (name == "sweep") continue;
    bool ok = false;
    for (const auto a : kAllAlgorithms) ok = ok || algorithm_name(a) == name;
    if (!ok) throw ConfigError("unknown config section [" + name + "]");
  }
  return base;
}

}  // namespace dclkr::bench
