#include "freqens/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "freqens/benchmarks.hpp"
#include "freqens/combiners.hpp"
#include "freqens/format.hpp"
#include "freqens/rng.hpp"

namespace freqens {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::average: return "average";
    case Method::weighted: return "weighted";
    case Method::mode: return "mode";
    case Method::frequency: return "frequency";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "average") return Method::average;
  if (name == "weighted") return Method::weighted;
  if (name == "mode") return Method::mode;
  if (name == "frequency") return Method::frequency;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected average, weighted, mode or frequency)");
}

void ExperimentConfig::validate() const {
  benchmark_by_name(problem);
  if (n_train < 2) throw std::invalid_argument("config: n_train must be at least 2");
  if (n_test < 1) throw std::invalid_argument("config: n_test must be positive");
  if (methods.empty() && strategies.empty())
    throw std::invalid_argument("config: select at least one method or strategy");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (budget < 1) throw std::invalid_argument("config: budget must be at least 1");
  if (population_size < 1) throw std::invalid_argument("config: population_size must be positive");
  if (selection_splits < 2) throw std::invalid_argument("config: selection_splits must be >= 2");
  if (selection_retries < 1) throw std::invalid_argument("config: selection_retries must be >= 1");
  required_frequency(2, criterion);
  for (double c : criteria) required_frequency(2, c);
  EnsembleConfig{m, retries, train_ratio, 0, lm, threads}.validate();
  random_split(n_train, train_ratio, 0);
  for (const auto& c : candidates) Architecture{1, c}.validate();
}

std::vector<Architecture> ExperimentConfig::candidate_architectures(std::size_t input_dim) const {
  if (candidates.empty()) return default_candidates(input_dim);
  std::vector<Architecture> out;
  for (const auto& c : candidates) out.push_back({input_dim, c});
  return out;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  c.problem = j.value("problem", c.problem);
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  if (j.contains("ensemble")) {
    const json& e = j.at("ensemble");
    c.m = e.value("m", c.m);
    c.retries = e.value("retries", c.retries);
    c.train_ratio = e.value("train_ratio", c.train_ratio);
    c.candidates = e.value("candidates", c.candidates);
    c.selection_splits = e.value("selection_splits", c.selection_splits);
    c.selection_retries = e.value("selection_retries", c.selection_retries);
    if (e.contains("lm")) {
      const json& l = e.at("lm");
      c.lm.max_iterations = l.value("max_iterations", c.lm.max_iterations);
      c.lm.initial_damping = l.value("initial_damping", c.lm.initial_damping);
      c.lm.max_damping = l.value("max_damping", c.lm.max_damping);
      c.lm.max_validation_failures = l.value("max_validation_failures", c.lm.max_validation_failures);
    }
  }
  c.criterion = j.value("criterion", c.criterion);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& name : j.at("methods")) c.methods.push_back(method_from_string(name));
  }
  c.criteria = j.value("criteria", c.criteria);
  if (j.contains("adaptive")) {
    const json& a = j.at("adaptive");
    if (a.contains("strategies")) {
      c.strategies.clear();
      for (const auto& name : a.at("strategies")) c.strategies.push_back(strategy_from_string(name));
    }
    c.budget = a.value("budget", c.budget);
    c.population_size = a.value("population_size", c.population_size);
  }
  c.seeds = j.value("seeds", c.seeds);
  c.threads = j.value("threads", c.threads);
  c.output_dir = j.value("output_dir", c.output_dir.string());
  c.save_ensembles = j.value("save_ensembles", c.save_ensembles);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  json strategies = json::array();
  for (Strategy s : c.strategies) strategies.push_back(to_string(s));
  json j;
  j["problem"] = c.problem;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["ensemble"] = {{"m", c.m},
                   {"retries", c.retries},
                   {"train_ratio", c.train_ratio},
                   {"candidates", c.candidates},
                   {"selection_splits", c.selection_splits},
                   {"selection_retries", c.selection_retries},
                   {"lm",
                    {{"max_iterations", c.lm.max_iterations},
                     {"initial_damping", c.lm.initial_damping},
                     {"max_damping", c.lm.max_damping},
                     {"max_validation_failures", c.lm.max_validation_failures}}}};
  j["criterion"] = c.criterion;
  j["methods"] = methods;
  j["criteria"] = c.criteria;
  j["adaptive"] = {{"strategies", strategies},
                   {"budget", c.budget},
                   {"population_size", c.population_size}};
  j["seeds"] = c.seeds;
  j["save_ensembles"] = c.save_ensembles;
  // threads and output_dir do not affect results and are left out of the echo.
  return j.dump(2) + "\n";
}

namespace {

constexpr std::uint64_t kTrainDataTag = 21;
constexpr std::uint64_t kTestDataTag = 22;
constexpr std::uint64_t kSelectionTag = 23;
constexpr std::uint64_t kEnsembleTag = 24;
constexpr std::uint64_t kAdaptiveTag = 25;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median_relative(std::span<const double> truth, std::span<const double> pred) {
  const RelativeErrors rel = relative_errors(truth, pred);
  return rel.percent.empty() ? std::numeric_limits<double>::quiet_NaN() : median(rel.percent);
}

// Architecture search and ensemble preparation for one seed.
Ensemble build_seed_ensemble(const ExperimentConfig& config, const Dataset& train,
                             std::uint64_t seed, Architecture* chosen = nullptr) {
  SelectionConfig sel;
  sel.k_splits = config.selection_splits;
  sel.retries = config.selection_retries;
  sel.train_ratio = config.train_ratio;
  sel.seed = derive_seed(seed, {kSelectionTag});
  sel.lm = config.lm;
  sel.threads = config.threads;
  const auto candidates = config.candidate_architectures(train.domain.dim());
  const Architecture arch = select_architecture(train, candidates, sel);
  if (chosen) *chosen = arch;
  EnsembleConfig ec{config.m, config.retries, config.train_ratio,
                    derive_seed(seed, {kEnsembleTag}), config.lm, config.threads};
  return prepare_ensemble(train, arch, ec);
}

double combine(Method method, std::span<const double> values, std::span<const double> errors,
               double criterion) {
  switch (method) {
    case Method::average: return combine_average(values);
    case Method::weighted: return combine_weighted(values, errors).value;
    case Method::mode: return combine_mode(values);
    case Method::frequency: return search_core_predictions(values, criterion).final_value;
  }
  throw std::logic_error("combine: unknown method");
}

std::vector<std::vector<double>> prediction_rows(const Ensemble& ensemble,
                                                 std::span<const Point> points) {
  const Eigen::MatrixXd p = predict_matrix(ensemble, points);
  std::vector<std::vector<double>> rows(points.size(), std::vector<double>(static_cast<std::size_t>(p.cols())));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < rows[k].size(); ++i)
      rows[k][i] = p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  return rows;
}

}  // namespace

ProblemData make_problem_data(const ExperimentConfig& config, std::uint64_t seed) {
  const BenchmarkProblem problem = benchmark_by_name(config.problem);
  ProblemData data{Dataset{problem.domain, {}, {}}, {}};
  data.train.points = lhs_sample(problem.domain, config.n_train, derive_seed(seed, {kTrainDataTag}));
  for (const auto& p : data.train.points) data.train.responses.push_back(problem(p));
  data.test.points = lhs_sample(problem.domain, config.n_test, derive_seed(seed, {kTestDataTag}));
  for (const auto& p : data.test.points) data.test.truth.push_back(problem(p));
  return data;
}

StudyResult run_method_comparison(const ExperimentConfig& config) {
  config.validate();
  if (config.methods.empty()) throw std::invalid_argument("compare: no methods selected");
  StudyResult result;
  for (std::uint64_t seed : config.seeds) {
    try {
      const auto start = std::chrono::steady_clock::now();
      ProblemData data = make_problem_data(config, seed);
      const Ensemble ens = build_seed_ensemble(config, data.train, seed);
      const double train_seconds = seconds_since(start);
      if (config.save_ensembles)
        save_ensemble(ens, config.output_dir / ("ensemble_" + std::to_string(seed)));

      const auto rows = prediction_rows(ens, data.test.points);
      const std::vector<double> errors = ens.component_errors();
      PredictionTable table{seed, data.test.points, data.test.truth, config.methods, {}};
      for (Method method : config.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> pred;
        pred.reserve(rows.size());
        for (const auto& values : rows) pred.push_back(combine(method, values, errors, config.criterion));
        ReportRow row;
        row.problem = config.problem;
        row.method = to_string(method);
        row.criterion = method == Method::frequency ? config.criterion
                                                    : std::numeric_limits<double>::quiet_NaN();
        row.seed = seed;
        row.n_samples = config.n_train;
        row.nrmse = nrmse(data.test.truth, pred);
        row.median_relative_error = median_relative(data.test.truth, pred);
        row.wall_seconds = train_seconds + seconds_since(t0);
        result.rows.push_back(std::move(row));
        table.predictions.push_back(std::move(pred));
      }
      result.predictions.push_back(std::move(table));
    } catch (const std::exception& e) {
      result.failures.push_back({seed, e.what()});
    }
  }
  return result;
}

StudyResult run_criterion_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.criteria.empty()) throw std::invalid_argument("sweep: no criteria");
  StudyResult result;
  for (std::uint64_t seed : config.seeds) {
    try {
      const auto start = std::chrono::steady_clock::now();
      ProblemData data = make_problem_data(config, seed);
      const Ensemble ens = build_seed_ensemble(config, data.train, seed);
      const double train_seconds = seconds_since(start);
      const auto rows = prediction_rows(ens, data.test.points);
      for (double criterion : config.criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> pred;
        pred.reserve(rows.size());
        for (const auto& values : rows)
          pred.push_back(search_core_predictions(values, criterion).final_value);
        result.rows.push_back({config.problem, "frequency", criterion, seed, config.n_train,
                               nrmse(data.test.truth, pred),
                               median_relative(data.test.truth, pred),
                               train_seconds + seconds_since(t0)});
      }
    } catch (const std::exception& e) {
      result.failures.push_back({seed, e.what()});
    }
  }
  return result;
}

StudyResult run_adaptive_study(const ExperimentConfig& config) {
  config.validate();
  if (config.strategies.empty()) throw std::invalid_argument("adaptive: no strategies selected");
  StudyResult result;
  const BenchmarkProblem problem = benchmark_by_name(config.problem);
  for (std::uint64_t seed : config.seeds) {
    std::optional<ProblemData> data;
    Architecture arch;
    try {
      data = make_problem_data(config, seed);
      SelectionConfig sel;
      sel.k_splits = config.selection_splits;
      sel.retries = config.selection_retries;
      sel.train_ratio = config.train_ratio;
      sel.seed = derive_seed(seed, {kSelectionTag});
      sel.lm = config.lm;
      sel.threads = config.threads;
      const auto candidates = config.candidate_architectures(problem.domain.dim());
      arch = select_architecture(data->train, candidates, sel);
    } catch (const std::exception& e) {
      result.failures.push_back({seed, e.what()});
      continue;
    }
    for (Strategy strategy : config.strategies) {
      const auto start = std::chrono::steady_clock::now();
      AdaptiveConfig ac;
      ac.strategy = strategy;
      ac.budget = config.budget;
      ac.population_size = config.population_size;
      ac.criterion = config.criterion;
      ac.ensemble = {config.m, config.retries, config.train_ratio, 0, config.lm, config.threads};
      // Shared across strategies so every curve starts from the same ensemble.
      ac.seed = derive_seed(seed, {kAdaptiveTag});
      try {
        AdaptiveHistory h = run_adaptive_loop(data->train, problem, arch, ac, data->test);
        h.seed = seed;
        const double seconds = seconds_since(start);
        const std::string name = to_string(strategy);
        result.rows.push_back({config.problem, name, config.criterion, seed, h.initial_samples,
                               h.initial_nrmse, h.initial_median_relative_error, seconds});
        if (!h.records.empty()) {
          const auto& last = h.records.back();
          result.rows.push_back({config.problem, name, config.criterion, seed, last.n_samples,
                                 last.nrmse, last.median_relative_error, seconds});
        }
        if (h.aborted) result.failures.push_back({seed, name + ": " + h.error});
        result.histories.push_back(std::move(h));
      } catch (const std::exception& e) {
        result.failures.push_back({seed, to_string(strategy) + ": " + e.what()});
      }
    }
  }
  return result;
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string criterion_cell(double c) { return std::isnan(c) ? "" : format_double(c); }

}  // namespace

void emit_report(const StudyResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir) {
  if (result.rows.empty() && result.failures.empty())
    throw std::invalid_argument("emit_report: nothing to report");
  prepare_output_dir(dir);

  auto summary = open_out(dir / "summary.csv");
  summary << "problem,method,criterion,seed,n_samples,nrmse,median_relative_error\n";
  for (const auto& r : result.rows)
    summary << r.problem << ',' << r.method << ',' << criterion_cell(r.criterion) << ',' << r.seed
            << ',' << r.n_samples << ',' << format_double(r.nrmse) << ','
            << format_double(r.median_relative_error) << '\n';

  auto timing = open_out(dir / "timing.csv");
  timing << "problem,method,criterion,seed,n_samples,wall_seconds\n";
  for (const auto& r : result.rows)
    timing << r.problem << ',' << r.method << ',' << criterion_cell(r.criterion) << ',' << r.seed
           << ',' << r.n_samples << ',' << format_double(r.wall_seconds) << '\n';

  if (!result.predictions.empty()) {
    auto pred = open_out(dir / "predictions.csv");
    const std::size_t dim = result.predictions.front().points.empty()
                                ? 0
                                : result.predictions.front().points.front().size();
    pred << "seed,point";
    for (std::size_t j = 0; j < dim; ++j) pred << ",x" << j + 1;
    pred << ",truth";
    for (Method m : result.predictions.front().methods) pred << ',' << to_string(m);
    pred << '\n';
    for (const auto& t : result.predictions) {
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        pred << t.seed << ',' << k;
        for (double v : t.points[k]) pred << ',' << format_double(v);
        pred << ',' << format_double(t.truth[k]);
        for (const auto& column : t.predictions) pred << ',' << format_double(column[k]);
        pred << '\n';
      }
    }
  }

  const std::size_t dim = benchmark_by_name(config.problem).domain.dim();
  for (const auto& h : result.histories)
    save_history_csv(h, dim,
                     dir / ("adaptive_" + to_string(h.strategy) + "_" +
                            std::to_string(h.seed) + ".csv"));

  if (!result.failures.empty()) {
    auto failures = open_out(dir / "failures.csv");
    failures << "seed,message\n";
    for (const auto& f : result.failures) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      failures << f.seed << ",\"" << msg << "\"\n";
    }
  }

  auto echo = open_out(dir / "config_echo.json");
  echo << config_to_json_text(config);
}

}  // namespace freqens
