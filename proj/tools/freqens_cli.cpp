// Command-line front end: method comparison, criterion sweep, adaptive
// sampling study, and evaluation of saved ensembles.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "freqens/adaptive.hpp"
#include "freqens/benchmarks.hpp"
#include "freqens/combiners.hpp"
#include "freqens/ensemble.hpp"
#include "freqens/experiment.hpp"
#include "freqens/format.hpp"

using namespace freqens;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> problem;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::size_t> m, retries, n_train, n_test, budget, population;
  std::optional<double> criterion;
  std::vector<std::string> methods, strategies;
  std::vector<double> criteria;
  bool save_ensembles = false;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--problem", o.problem, "camel2d, powell4d or borehole8d");
  cmd->add_option("--seed", o.seed, "Run a single experiment seed");
  cmd->add_option("--seeds", o.seeds, "Experiment seeds")->delimiter(',');
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--m", o.m, "Number of component models");
  cmd->add_option("--retries", o.retries, "Random restarts per combination");
  cmd->add_option("--n-train", o.n_train, "Training samples");
  cmd->add_option("--n-test", o.n_test, "Test samples");
  cmd->add_option("--criterion", o.criterion, "Minimum frequency criterion in (0, 1]");
  cmd->add_option("--methods", o.methods, "average,weighted,mode,frequency")->delimiter(',');
  cmd->add_option("--criteria", o.criteria, "Criteria for the sweep")->delimiter(',');
  cmd->add_option("--strategies", o.strategies, "core_variance,prediction_variance,ilhs")
      ->delimiter(',');
  cmd->add_option("--budget", o.budget, "Points added by the adaptive loop");
  cmd->add_option("--population", o.population, "Candidate population size");
  cmd->add_flag("--save-ensembles", o.save_ensembles, "Write trained ensembles (compare only)");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.problem) c.problem = *o.problem;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.seed) c.seeds = {*o.seed};
  if (o.out) c.output_dir = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.m) c.m = *o.m;
  if (o.retries) c.retries = *o.retries;
  if (o.n_train) c.n_train = *o.n_train;
  if (o.n_test) c.n_test = *o.n_test;
  if (o.budget) c.budget = *o.budget;
  if (o.population) c.population_size = *o.population;
  if (o.criterion) c.criterion = *o.criterion;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& name : o.methods) c.methods.push_back(method_from_string(name));
  }
  if (!o.strategies.empty()) {
    c.strategies.clear();
    for (const auto& name : o.strategies) c.strategies.push_back(strategy_from_string(name));
  }
  if (!o.criteria.empty()) c.criteria = o.criteria;
  if (o.save_ensembles) c.save_ensembles = true;
  return c;
}

int run_study(const Overrides& o, StudyResult (*study)(const ExperimentConfig&)) {
  const ExperimentConfig config = resolve(o);
  config.validate();
  prepare_output_dir(config.output_dir);
  const StudyResult result = study(config);
  emit_report(result, config, config.output_dir);
  for (const auto& f : result.failures)
    std::cerr << "seed " << f.seed << " failed: " << f.message << '\n';
  std::cout << "wrote " << result.rows.size() << " rows to "
            << (config.output_dir / "summary.csv").string() << '\n';
  return result.ok() ? 0 : 1;
}

int run_eval(const std::string& ensemble_dir, const std::string& points_path,
             const std::string& out_path, double criterion) {
  const Ensemble ens = load_ensemble(ensemble_dir);
  const auto points = load_points_csv(points_path, ens.domain.dim());
  const std::vector<double> errors = ens.component_errors();
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "point";
  for (std::size_t j = 0; j < ens.domain.dim(); ++j) out << ",x" << j + 1;
  out << ",average,weighted,mode,frequency,core_variance,prediction_variance,outside_domain\n";
  std::size_t outside = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const PredictionDistribution dist = predict_distribution(ens, points[k]);
    const CoreResult core = search_core_predictions(dist.values, criterion);
    outside += dist.outside_domain ? 1 : 0;
    out << k;
    for (double v : points[k]) out << ',' << format_double(v);
    out << ',' << format_double(combine_average(dist.values)) << ','
        << format_double(combine_weighted(dist.values, errors).value) << ','
        << format_double(combine_mode(dist.values)) << ',' << format_double(core.final_value)
        << ',' << format_double(core.core_variance) << ','
        << format_double(prediction_variance(dist.values)) << ',' << (dist.outside_domain ? 1 : 0)
        << '\n';
  }
  if (outside > 0)
    std::cerr << "warning: " << outside << " point(s) lie outside the training domain\n";
  return 0;
}

int run_train(const std::string& data_path, const std::string& problem,
              const std::vector<double>& lower, const std::vector<double>& upper,
              const std::string& out_dir, std::size_t m, std::size_t retries, std::uint64_t seed,
              unsigned threads) {
  const Domain domain =
      problem.empty() ? Domain(lower, upper) : benchmark_by_name(problem).domain;
  const Dataset data = load_dataset_csv(data_path, domain);
  SelectionConfig sel;
  sel.seed = seed;
  sel.threads = threads;
  const auto candidates = default_candidates(domain.dim());
  std::vector<ArchitectureScore> scores;
  const Architecture arch = select_architecture(data, candidates, sel, &scores);
  for (const auto& s : scores)
    std::cerr << s.architecture.describe() << " score " << format_double(s.score) << '\n';
  EnsembleConfig ec;
  ec.m = m;
  ec.retries = retries;
  ec.seed = seed;
  ec.threads = threads;
  const Ensemble ens = prepare_ensemble(data, arch, ec);
  save_ensemble(ens, out_dir);
  std::cout << "saved " << ens.size() << " components (" << arch.describe() << ") to " << out_dir
            << '\n';
  if (!ens.unconverged_combinations.empty())
    std::cerr << "warning: " << ens.unconverged_combinations.size()
              << " combination(s) kept a non-converged model\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-distribution neural-network ensembles and adaptive sampling"};
  app.require_subcommand(1);

  Overrides compare_opts, sweep_opts, adaptive_opts;
  auto* compare = app.add_subcommand("compare", "Compare ensemble combiners on a benchmark");
  add_experiment_flags(compare, compare_opts);
  auto* sweep = app.add_subcommand("sweep", "Sweep the minimum frequency criterion");
  add_experiment_flags(sweep, sweep_opts);
  auto* adaptive = app.add_subcommand("adaptive", "Run adaptive sampling strategies");
  add_experiment_flags(adaptive, adaptive_opts);

  std::string ensemble_dir, points_path, eval_out;
  double eval_criterion = 0.2;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved ensemble at points from a CSV");
  eval->add_option("--ensemble", ensemble_dir, "Ensemble directory")->required();
  eval->add_option("--points", points_path, "CSV with header x1..xd")->required();
  eval->add_option("--out", eval_out, "Output CSV (default: stdout)");
  eval->add_option("--criterion", eval_criterion, "Minimum frequency criterion");

  std::string data_path, train_problem, train_out;
  std::vector<double> lower, upper;
  std::size_t train_m = 50, train_retries = 20;
  std::uint64_t train_seed = 1;
  unsigned train_threads = 0;
  auto* train = app.add_subcommand("train", "Train an ensemble on a CSV dataset and save it");
  train->add_option("--data", data_path, "CSV with header x1..xd,y")->required();
  train->add_option("--problem", train_problem, "Take the domain from a named benchmark");
  train->add_option("--lower", lower, "Domain lower bounds")->delimiter(',');
  train->add_option("--upper", upper, "Domain upper bounds")->delimiter(',');
  train->add_option("--out", train_out, "Ensemble directory")->required();
  train->add_option("--m", train_m, "Number of component models");
  train->add_option("--retries", train_retries, "Random restarts per combination");
  train->add_option("--seed", train_seed, "Seed");
  train->add_option("--threads", train_threads, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compare) return run_study(compare_opts, run_method_comparison);
    if (*sweep) return run_study(sweep_opts, run_criterion_sweep);
    if (*adaptive) return run_study(adaptive_opts, run_adaptive_study);
    if (*eval) return run_eval(ensemble_dir, points_path, eval_out, eval_criterion);
    if (*train)
      return run_train(data_path, train_problem, lower, upper, train_out, train_m, train_retries,
                       train_seed, train_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
