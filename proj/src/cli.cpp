#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlvr/bench.hpp"

namespace mlvr {

namespace {

/// `key = value` lines, '#' comments; keys are long flag names.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (strip(line).empty()) continue;
    if (eq == std::string::npos) throw ParseError(line_no, "config file: expected 'key = value'");
    std::string key = strip(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    entries.emplace_back(key, strip(line.substr(eq + 1)));
  }
  return entries;
}

/// Splices config-file entries in front of the command line; explicit flags
/// win because they are not duplicated.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") config_path = args[i + 1];
  }
  for (const auto& a : args) {
    if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
  }
  if (config_path.empty()) return args;

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> merged(args.begin(), args.begin() + std::min<std::size_t>(2, args.size()));
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (given(key)) continue;
    if (value == "true") {
      merged.push_back("--" + key);
    } else {
      merged.push_back("--" + key);
      merged.push_back(value);
    }
  }
  merged.insert(merged.end(), args.begin() + std::min<std::size_t>(2, args.size()), args.end());
  return merged;
}

struct Options {
  ExperimentConfig exp;
  std::string method = "mlvr";
  std::optional<double> step_size;
  std::optional<double> lambda;
  std::optional<Index> n_features;
  std::string config;
  bool no_cache = false;
};

void add_experiment_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.exp.dataset_path, "LIBSVM file (optionally gzip-compressed)")->required();
  cmd->add_option("--name", o.exp.dataset_name, "Dataset label for metadata");
  cmd->add_option("--levels", o.exp.levels, "Number of MLVR levels");
  cmd->add_option("--level-sizes", o.exp.level_sizes, "Comma-separated level sizes, coarsest first ('full' = n)");
  cmd->add_option("--step-size", o.step_size, "Fixed step size (omit for line search)");
  cmd->add_option("--inner-iters", o.exp.inner_iters, "Inner iterations m, e.g. n, 5n, n/2");
  cmd->add_option("--hessian-samples", o.exp.hessian_samples, "SSN Hessian subset size");
  cmd->add_option("--cg-iters", o.exp.cg_iters, "CG iterations per Newton step")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.exp.seed, "RNG seed");
  cmd->add_option("--tol", o.exp.tol, "Loss-gap tolerance");
  cmd->add_option("--budget", o.exp.budget, "Effective gradient evaluation budget");
  cmd->add_option("--lambda", o.lambda, "Regularization weight (default 1/n)");
  cmd->add_option("--n-features", o.n_features, "Feature count override (>= largest index)");
  cmd->add_option("--reference-cache", o.exp.reference_cache, "Reference sidecar path (default <dataset>.ref)");
  cmd->add_flag("--no-cache", o.no_cache, "Do not read or write the reference cache");
  cmd->add_option("--config", o.config, "Key-value config file mirroring the flags");
}

void finalize(Options& o) {
  o.exp.method = method_from_string(o.method);
  o.exp.step_size = o.step_size;
  o.exp.lambda = o.lambda;
  o.exp.n_features = o.n_features;
  o.exp.cache_reference = !o.no_cache;
}

const std::vector<std::string> kMethods{"gd", "newton", "sgd", "svrg", "sarah", "ssn", "mlvr"};

int run_command(Options& o) {
  finalize(o);
  const ExperimentResult result = run_experiment(o.exp);
  const Trace& t = result.trace;
  std::cout << "method " << t.metadata.method << " status " << to_string(t.status) << " records "
            << t.records.size() << " grad_calls " << t.records.back().effective_grads << " loss_diff "
            << t.records.back().loss_gap << '\n';
  if (!t.message.empty()) std::cerr << "note: " << t.message << '\n';
  return result.exit_status;
}

int sweep_command(Options& o, const std::vector<std::string>& methods, const std::vector<std::uint64_t>& seeds,
                  const std::string& out_dir, bool parallel) {
  finalize(o);
  ExperimentConfig base = o.exp;
  if (base.dataset_name.empty()) base.dataset_name = std::filesystem::path(base.dataset_path).stem().string();
  const SparseDataset data = load_libsvm(base.dataset_path, base.n_features);
  const double lambda = base.lambda.value_or(1.0 / static_cast<double>(data.n_samples()));
  const std::string cache =
      base.cache_reference ? (base.reference_cache.empty() ? base.dataset_path + ".ref" : base.reference_cache) : "";
  const Reference ref = cached_reference(LogisticObjective(data, lambda), cache);
  std::filesystem::create_directories(out_dir);

  std::vector<ExperimentConfig> runs;
  for (const auto& m : methods) {
    for (auto seed : seeds) {
      ExperimentConfig c = base;
      c.method = method_from_string(m);
      c.seed = seed;
      c.out = (std::filesystem::path(out_dir) / (base.dataset_name + "_" + m + "_seed" + std::to_string(seed) + ".csv"))
                  .string();
      runs.push_back(std::move(c));
    }
  }
  auto one = [&](const ExperimentConfig& c) {
    Trace t = run_method(data, c, lambda, ref.f_star);
    write_csv(c.out, t);
    nlohmann::json meta = {{"method", t.metadata.method},        {"dataset", t.metadata.dataset},
                           {"seed", t.metadata.seed},            {"config_digest", t.metadata.config_digest},
                           {"status", to_string(t.status)},      {"lambda", lambda},
                           {"f_star", ref.f_star}};
    std::ofstream(c.out + ".json") << meta.dump(2) << '\n';
    return t;
  };

  std::vector<Trace> traces;
  if (parallel) {
    std::vector<std::future<Trace>> futures;
    for (const auto& c : runs) futures.push_back(std::async(std::launch::async, one, std::cref(c)));
    for (auto& f : futures) traces.push_back(f.get());
  } else {
    for (const auto& c : runs) traces.push_back(one(c));
  }
  int status = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Trace& t = traces[i];
    std::cout << runs[i].out << ' ' << to_string(t.status) << ' ' << t.records.back().effective_grads << ' '
              << t.records.back().loss_gap << '\n';
    status = std::max(status, exit_status(t.status));
  }
  return status;
}

}  // namespace

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Multilevel variance-reduced training and finite-sum optimizer benchmarks"};
  app.require_subcommand(1);

  Options run_opts;
  auto* run = app.add_subcommand("run", "Run one experiment and write its convergence trace");
  add_experiment_flags(run, run_opts);
  run->add_option("--method", run_opts.method, "Optimizer")->check(CLI::IsMember(kMethods));
  run->add_option("--out", run_opts.exp.out, "CSV output path");

  Options sweep_opts;
  std::vector<std::string> sweep_methods{"mlvr"};
  std::vector<std::uint64_t> sweep_seeds{0};
  std::string sweep_dir = ".";
  bool sequential = false;
  auto* sweep = app.add_subcommand("sweep", "Grid of experiments over methods and seeds");
  add_experiment_flags(sweep, sweep_opts);
  sweep->add_option("--method,--methods", sweep_methods, "Optimizers")->delimiter(',')->check(CLI::IsMember(kMethods));
  sweep->add_option("--seeds", sweep_seeds, "Seeds")->delimiter(',');
  sweep->add_option("--out", sweep_dir, "Output directory");
  sweep->add_flag("--sequential", sequential, "Run experiments one after another");

  std::string ref_dataset, ref_out;
  std::optional<double> ref_lambda;
  std::optional<Index> ref_features;
  auto* reference = app.add_subcommand("reference", "Precompute and cache the reference minimizer");
  reference->add_option("--dataset", ref_dataset, "LIBSVM file")->required();
  reference->add_option("--lambda", ref_lambda, "Regularization weight (default 1/n)");
  reference->add_option("--n-features", ref_features, "Feature count override");
  reference->add_option("--out", ref_out, "Cache path (default <dataset>.ref)");

  std::string inspect_dataset;
  std::optional<Index> inspect_features;
  auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  inspect->add_option("--dataset", inspect_dataset, "LIBSVM file")->required();
  inspect->add_option("--n-features", inspect_features, "Feature count override");

  Index gen_n = 2000, gen_d = 50;
  double gen_span = 1e3;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic logistic-regression dataset");
  generate->add_option("--n", gen_n, "Samples")->check(CLI::PositiveNumber);
  generate->add_option("--d", gen_d, "Features")->check(CLI::PositiveNumber);
  generate->add_option("--scale-span", gen_span, "Ratio of largest to smallest feature scale");
  generate->add_option("--seed", gen_seed, "RNG seed");
  generate->add_option("--out", gen_out, "Output LIBSVM path")->required();

  try {
    std::vector<std::string> merged = merge_config(args);
    std::reverse(merged.begin() + 1, merged.end());
    merged.erase(merged.begin());
    app.parse(std::move(merged));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*run) return run_command(run_opts);
    if (*sweep) return sweep_command(sweep_opts, sweep_methods, sweep_seeds, sweep_dir, !sequential);
    if (*reference) {
      const SparseDataset data = load_libsvm(ref_dataset, ref_features);
      const double lambda = ref_lambda.value_or(1.0 / static_cast<double>(data.n_samples()));
      const std::string path = ref_out.empty() ? ref_dataset + ".ref" : ref_out;
      const Reference ref = cached_reference(LogisticObjective(data, lambda), path);
      std::cout << std::setprecision(17) << "f_star " << ref.f_star << "\ngrad_norm " << ref.grad_norm
                << "\niterations " << ref.iterations << "\ncache " << path << '\n';
      if (!ref.converged) std::cerr << "warning: gradient norm target not reached\n";
      return 0;
    }
    if (*inspect) {
      const SparseDataset data = load_libsvm(inspect_dataset, inspect_features);
      const Index positives = (data.labels().array() > 0.0).count();
      std::cout << "n " << data.n_samples() << "\nd " << data.n_features() << "\nnnz " << data.nnz() << "\npositive "
                << positives << "\nnegative " << data.n_samples() - positives << '\n';
      return 0;
    }
    if (*generate) {
      const SparseDataset data = synthetic_logistic(gen_n, gen_d, gen_span, gen_seed);
      std::ofstream out(gen_out);
      write_libsvm(out, data);
      if (!out) throw Error("error writing '" + gen_out + "'");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mlvr
