// segfit command-line interface.
//
//   segfit generate --config ref.json --out data/
//   segfit fit --method drl --config ref.json --out runs/
//   segfit bench --config ref.json
//   segfit oracle --config ref.json --step 0.01

#include "segfit/bench.hpp"
#include "segfit/config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

// Missing inputs and bad configs exit with this status.
constexpr int kUsageError = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method = "drl";
  std::string data;
  double step = 0.01;
  std::optional<std::size_t> runs;
  bool no_timing = false;
};

segfit::ExperimentConfig load(const Options& o) {
  segfit::ExperimentConfig cfg;
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw InputError("config file not found: " + o.config);
    cfg = segfit::load_config(o.config);
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.runs) cfg.runs = *o.runs;
  if (o.no_timing) cfg.timing = false;
  return cfg;
}

segfit::Problem problem_for(const segfit::ExperimentConfig& cfg, const Options& o) {
  if (o.data.empty()) return segfit::make_problem(cfg);
  if (!fs::exists(o.data)) throw InputError("data file not found: " + o.data);
  auto data = segfit::load_xyz(o.data);
  if (data.empty()) throw InputError("data file has no points: " + o.data);
  return segfit::make_problem(cfg, std::move(data));
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw std::runtime_error("cannot create output directory " + dir);
  return p;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_generate(const Options& o) {
  auto cfg = load(o);
  if (o.seed) cfg.scene.seed = *o.seed;
  const auto scene = segfit::generate_scene(cfg.scene);
  const auto dir = ensure_dir(cfg.output_dir);
  segfit::save_xyz((dir / "clean.xyz").string(), scene.clean);
  segfit::save_xyz((dir / "corrupted.xyz").string(), scene.corrupted);
  const auto problem = segfit::make_problem(cfg, scene.corrupted);
  write_json(dir / "truth.json", segfit::solution_json(scene.truth, segfit::verify(problem, scene.truth)));
  std::cout << "wrote " << scene.clean.size() << " clean and " << scene.corrupted.size()
            << " corrupted points to " << dir.string() << '\n';
  return 0;
}

int cmd_fit(const Options& o) {
  auto cfg = load(o);
  const auto method = segfit::method_from_string(o.method);
  const auto problem = problem_for(cfg, o);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  const auto result = segfit::run_method(problem, cfg, method, seed);

  const auto dir = ensure_dir(cfg.output_dir);
  const std::string name = segfit::to_string(method);
  {
    std::ofstream out(dir / (name + "_trace.csv"));
    segfit::write_trace_csv(out, result.trace);
  }
  {
    std::ofstream out(dir / (name + "_cost.csv"));
    segfit::write_cost_csv(out, segfit::cost_report(result.ledger));
  }
  write_json(dir / (name + "_solution.json"), segfit::solution_json(result.best_solution, result.best_score));
  if (result.actor) segfit::save_checkpoint((dir / (name + "_actor.ckpt")).string(), *result.actor);
  if (result.critic) segfit::save_checkpoint((dir / (name + "_critic.ckpt")).string(), *result.critic);

  std::cout << name << " best score " << result.best_score << " after " << result.ledger.f_evals()
            << " f-evaluations; thetas";
  for (const auto& t : result.best_solution.thetas) std::cout << ' ' << t.front();
  std::cout << '\n';
  return 0;
}

int cmd_bench(const Options& o) {
  auto cfg = load(o);
  if (o.seed) cfg.seed = *o.seed;
  const auto res = segfit::run_experiment(cfg);
  for (const auto& row : res.comparison)
    std::cout << row.view << ": drl median " << row.drl_median << " @" << row.drl_iteration
              << " episodes (" << row.drl_f_evals << " evals), cs median " << row.cs_median << " @"
              << row.cs_iteration << " iterations\n";
  std::cout << "wrote " << cfg.output_dir << "/summary.csv\n";
  return 0;
}

int cmd_oracle(const Options& o) {
  auto cfg = load(o);
  const auto problem = problem_for(cfg, o);
  const auto res = segfit::grid_oracle(problem, o.step);
  const auto dir = ensure_dir(cfg.output_dir);
  write_json(dir / "oracle.json", segfit::solution_json(res.solution, res.score));
  std::cout << "oracle score " << res.score << "; thetas";
  for (const auto& t : res.solution.thetas) std::cout << ' ' << t.front();
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-model vertical-segment fitting: scenes, optimizers and benchmarks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run-config");
    sub->add_option("--out", o.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "Seed override");
  };

  auto* gen = app.add_subcommand("generate", "Write clean.xyz, corrupted.xyz and truth.json");
  common(gen);

  auto* fit = app.add_subcommand("fit", "Run one optimizer once");
  common(fit);
  fit->add_option("--method", o.method, "drl or cs")->check(CLI::IsMember({"drl", "cs"}));
  fit->add_option("--data", o.data, "Fit this point file instead of the generated scene");
  fit->add_flag("--no-timing", o.no_timing, "Record zero times for reproducible traces");

  auto* bench = app.add_subcommand("bench", "Multi-seed comparison of both optimizers");
  common(bench);
  bench->add_option("--runs", o.runs, "Number of seeds");
  bench->add_flag("--no-timing", o.no_timing, "Record zero times for reproducible traces");

  auto* oracle = app.add_subcommand("oracle", "Grid-search reference fit");
  common(oracle);
  oracle->add_option("--step", o.step, "Grid step")->check(CLI::PositiveNumber);
  oracle->add_option("--data", o.data, "Fit this point file instead of the generated scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*fit) return cmd_fit(o);
    if (*bench) return cmd_bench(o);
    if (*oracle) return cmd_oracle(o);
  } catch (const segfit::ConfigError& e) {
    std::cerr << "segfit: config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InputError& e) {
    std::cerr << "segfit: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "segfit: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
