#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robot/robot.h"

namespace {

int fail(const char* what, const char* msg) {
  std::fprintf(stderr, "robot %s: %s\n", what, msg);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse trust-region Bayesian optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--seed", seed, "override the base seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  run->add_option("--out-dir", out_dir, "override the output directory");

  std::vector<std::string> traces;
  int m = 1;
  double tau = 0.0;
  std::string diversity = "euclidean";
  std::string out_path = "summary.csv";
  auto* summarize =
      app.add_subcommand("summarize", "Recompute a summary from trace CSVs");
  summarize->add_option("traces", traces, "trace CSV files")->required();
  summarize->add_option("--m", m, "number of ranked solutions")->required();
  summarize->add_option("--tau", tau, "diversity threshold")->required();
  summarize
      ->add_option("--diversity", diversity,
                   "euclidean | none | owd | topk_disjoint")
      ->required();
  summarize->add_option("--out", out_path, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  char err[1024] = {0};
  if (run->parsed()) {
    robot_config* cfg = nullptr;
    if (robot_config_load(config_path.c_str(), &cfg, err, sizeof(err)) != ROBOT_OK)
      return fail("run", err);
    if (seed_set &&
        robot_config_set_seed(cfg, seed, err, sizeof(err)) != ROBOT_OK) {
      robot_config_free(cfg);
      return fail("run", err);
    }
    if (!out_dir.empty() &&
        robot_config_set_out_dir(cfg, out_dir.c_str(), err, sizeof(err)) !=
            ROBOT_OK) {
      robot_config_free(cfg);
      return fail("run", err);
    }
    robot_status st = robot_run_experiment(cfg, err, sizeof(err));
    robot_config_free(cfg);
    if (st != ROBOT_OK) return fail("run", err);
    return 0;
  }

  std::vector<const char*> paths;
  paths.reserve(traces.size());
  for (const auto& t : traces) paths.push_back(t.c_str());
  if (robot_summarize(paths.data(), paths.size(), m, tau, diversity.c_str(),
                      out_path.c_str(), err, sizeof(err)) != ROBOT_OK)
    return fail("summarize", err);
  return 0;
}
