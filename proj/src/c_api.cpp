#include "robot/robot.h"

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "robot/harness.hpp"

struct robot_config {
  robot::ExperimentConfig cfg;
};

namespace {

void set_err(char* errbuf, size_t errcap, const std::string& msg) {
  if (!errbuf || errcap == 0) return;
  std::snprintf(errbuf, errcap, "%s", msg.c_str());
}

template <typename Fn>
robot_status guarded(char* errbuf, size_t errcap, Fn&& fn) {
  try {
    fn();
    return ROBOT_OK;
  } catch (const std::exception& e) {
    set_err(errbuf, errcap, e.what());
    return ROBOT_ERROR;
  } catch (...) {
    set_err(errbuf, errcap, "unknown error");
    return ROBOT_ERROR;
  }
}

// owd and topk_disjoint carry problem-specific context; supply the matching
// defaults when summarizing standalone traces.
std::string diversity_problem_context(const std::string& diversity) {
  if (diversity == "owd") return "rover";
  if (diversity == "topk_disjoint") return "portfolio";
  return "";
}

}  // namespace

extern "C" {

const char* robot_version(void) { return "0.1.0"; }

robot_status robot_config_load(const char* path, robot_config** out,
                               char* errbuf, size_t errcap) {
  if (!path || !out) {
    set_err(errbuf, errcap, "robot_config_load: null argument");
    return ROBOT_ERROR;
  }
  *out = nullptr;
  return guarded(errbuf, errcap, [&] {
    *out = new robot_config{robot::parse_config_file(path)};
  });
}

void robot_config_free(robot_config* cfg) { delete cfg; }

robot_status robot_config_set_seed(robot_config* cfg, uint64_t seed,
                                   char* errbuf, size_t errcap) {
  if (!cfg) {
    set_err(errbuf, errcap, "robot_config_set_seed: null config");
    return ROBOT_ERROR;
  }
  cfg->cfg.seed_base = static_cast<long>(seed);
  return ROBOT_OK;
}

robot_status robot_config_set_out_dir(robot_config* cfg, const char* out_dir,
                                      char* errbuf, size_t errcap) {
  if (!cfg || !out_dir) {
    set_err(errbuf, errcap, "robot_config_set_out_dir: null argument");
    return ROBOT_ERROR;
  }
  cfg->cfg.out_dir = out_dir;
  return ROBOT_OK;
}

robot_status robot_run_experiment(const robot_config* cfg, char* errbuf,
                                  size_t errcap) {
  if (!cfg) {
    set_err(errbuf, errcap, "robot_run_experiment: null config");
    return ROBOT_ERROR;
  }
  return guarded(errbuf, errcap, [&] { robot::run_experiment(cfg->cfg); });
}

robot_status robot_summarize(const char* const* trace_paths, size_t n_paths,
                             int m, double tau, const char* diversity,
                             const char* out_path, char* errbuf,
                             size_t errcap) {
  if (!trace_paths || !diversity || !out_path) {
    set_err(errbuf, errcap, "robot_summarize: null argument");
    return ROBOT_ERROR;
  }
  return guarded(errbuf, errcap, [&] {
    std::vector<std::string> paths;
    paths.reserve(n_paths);
    for (size_t i = 0; i < n_paths; ++i) {
      if (!trace_paths[i]) throw std::runtime_error("robot_summarize: null path");
      paths.emplace_back(trace_paths[i]);
    }
    robot::ProblemParams params;
    robot::DiversitySpec spec = robot::make_diversity(
        diversity, tau, diversity_problem_context(diversity), params);
    auto rows = robot::summarize_traces(paths, m, spec);
    robot::write_summary_csv(out_path, rows);
  });
}

}  // extern "C"
