#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robot/baselines.hpp"
#include "robot/optimizer.hpp"
#include "robot/problems.hpp"

namespace robot {

// Flat key = value experiment description. Unknown keys, duplicate keys, and
// malformed values are reported with their line number.
struct ExperimentConfig {
  std::string problem;    // quadratic2d | bumps | rover | portfolio
  std::string method;     // robot | turbo1 | turbo_m | sequential_constrained
                          // | standard_bo | random
  std::string diversity = "euclidean";
  double tau = 0.0;
  int m = 1;
  long budget = 100;
  int n_init = 20;
  int r = 0;
  int batch_per_tr = 1;
  int repetitions = 1;
  long seed_base = 0;
  std::string out_dir;

  double length_init = 0.8;
  double length_min = 0.0078125;
  double length_max = 1.6;
  int success_tolerance = 3;
  int failure_tolerance = 0;
  double gamma_rel = 1e-3;

  int init_epochs = 20;
  int step_epochs = 2;
  double learning_rate = 0.001;
  int max_gp_points = 2000;
  int restart_init_points = 0;

  ProblemParams problem_params;

  Problem make_problem_instance() const;
  RobotConfig to_robot_config(std::uint64_t seed) const;
  DiversitySpec make_diversity_spec() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct SummaryRow {
  long evals = 0;
  double mean = 0.0;    // across repetitions of the per-rep filled-rank mean
  double stderr_ = 0.0; // sample stddev / sqrt(repetitions)
  double fill = 0.0;    // mean filled-rank count
};

// Checkpoints every 100 evaluations plus the final count.
std::vector<long> checkpoint_grid(long final_evals);

struct ExperimentOutput {
  std::vector<std::string> trace_paths;
  std::string final_solutions_path;
  std::string summary_path;
};

// Runs `repetitions` seeded runs (seed_base + rep), writing per-rep trace
// CSVs, a final-solutions CSV with all pairwise diversity values, and a
// checkpointed summary CSV. Writes are atomic (temp file then rename);
// partial outputs are removed if any repetition fails.
ExperimentOutput run_experiment(const ExperimentConfig& config);

// Applies best_m_diverse to each checkpoint prefix of each trace and
// aggregates across repetitions. All traces must share one dimension.
std::vector<SummaryRow> summarize_traces(const std::vector<std::string>& trace_paths,
                                         int M, const DiversitySpec& spec);

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);

// One parsed trace repetition: evaluation-ordered history plus the trace's
// per-evaluation set columns.
struct LoadedTrace {
  int repetition = 0;
  History history;
  std::vector<double> set_mean;
  std::vector<double> set_best;
};

std::vector<LoadedTrace> load_trace_csv(const std::string& path);

std::string format_double(double v);  // %.17g, round-trip exact

}  // namespace robot
