#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "robot/core.hpp"
#include "robot/gp.hpp"
#include "robot/problems.hpp"
#include "robot/rng.hpp"
#include "robot/trust_region.hpp"

namespace robot {

struct SurrogateSchedule {
  int init_epochs = 20;
  int step_epochs = 2;
  double learning_rate = 0.001;
};

struct RobotConfig {
  int M = 1;
  DiversitySpec diversity;
  int n_init = 20;
  long budget = 100;
  int r = 0;  // candidates per trust region per step; 0 -> min(100*dim, 5000)
  int batch_per_tr = 1;
  TrParams tr_params;  // failure_tolerance 0 -> max(5, ceil(dim/batch_per_tr))
  std::uint64_t seed = 0;
  SurrogateSchedule schedule;
  int max_gp_points = 2000;     // surrogate training subsample cap
  int restart_init_points = 0;  // 0 -> max(2*dim, 20)

  int resolved_r(int dim) const {
    if (r > 0) return r;
    int v = 100 * dim;
    return v > 5000 ? 5000 : v;
  }
  int resolved_restart_points(int dim) const {
    if (restart_init_points > 0) return restart_init_points;
    return std::max(2 * dim, 20);
  }
  TrParams resolved_tr(int dim) const {
    TrParams t = tr_params;
    if (t.failure_tolerance <= 0)
      t.failure_tolerance = TrParams::default_failure_tolerance(dim, batch_per_tr);
    t.validate();
    return t;
  }
  void validate(int dim) const;
};

struct TraceRow {
  int repetition = 0;
  long iteration = 0;  // 0 during initialization
  long evals_used = 0;
  std::string source;
  Point x;
  double y = 0.0;
  double set_mean = 0.0;
  double set_best = 0.0;
};

// Called once per committed evaluation with the row and the solution set as
// of that evaluation.
using TraceSink =
    std::function<void(const TraceRow&, const SolutionSet&)>;

// Append-only evaluation bookkeeping shared by all optimizers: budget
// accounting, the running solution set, and trace emission. The running set
// is recomputed only when a new evaluation can possibly change it (the set
// is not full, or the value beats the lowest filled rank).
struct EvalLog {
  History history;
  SolutionSet current_set;
  DiversitySpec diversity;
  int M = 1;
  long budget = 0;
  long evals_used = 0;
  long iteration = 0;
  int repetition = 0;
  bool finished = false;
  TraceSink sink;

  void commit(const Point& x_raw, double y, const std::string& source);
  long remaining() const { return budget - evals_used; }
};

// Surrogate maintenance shared by all GP-based optimizers: subsampling,
// target standardization, warm-started refits. Training inputs are the
// normalized coordinates.
struct SurrogateDriver {
  GpHyperparams hyper;
  AdamState adam;
  TargetScaler scaler;
  std::optional<GpModel> model;

  // keep: history rows that must stay in the training set regardless of
  // recency (the current solution set).
  void refit(const SearchSpace& space, const History& history,
             const std::vector<std::size_t>& keep, int cap, int epochs,
             double lr);
};

// Training subsample: the cap most recent rows plus the pinned rows, in
// history order.
std::vector<std::size_t> surrogate_subsample(std::size_t n,
                                             const std::vector<std::size_t>& keep,
                                             int cap);

// Top-`batch` candidates by sampled value (ties to the lower row index),
// optionally keeping only rows whose raw point is diversity-feasible against
// every point in `selected_raw`. Returns row indices in descending sampled
// order.
std::vector<int> select_from_sampled(const Eigen::MatrixXd& C_raw,
                                     const Eigen::VectorXd& sampled,
                                     const std::vector<Point>& selected_raw,
                                     const DiversitySpec& spec, int batch,
                                     bool apply_filter);

struct RobotState {
  SearchSpace space;
  std::vector<TrustRegionState> trs;
  SurrogateDriver surrogate;
  EvalLog log;
  Rng rng{0};

  const History& history() const { return log.history; }
  const SolutionSet& current_set() const { return log.current_set; }
  long evals_used() const { return log.evals_used; }
  bool finished() const { return log.finished; }
};

struct RunResult {
  SolutionSet final_set;
  History history;
};

// Evaluates the quasi-random initial design, fits the surrogate, and centers
// the trust regions rank by rank on the reconstructed set; ranks with no
// feasible initial point fall back to a uniform random center and are
// flagged.
RobotState robot_initialize(const Problem& problem, const RobotConfig& config,
                            TraceSink sink = nullptr, int repetition = 0);

// Hierarchically constrained Thompson sampling: rank i samples candidates
// from its region, draws one joint posterior realization, filters against
// the points selected by ranks < i this step (rank 1 is never filtered), and
// keeps its top batch_per_tr feasible candidates. Returns raw points per
// rank; a rank with an empty feasible set selects nothing.
std::vector<std::vector<Point>> robot_select_candidates(RobotState& state,
                                                        const RobotConfig& config);

// One iteration: refit surrogate, recenter on the reconstructed set, select,
// evaluate (truncated at the budget), update trust-region lengths, restart
// collapsed regions with fresh quasi-random points, and recenter again.
void robot_step(RobotState& state, const Problem& problem,
                const RobotConfig& config);

RunResult robot_run(const Problem& problem, const RobotConfig& config,
                    TraceSink sink = nullptr, int repetition = 0);

}  // namespace robot
