#pragma once

#include <string>
#include <vector>

#include "robot/core.hpp"
#include "robot/optimizer.hpp"
#include "robot/problems.hpp"

namespace robot {

enum class BaselineKind {
  turbo1,
  turbo_m,
  sequential_constrained,
  standard_bo,
  random_search
};

BaselineKind baseline_from_string(const std::string& name);
std::string baseline_to_string(BaselineKind kind);

// Scores a single-solution optimizer's history on the M-solution metric;
// identical semantics to reconstruct_feasible_set.
inline SolutionSet best_m_diverse(const History& history,
                                  const DiversitySpec& spec, int M) {
  return reconstruct_feasible_set(history, spec, M);
}

// Global selection across the concatenated per-region Thompson samples: the
// indices of the q largest sampled values, descending, ties to the lower
// index.
std::vector<int> allocate_batch(const Eigen::VectorXd& sampled, int q);

// Runs the requested reference optimizer under the shared budget/trace
// contract. The returned set is reconstruct_feasible_set over the final
// history, except for sequential_constrained which returns its own phase
// solutions (pairwise feasible by construction).
RunResult run_baseline(BaselineKind kind, const Problem& problem,
                       const RobotConfig& config, TraceSink sink = nullptr,
                       int repetition = 0);

}  // namespace robot
