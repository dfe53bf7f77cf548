#include "robot/core.hpp"

#include <limits>

namespace robot {

SolutionSet reconstruct_feasible_set(const History& history,
                                     const DiversitySpec& spec, int M) {
  if (history.empty()) throw std::invalid_argument("empty history");
  if (M < 1) throw std::invalid_argument("M must be >= 1");

  const std::size_t n = history.size();
  std::vector<char> taken(n, 0);
  SolutionSet out;
  out.ranked.reserve(static_cast<std::size_t>(M));

  for (int rank = 0; rank < M; ++rank) {
    double best_y = -std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const Evaluation& e = history.evals[i];
      if (!(e.y > best_y)) continue;
      bool feasible = true;
      for (const auto& fixed : out.ranked) {
        if (!pair_feasible(spec, e.x, fixed.x)) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        best_y = e.y;
        best_i = i;
      }
    }
    if (best_i == n) break;
    taken[best_i] = 1;
    out.ranked.push_back({history.evals[best_i].x, best_y, best_i});
  }
  return out;
}

}  // namespace robot
