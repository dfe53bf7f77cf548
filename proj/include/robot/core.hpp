#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace robot {

using Point = Eigen::VectorXd;

struct SearchSpace {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }

  static SearchSpace unit_cube(int dim) {
    SearchSpace s;
    s.lower = Eigen::VectorXd::Zero(dim);
    s.upper = Eigen::VectorXd::Ones(dim);
    return s;
  }

  void validate() const {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw std::invalid_argument("search space: bad bounds");
    for (int j = 0; j < dim(); ++j)
      if (!(lower[j] < upper[j]))
        throw std::invalid_argument("search space: lower must be < upper");
  }

  Point clamp(const Point& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  // Map to/from the internal unit cube the optimizers work in.
  Point normalize(const Point& x) const {
    return (x - lower).cwiseQuotient(upper - lower);
  }
  Point denormalize(const Point& u) const {
    return lower + u.cwiseProduct(upper - lower);
  }
};

struct Evaluation {
  Point x;
  double y;
  std::string source;  // TR id ("tr1", "restart2", ...) or baseline tag
};

// Append-only evaluation log in evaluation order.
struct History {
  std::vector<Evaluation> evals;

  std::size_t size() const { return evals.size(); }
  bool empty() const { return evals.empty(); }
  void append(Point x, double y, std::string source) {
    evals.push_back({std::move(x), y, std::move(source)});
  }
};

// Symmetric pairwise diversity measure with its feasibility threshold.
struct DiversitySpec {
  std::function<double(const Point&, const Point&)> measure;
  double tau = 0.0;
  std::string name = "euclidean";
};

inline bool pair_feasible(const DiversitySpec& spec, const Point& a,
                          const Point& b) {
  return spec.measure(a, b) >= spec.tau;
}

struct SolutionEntry {
  Point x;
  double y;
  std::size_t history_index;
};

// Rank-ordered solution set: entry i is pairwise feasible against every
// entry j < i. Rank 1 (index 0) holds the best value in the history it was
// reconstructed from; values are non-increasing down the ranks.
struct SolutionSet {
  std::vector<SolutionEntry> ranked;

  std::size_t size() const { return ranked.size(); }
  bool empty() const { return ranked.empty(); }

  double best_value() const {
    return ranked.empty() ? -std::numeric_limits<double>::infinity()
                          : ranked.front().y;
  }

  // Mean objective value over the filled ranks.
  double mean_value() const {
    if (ranked.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (const auto& e : ranked) s += e.y;
    return s / static_cast<double>(ranked.size());
  }
};

// Greedy rank-by-rank rebuild of the solution set from the full history.
// Rank 1 is the plain argmax; rank i is the best point feasible against all
// filled higher ranks, excluding entries already placed. Ties go to the
// earliest-evaluated point. Once some rank cannot be filled, no later rank
// can either (its feasible pool only shrinks), so the result is a prefix of
// length <= M.
SolutionSet reconstruct_feasible_set(const History& history,
                                     const DiversitySpec& spec, int M);

}  // namespace robot
