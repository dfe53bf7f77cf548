#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "robot/core.hpp"
#include "robot/rng.hpp"

namespace robot {

// ---------------------------------------------------------------------------
// Rover trajectory task: 30 waypoints in the unit square (60 inputs), densified
// by linear interpolation, scored by obstacle collisions plus endpoint misses.

struct Obstacle {
  double x0, y0, side;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x0 + side && y >= y0 && y <= y0 + side;
  }
};

struct RoverProblem {
  int n_waypoints = 30;
  Eigen::Vector2d start{0.05, 0.05};
  Eigen::Vector2d goal{0.95, 0.95};
  std::vector<Obstacle> obstacles;
  double collision_penalty_weight = 10.0;
  double endpoint_penalty_weight = 10.0;
  int n_samples_per_segment = 30;

  int dim() const { return 2 * n_waypoints; }

  // 5x5 grid of squares with side 0.05 and 0.1 clearance between neighboring
  // sides, centered in the unit square.
  static RoverProblem with_default_grid();
};

using Trajectory = std::vector<Eigen::Vector2d>;

// start, the interpolated waypoint chain, then goal; every segment contributes
// samples_per_segment interior/end samples.
Trajectory densify_trajectory(const Point& x, const RoverProblem& prob,
                              int samples_per_segment);

double rover_objective(const Point& x, const RoverProblem& prob);

double owd_diversity(const Trajectory& a, const Trajectory& b);

// Pairwise OWD between waypoint vectors with memoized trajectories and pair
// values; safe for concurrent use. Coarser densification than the objective's
// is allowed: OWD is stable under re-sampling.
class RoverOwdCache {
 public:
  RoverOwdCache(RoverProblem prob, int diversity_samples_per_segment);
  double operator()(const Point& a, const Point& b) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Portfolio task: nonnegative weights normalized onto the simplex, scored by
// the annualized Sharpe ratio of the tracked portfolio value.

struct PortfolioProblem {
  Eigen::MatrixXd prices;  // [T_days x n_assets], strictly positive

  int n_assets() const { return static_cast<int>(prices.cols()); }
  int n_days() const { return static_cast<int>(prices.rows()); }
};

// Clamp to >= 0 and normalize to sum 1; an all-zero vector maps to uniform.
Eigen::VectorXd normalize_weights(const Point& w);

double sharpe_objective(const Point& w, const PortfolioProblem& prob);

// Largest k such that the top-k holdings (by weight, ties to the lower index)
// of the two portfolios are disjoint; 0 if the top-1 holdings coincide.
double topk_disjoint_diversity(const Point& w1, const Point& w2);

PortfolioProblem load_prices(const std::string& path);

// Geometric-Brownian price paths, one column per asset, with per-asset drift
// and volatility drawn from fixed ranges.
Eigen::MatrixXd generate_gbm_prices(int n_days, int n_assets, Rng& rng);

void write_prices_csv(const std::string& path, const Eigen::MatrixXd& prices);

// ---------------------------------------------------------------------------
// Synthetic bump landscape: max of separated Gaussian bumps, so the diverse
// optimum set is the center list ordered by height.

struct SyntheticBumps {
  int dim = 2;
  std::vector<Point> centers;
  std::vector<double> heights;  // strictly decreasing
  std::vector<double> widths;

  // 2-D, four bumps of heights 1.0/0.9/0.8/0.7, width 0.05, centers on the
  // corners of a 0.6-side square.
  static SyntheticBumps four_corner_default();
};

double bumps_objective(const Point& x, const SyntheticBumps& prob);

// ---------------------------------------------------------------------------
// Named problem + diversity assembly used by the harness and tests.

struct Problem {
  std::string name;
  SearchSpace space;
  std::function<double(const Point&)> objective;
};

struct ProblemParams {
  std::string portfolio_csv;
  int rover_samples_per_segment = 30;
  int rover_diversity_samples_per_segment = 30;
};

// Names: quadratic2d | bumps | rover | portfolio.
Problem make_problem(const std::string& name, const ProblemParams& params);

// Names: euclidean | none | owd (rover only) | topk_disjoint. "none" is the
// vacuous measure (a large constant), so every pair is feasible.
DiversitySpec make_diversity(const std::string& name, double tau,
                             const std::string& problem_name,
                             const ProblemParams& params);

}  // namespace robot
