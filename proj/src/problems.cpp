#include "robot/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace robot {

// --------------------------------------------------------------------- rover

RoverProblem RoverProblem::with_default_grid() {
  RoverProblem p;
  // 5 squares of side 0.05 with 0.1 between neighboring sides span 0.65;
  // 0.175 margins center the grid in the unit square.
  const double side = 0.05, pitch = 0.15, margin = 0.175;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      p.obstacles.push_back({margin + i * pitch, margin + j * pitch, side});
  return p;
}

Trajectory densify_trajectory(const Point& x, const RoverProblem& prob,
                              int samples_per_segment) {
  if (x.size() != prob.dim())
    throw std::invalid_argument("rover: point has wrong dimension");
  const int n = prob.n_waypoints;
  std::vector<Eigen::Vector2d> nodes;
  nodes.reserve(n + 2);
  nodes.push_back(prob.start);
  for (int k = 0; k < n; ++k) {
    double wx = std::clamp(x[2 * k], 0.0, 1.0);
    double wy = std::clamp(x[2 * k + 1], 0.0, 1.0);
    nodes.emplace_back(wx, wy);
  }
  nodes.push_back(prob.goal);

  Trajectory traj;
  traj.reserve(1 + (nodes.size() - 1) * samples_per_segment);
  traj.push_back(nodes.front());
  for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
    for (int t = 1; t <= samples_per_segment; ++t) {
      double f = static_cast<double>(t) / samples_per_segment;
      traj.push_back(nodes[s] + f * (nodes[s + 1] - nodes[s]));
    }
  }
  return traj;
}

double rover_objective(const Point& x, const RoverProblem& prob) {
  Trajectory traj = densify_trajectory(x, prob, prob.n_samples_per_segment);
  std::size_t hits = 0;
  for (const auto& p : traj) {
    for (const auto& ob : prob.obstacles) {
      if (ob.contains(p.x(), p.y())) {
        ++hits;
        break;
      }
    }
  }
  double collision_fraction =
      static_cast<double>(hits) / static_cast<double>(traj.size());

  const int n = prob.n_waypoints;
  Eigen::Vector2d w_first(std::clamp(x[0], 0.0, 1.0),
                          std::clamp(x[1], 0.0, 1.0));
  Eigen::Vector2d w_last(std::clamp(x[2 * n - 2], 0.0, 1.0),
                         std::clamp(x[2 * n - 1], 0.0, 1.0));
  double endpoint = (w_first - prob.start).norm() + (w_last - prob.goal).norm();

  return 5.0 - prob.collision_penalty_weight * collision_fraction -
         prob.endpoint_penalty_weight * endpoint;
}

double owd_diversity(const Trajectory& a, const Trajectory& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("owd: empty trajectory");
  auto one_way = [](const Trajectory& u, const Trajectory& v) {
    double total = 0.0;
    for (const auto& p : u) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : v) {
        double d = (p - q).squaredNorm();
        if (d < best) best = d;
      }
      total += std::sqrt(best);
    }
    return total / static_cast<double>(u.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

struct RoverOwdCache::Impl {
  RoverProblem prob;
  int samples;
  std::mutex mu;
  std::map<std::vector<double>, std::shared_ptr<Trajectory>> trajs;
  std::map<std::pair<const Trajectory*, const Trajectory*>, double> pairs;

  static constexpr std::size_t kMaxTrajs = 1u << 17;
  static constexpr std::size_t kMaxPairs = 1u << 21;

  std::shared_ptr<Trajectory> traj_for(const Point& x) {
    std::vector<double> key(x.data(), x.data() + x.size());
    auto it = trajs.find(key);
    if (it != trajs.end()) return it->second;
    auto t = std::make_shared<Trajectory>(densify_trajectory(x, prob, samples));
    trajs.emplace(std::move(key), t);
    return t;
  }
};

RoverOwdCache::RoverOwdCache(RoverProblem prob,
                             int diversity_samples_per_segment)
    : impl_(std::make_shared<Impl>()) {
  impl_->prob = std::move(prob);
  impl_->samples = diversity_samples_per_segment;
}

double RoverOwdCache::operator()(const Point& a, const Point& b) const {
  Impl& im = *impl_;
  std::lock_guard<std::mutex> lock(im.mu);
  if (im.trajs.size() > Impl::kMaxTrajs || im.pairs.size() > Impl::kMaxPairs) {
    // Pair keys point into the trajectory map; both caches reset together.
    im.pairs.clear();
    im.trajs.clear();
  }
  auto ta = im.traj_for(a);
  auto tb = im.traj_for(b);
  const Trajectory* lo = ta.get();
  const Trajectory* hi = tb.get();
  if (hi < lo) std::swap(lo, hi);
  std::pair<const Trajectory*, const Trajectory*> key{lo, hi};
  auto it = im.pairs.find(key);
  if (it != im.pairs.end()) return it->second;
  double d = owd_diversity(*ta, *tb);
  im.pairs.emplace(key, d);
  return d;
}

// ----------------------------------------------------------------- portfolio

Eigen::VectorXd normalize_weights(const Point& w) {
  Eigen::VectorXd v = w.cwiseMax(0.0);
  double s = v.sum();
  if (s <= 0.0)
    return Eigen::VectorXd::Constant(w.size(), 1.0 / static_cast<double>(w.size()));
  return v / s;
}

double sharpe_objective(const Point& w, const PortfolioProblem& prob) {
  const int T = prob.n_days();
  if (T < 2) throw std::invalid_argument("sharpe: fewer than 2 days of prices");
  if (w.size() != prob.n_assets())
    throw std::invalid_argument("sharpe: weight dimension mismatch");

  Eigen::VectorXd wn = normalize_weights(w);
  // v_t = sum_j w_j * prices(t,j)/prices(0,j); fold the day-0 division into w.
  Eigen::VectorXd w0 = wn.cwiseQuotient(prob.prices.row(0).transpose());
  Eigen::VectorXd v = prob.prices * w0;

  double roi = v[T - 1] / v[0] - 1.0;
  Eigen::VectorXd r(T - 1);
  for (int t = 0; t + 1 < T; ++t) r[t] = v[t + 1] / v[t] - 1.0;

  double sigma = 0.0;
  if (T - 1 >= 2) {
    double mean = r.mean();
    sigma = std::sqrt((r.array() - mean).square().sum() /
                      static_cast<double>(T - 2));
  }
  if (sigma == 0.0) {
    if (roi > 0.0) return 1e6;
    if (roi < 0.0) return -1e6;
    return 0.0;
  }
  return roi / (sigma * std::sqrt(252.0));
}

double topk_disjoint_diversity(const Point& w1, const Point& w2) {
  if (w1.size() != w2.size())
    throw std::invalid_argument("topk diversity: dimension mismatch");
  const int n = static_cast<int>(w1.size());
  auto order = [n](const Point& w) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&w](int a, int b) {
      if (w[a] != w[b]) return w[a] > w[b];
      return a < b;
    });
    return idx;
  };
  std::vector<int> o1 = order(w1), o2 = order(w2);
  std::vector<char> in1(n, 0), in2(n, 0);
  for (int k = 1; k <= n; ++k) {
    int a = o1[k - 1], b = o2[k - 1];
    if (a == b || in2[a] || in1[b]) return static_cast<double>(k - 1);
    in1[a] = 1;
    in2[b] = 1;
  }
  return static_cast<double>(n);
}

PortfolioProblem load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("prices csv: cannot open '" + path + "'");

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
  };

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("prices csv: empty file");
  const std::size_t n_cols = split(line).size();
  if (n_cols == 0) throw std::runtime_error("prices csv: empty header");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != n_cols)
      throw std::runtime_error("prices csv: row " + std::to_string(line_no) +
                               ": expected " + std::to_string(n_cols) +
                               " columns, got " + std::to_string(cells.size()));
    std::vector<double> row(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      double v;
      std::size_t used = 0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[c].size() || cells[c].empty())
        throw std::runtime_error("prices csv: row " + std::to_string(line_no) +
                                 ", column " + std::to_string(c + 1) +
                                 ": invalid number '" + cells[c] + "'");
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::runtime_error("prices csv: row " + std::to_string(line_no) +
                                 ", column " + std::to_string(c + 1) +
                                 ": price must be positive");
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2)
    throw std::runtime_error("prices csv: fewer than 2 days of prices");

  PortfolioProblem prob;
  prob.prices.resize(static_cast<int>(rows.size()), static_cast<int>(n_cols));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < n_cols; ++c)
      prob.prices(static_cast<int>(t), static_cast<int>(c)) = rows[t][c];
  return prob;
}

Eigen::MatrixXd generate_gbm_prices(int n_days, int n_assets, Rng& rng) {
  Eigen::MatrixXd prices(n_days, n_assets);
  const double dt = 1.0 / 252.0;
  for (int j = 0; j < n_assets; ++j) {
    double mu = rng.uniform(-0.1, 0.3);
    double sigma = rng.uniform(0.1, 0.4);
    double s = rng.uniform(20.0, 200.0);
    prices(0, j) = s;
    for (int t = 1; t < n_days; ++t) {
      s *= std::exp((mu - 0.5 * sigma * sigma) * dt +
                    sigma * std::sqrt(dt) * rng.normal());
      prices(t, j) = s;
    }
  }
  return prices;
}

void write_prices_csv(const std::string& path, const Eigen::MatrixXd& prices) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("prices csv: cannot write '" + path + "'");
  for (int j = 0; j < prices.cols(); ++j)
    out << (j ? "," : "") << "asset_" << (j + 1);
  out << "\n";
  char buf[64];
  for (int t = 0; t < prices.rows(); ++t) {
    for (int j = 0; j < prices.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", prices(t, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

// --------------------------------------------------------------------- bumps

SyntheticBumps SyntheticBumps::four_corner_default() {
  SyntheticBumps b;
  b.dim = 2;
  auto pt = [](double x, double y) {
    Point p(2);
    p << x, y;
    return p;
  };
  b.centers = {pt(0.2, 0.2), pt(0.8, 0.2), pt(0.2, 0.8), pt(0.8, 0.8)};
  b.heights = {1.0, 0.9, 0.8, 0.7};
  b.widths = {0.05, 0.05, 0.05, 0.05};
  return b;
}

double bumps_objective(const Point& x, const SyntheticBumps& prob) {
  double best = 0.0;
  for (std::size_t k = 0; k < prob.centers.size(); ++k) {
    double d2 = (x - prob.centers[k]).squaredNorm();
    double v = prob.heights[k] *
               std::exp(-d2 / (2.0 * prob.widths[k] * prob.widths[k]));
    if (v > best) best = v;
  }
  return best;
}

// ------------------------------------------------------------------ assembly

Problem make_problem(const std::string& name, const ProblemParams& params) {
  Problem p;
  p.name = name;
  if (name == "quadratic2d") {
    p.space = SearchSpace::unit_cube(2);
    p.objective = [](const Point& x) {
      return 1.0 - 4.0 * (x[0] - 0.25) * (x[0] - 0.25) -
             (x[1] - 0.75) * (x[1] - 0.75);
    };
  } else if (name == "bumps") {
    p.space = SearchSpace::unit_cube(2);
    auto bumps = std::make_shared<SyntheticBumps>(
        SyntheticBumps::four_corner_default());
    p.objective = [bumps](const Point& x) { return bumps_objective(x, *bumps); };
  } else if (name == "rover") {
    auto rover = std::make_shared<RoverProblem>(RoverProblem::with_default_grid());
    rover->n_samples_per_segment = params.rover_samples_per_segment;
    p.space = SearchSpace::unit_cube(rover->dim());
    p.objective = [rover](const Point& x) { return rover_objective(x, *rover); };
  } else if (name == "portfolio") {
    if (params.portfolio_csv.empty())
      throw std::runtime_error("portfolio problem requires portfolio_csv");
    auto prob = std::make_shared<PortfolioProblem>(
        load_prices(params.portfolio_csv));
    p.space = SearchSpace::unit_cube(prob->n_assets());
    p.objective = [prob](const Point& x) { return sharpe_objective(x, *prob); };
  } else {
    throw std::runtime_error("unknown problem '" + name + "'");
  }
  return p;
}

DiversitySpec make_diversity(const std::string& name, double tau,
                             const std::string& problem_name,
                             const ProblemParams& params) {
  DiversitySpec spec;
  spec.name = name;
  spec.tau = tau;
  if (name == "euclidean") {
    spec.measure = [](const Point& a, const Point& b) { return (a - b).norm(); };
  } else if (name == "none") {
    spec.measure = [](const Point&, const Point&) { return 1e18; };
  } else if (name == "owd") {
    if (problem_name != "rover")
      throw std::runtime_error("owd diversity requires the rover problem");
    RoverProblem rover = RoverProblem::with_default_grid();
    rover.n_samples_per_segment = params.rover_samples_per_segment;
    RoverOwdCache cache(rover, params.rover_diversity_samples_per_segment);
    spec.measure = [cache](const Point& a, const Point& b) {
      return cache(a, b);
    };
  } else if (name == "topk_disjoint") {
    spec.measure = topk_disjoint_diversity;
  } else {
    throw std::runtime_error("unknown diversity '" + name + "'");
  }
  return spec;
}

}  // namespace robot
