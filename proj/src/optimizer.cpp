#include "robot/optimizer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "robot/qmc.hpp"

namespace robot {

void RobotConfig::validate(int dim) const {
  if (M < 1) throw std::invalid_argument("config: M must be >= 1");
  if (n_init < 1) throw std::invalid_argument("config: n_init must be >= 1");
  if (budget < 1) throw std::invalid_argument("config: budget must be >= 1");
  if (batch_per_tr < 1)
    throw std::invalid_argument("config: batch_per_tr must be >= 1");
  if (batch_per_tr > resolved_r(dim))
    throw std::invalid_argument("config: batch_per_tr must be <= r");
  if (max_gp_points < 1)
    throw std::invalid_argument("config: max_gp_points must be >= 1");
  if (!diversity.measure)
    throw std::invalid_argument("config: diversity measure not set");
  resolved_tr(dim);
}

void EvalLog::commit(const Point& x_raw, double y, const std::string& source) {
  if (finished) return;
  history.append(x_raw, y, source);
  evals_used += 1;
  if (evals_used >= budget) finished = true;

  // The greedy rebuild can only produce a different set if the new point
  // itself enters it: at the first unfilled rank (feasible against every
  // filled entry) or by displacing a rank it strictly beats while staying
  // feasible against all higher ranks. Otherwise every rank re-selects its
  // previous entry and the full rescan is skipped.
  bool maybe_changes = false;
  const std::size_t filled = current_set.size();
  bool feasible_above = true;
  for (std::size_t i = 0; i <= filled; ++i) {
    if (i == static_cast<std::size_t>(M)) break;
    if (i == filled) {
      maybe_changes = feasible_above;
      break;
    }
    if (feasible_above && y > current_set.ranked[i].y) {
      maybe_changes = true;
      break;
    }
    feasible_above =
        feasible_above && pair_feasible(diversity, x_raw, current_set.ranked[i].x);
    if (!feasible_above) break;
  }
  if (maybe_changes)
    current_set = reconstruct_feasible_set(history, diversity, M);

  if (sink) {
    TraceRow row;
    row.repetition = repetition;
    row.iteration = iteration;
    row.evals_used = evals_used;
    row.source = source;
    row.x = x_raw;
    row.y = y;
    row.set_mean = current_set.mean_value();
    row.set_best = current_set.best_value();
    sink(row, current_set);
  }
}

std::vector<std::size_t> surrogate_subsample(std::size_t n,
                                             const std::vector<std::size_t>& keep,
                                             int cap) {
  if (n <= static_cast<std::size_t>(cap)) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<std::size_t> idx;
  idx.reserve(keep.size() + cap);
  for (std::size_t i = n - cap; i < n; ++i) idx.push_back(i);
  for (std::size_t k : keep)
    if (k < n - cap) idx.push_back(k);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

void SurrogateDriver::refit(const SearchSpace& space, const History& history,
                            const std::vector<std::size_t>& keep, int cap,
                            int epochs, double lr) {
  const std::size_t n = history.size();
  if (n == 0) throw std::logic_error("surrogate refit with empty history");
  std::vector<std::size_t> idx = surrogate_subsample(n, keep, cap);

  const int dim = space.dim();
  Eigen::MatrixXd X(idx.size(), dim);
  Eigen::VectorXd y(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    X.row(k) = space.normalize(history.evals[idx[k]].x).transpose();
    y[k] = history.evals[idx[k]].y;
  }
  if (hyper.log_lengthscales.size() != dim) hyper = GpHyperparams::defaults(dim);
  scaler = TargetScaler::fit(y);
  model = GpModel::fit(X, scaler.scale(y), hyper, epochs, lr, &adam);
  hyper = model->hyper();
}

std::vector<int> select_from_sampled(const Eigen::MatrixXd& C_raw,
                                     const Eigen::VectorXd& sampled,
                                     const std::vector<Point>& selected_raw,
                                     const DiversitySpec& spec, int batch,
                                     bool apply_filter) {
  const int r = static_cast<int>(C_raw.rows());
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&sampled](int a, int b) {
    if (sampled[a] != sampled[b]) return sampled[a] > sampled[b];
    return a < b;
  });

  std::vector<int> chosen;
  chosen.reserve(batch);
  for (int i : order) {
    if (static_cast<int>(chosen.size()) >= batch) break;
    if (apply_filter) {
      Point c = C_raw.row(i).transpose();
      bool ok = true;
      for (const Point& p : selected_raw) {
        if (!pair_feasible(spec, c, p)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    chosen.push_back(i);
  }
  return chosen;
}

namespace {

std::vector<std::size_t> pinned_rows(const SolutionSet& set) {
  std::vector<std::size_t> keep;
  keep.reserve(set.size());
  for (const auto& e : set.ranked) keep.push_back(e.history_index);
  return keep;
}

void refit_on_log(RobotState& state, const RobotConfig& config, int epochs) {
  state.surrogate.refit(state.space, state.log.history,
                        pinned_rows(state.log.current_set),
                        config.max_gp_points, epochs,
                        config.schedule.learning_rate);
}

// Snap trust-region centers to the freshly reconstructed set. Unfilled ranks
// keep their previous (possibly fallback) center and incumbent.
void recenter_trust_regions(RobotState& state) {
  state.log.current_set = reconstruct_feasible_set(
      state.log.history, state.log.diversity, state.log.M);
  const SolutionSet& set = state.log.current_set;
  for (std::size_t i = 0; i < state.trs.size(); ++i) {
    if (i < set.size()) {
      state.trs[i].center = state.space.normalize(set.ranked[i].x);
      state.trs[i].incumbent_value = set.ranked[i].y;
      state.trs[i].center_is_fallback = false;
    }
  }
}

Point random_point_norm(int dim, Rng& rng) {
  Point u(dim);
  for (int j = 0; j < dim; ++j) u[j] = rng.uniform();
  return u;
}

bool duplicate_in_batch(const std::vector<Point>& batch, const Point& x) {
  for (const Point& p : batch)
    if (p.size() == x.size() && p == x) return true;
  return false;
}

// Fresh quasi-random points for a collapsed region: reset the length, draw
// and evaluate a new global design, and re-center on the best draw that is
// feasible against the filled higher ranks (fallback to a random center when
// none is).
void restart_trust_region(RobotState& state, const Problem& problem,
                          const RobotConfig& config, const TrParams& params,
                          std::size_t rank_idx) {
  const int dim = state.space.dim();
  TrustRegionState& tr = state.trs[rank_idx];
  tr.length = params.length_init;
  tr.success_count = 0;
  tr.failure_count = 0;

  std::vector<Point> higher;
  for (std::size_t j = 0; j < rank_idx && j < state.log.current_set.size(); ++j)
    higher.push_back(state.log.current_set.ranked[j].x);

  ScrambledSobol sobol(dim, state.rng);
  const int n_pts = config.resolved_restart_points(dim);
  const std::string source = "restart" + std::to_string(rank_idx + 1);

  bool found = false;
  Point best_norm;
  double best_y = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_pts && !state.log.finished; ++k) {
    Point u = sobol.next();
    Point x = state.space.denormalize(u);
    double y = problem.objective(x);
    state.log.commit(x, y, source);
    bool feasible = true;
    for (const Point& p : higher) {
      if (!pair_feasible(state.log.diversity, x, p)) {
        feasible = false;
        break;
      }
    }
    if (feasible && y > best_y) {
      found = true;
      best_y = y;
      best_norm = u;
    }
  }
  if (found) {
    tr.center = best_norm;
    tr.incumbent_value = best_y;
    tr.center_is_fallback = false;
  } else {
    tr.center = random_point_norm(dim, state.rng);
    tr.incumbent_value = -std::numeric_limits<double>::infinity();
    tr.center_is_fallback = true;
  }
}

}  // namespace

RobotState robot_initialize(const Problem& problem, const RobotConfig& config,
                            TraceSink sink, int repetition) {
  problem.space.validate();
  const int dim = problem.space.dim();
  config.validate(dim);
  const TrParams params = config.resolved_tr(dim);

  RobotState state;
  state.space = problem.space;
  state.rng = Rng(config.seed);
  state.log.diversity = config.diversity;
  state.log.M = config.M;
  state.log.budget = config.budget;
  state.log.sink = std::move(sink);
  state.log.repetition = repetition;
  state.log.iteration = 0;

  ScrambledSobol sobol(dim, state.rng);
  const long n0 = std::min<long>(config.n_init, config.budget);
  for (long k = 0; k < n0; ++k) {
    Point x = state.space.denormalize(sobol.next());
    state.log.commit(x, problem.objective(x), "init");
  }

  refit_on_log(state, config, config.schedule.init_epochs);

  state.log.current_set = reconstruct_feasible_set(
      state.log.history, state.log.diversity, state.log.M);
  const SolutionSet& set = state.log.current_set;
  state.trs.resize(config.M);
  for (int i = 0; i < config.M; ++i) {
    TrustRegionState& tr = state.trs[i];
    tr.rank = i + 1;
    tr.length = params.length_init;
    if (i < static_cast<int>(set.size())) {
      tr.center = state.space.normalize(set.ranked[i].x);
      tr.incumbent_value = set.ranked[i].y;
      tr.center_is_fallback = false;
    } else {
      tr.center = random_point_norm(dim, state.rng);
      tr.incumbent_value = -std::numeric_limits<double>::infinity();
      tr.center_is_fallback = true;
    }
  }
  return state;
}

std::vector<std::vector<Point>> robot_select_candidates(RobotState& state,
                                                        const RobotConfig& config) {
  const int dim = state.space.dim();
  const int r = config.resolved_r(dim);
  const Eigen::VectorXd lengthscales = state.surrogate.hyper.lengthscales();

  std::vector<std::vector<Point>> per_rank(config.M);
  std::vector<Point> selected_raw;  // P_i: all picks by higher ranks this step
  for (int i = 0; i < config.M; ++i) {
    Eigen::MatrixXd C = generate_candidates(state.trs[i], lengthscales, r,
                                            state.rng);
    Eigen::VectorXd sampled = state.surrogate.model->thompson_sample(C, state.rng);
    Eigen::MatrixXd C_raw(C.rows(), C.cols());
    for (int k = 0; k < C.rows(); ++k)
      C_raw.row(k) = state.space.denormalize(C.row(k).transpose()).transpose();
    std::vector<int> chosen =
        select_from_sampled(C_raw, sampled, selected_raw, state.log.diversity,
                            config.batch_per_tr, /*apply_filter=*/i > 0);
    for (int idx : chosen) {
      Point x = C_raw.row(idx).transpose();
      per_rank[i].push_back(x);
      selected_raw.push_back(std::move(x));
    }
  }
  return per_rank;
}

void robot_step(RobotState& state, const Problem& problem,
                const RobotConfig& config) {
  if (state.log.finished) return;
  const TrParams params = config.resolved_tr(state.space.dim());
  state.log.iteration += 1;

  refit_on_log(state, config, config.schedule.step_epochs);
  recenter_trust_regions(state);

  std::vector<std::vector<Point>> selected = robot_select_candidates(state, config);

  std::vector<Point> evaluated_this_step;
  for (int i = 0; i < config.M; ++i) {
    double batch_best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const Point& x : selected[i]) {
      if (state.log.finished) break;
      if (duplicate_in_batch(evaluated_this_step, x)) continue;
      double y = problem.objective(x);
      state.log.commit(x, y, "tr" + std::to_string(i + 1));
      evaluated_this_step.push_back(x);
      any = true;
      if (y > batch_best) batch_best = y;
    }
    if (any) record_result(state.trs[i], params, batch_best);
  }

  for (std::size_t i = 0; i < state.trs.size() && !state.log.finished; ++i) {
    if (needs_restart(state.trs[i], params))
      restart_trust_region(state, problem, config, params, i);
  }

  recenter_trust_regions(state);
}

RunResult robot_run(const Problem& problem, const RobotConfig& config,
                    TraceSink sink, int repetition) {
  RobotState state = robot_initialize(problem, config, std::move(sink), repetition);
  while (!state.log.finished && state.log.evals_used < config.budget)
    robot_step(state, problem, config);
  return {state.log.current_set, std::move(state.log.history)};
}

}  // namespace robot
