#include "robot/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "robot/qmc.hpp"

namespace robot {

BaselineKind baseline_from_string(const std::string& name) {
  if (name == "turbo1") return BaselineKind::turbo1;
  if (name == "turbo_m") return BaselineKind::turbo_m;
  if (name == "sequential_constrained")
    return BaselineKind::sequential_constrained;
  if (name == "standard_bo") return BaselineKind::standard_bo;
  if (name == "random") return BaselineKind::random_search;
  throw std::runtime_error("unknown baseline '" + name + "'");
}

std::string baseline_to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::turbo1: return "turbo1";
    case BaselineKind::turbo_m: return "turbo_m";
    case BaselineKind::sequential_constrained: return "sequential_constrained";
    case BaselineKind::standard_bo: return "standard_bo";
    case BaselineKind::random_search: return "random";
  }
  throw std::logic_error("bad baseline kind");
}

std::vector<int> allocate_batch(const Eigen::VectorXd& sampled, int q) {
  std::vector<int> order(sampled.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&sampled](int a, int b) {
    if (sampled[a] != sampled[b]) return sampled[a] > sampled[b];
    return a < b;
  });
  if (static_cast<int>(order.size()) > q) order.resize(q);
  return order;
}

namespace {

struct BaselineState {
  SearchSpace space;
  SurrogateDriver surrogate;
  EvalLog log;
  Rng rng{0};
};

std::vector<std::size_t> pinned_rows(const SolutionSet& set) {
  std::vector<std::size_t> keep;
  for (const auto& e : set.ranked) keep.push_back(e.history_index);
  return keep;
}

BaselineState make_state(const Problem& problem, const RobotConfig& config,
                         TraceSink sink, int repetition) {
  problem.space.validate();
  config.validate(problem.space.dim());
  BaselineState st;
  st.space = problem.space;
  st.rng = Rng(config.seed);
  st.log.diversity = config.diversity;
  st.log.M = config.M;
  st.log.budget = config.budget;
  st.log.sink = std::move(sink);
  st.log.repetition = repetition;
  return st;
}

void evaluate_init_design(BaselineState& st, const Problem& problem,
                          const RobotConfig& config) {
  ScrambledSobol sobol(st.space.dim(), st.rng);
  const long n0 = std::min<long>(config.n_init, config.budget);
  for (long k = 0; k < n0; ++k) {
    Point x = st.space.denormalize(sobol.next());
    st.log.commit(x, problem.objective(x), "init");
  }
}

void refit(BaselineState& st, const RobotConfig& config, int epochs,
           const std::vector<std::size_t>& extra_pins = {}) {
  std::vector<std::size_t> keep = pinned_rows(st.log.current_set);
  keep.insert(keep.end(), extra_pins.begin(), extra_pins.end());
  st.surrogate.refit(st.space, st.log.history, keep, config.max_gp_points,
                     epochs, config.schedule.learning_rate);
}

bool duplicate_in_batch(const std::vector<Point>& batch, const Point& x) {
  for (const Point& p : batch)
    if (p.size() == x.size() && p == x) return true;
  return false;
}

Point random_point_norm(int dim, Rng& rng) {
  Point u(dim);
  for (int j = 0; j < dim; ++j) u[j] = rng.uniform();
  return u;
}

// Evaluates a fresh scrambled-Sobol design after a region collapse and
// returns the best draw (normalized coords and value) that is feasible
// against `fixed`, if any.
struct RestartDraw {
  bool found = false;
  Point best_norm;
  double best_y = -std::numeric_limits<double>::infinity();
};

RestartDraw evaluate_restart_design(BaselineState& st, const Problem& problem,
                                    int n_pts, const std::string& source,
                                    const std::vector<Point>& fixed,
                                    long eval_cap = -1) {
  RestartDraw out;
  ScrambledSobol sobol(st.space.dim(), st.rng);
  for (int k = 0; k < n_pts && !st.log.finished; ++k) {
    if (eval_cap == 0) break;
    if (eval_cap > 0) --eval_cap;
    Point u = sobol.next();
    Point x = st.space.denormalize(u);
    double y = problem.objective(x);
    st.log.commit(x, y, source);
    bool feasible = true;
    for (const Point& p : fixed) {
      if (!pair_feasible(st.log.diversity, x, p)) {
        feasible = false;
        break;
      }
    }
    if (feasible && y > out.best_y) {
      out.found = true;
      out.best_y = y;
      out.best_norm = u;
    }
  }
  return out;
}

// ------------------------------------------------------------------- turbo1

// Single trust region over the shared history, re-centered on the global
// best every iteration, TuRBO length dynamics, fresh quasi-random points on
// restart. Written as its own loop rather than a call into the rank-ordered
// optimizer so the reduction property is a real cross-check.
RunResult run_turbo1(const Problem& problem, const RobotConfig& config,
                     TraceSink sink, int repetition) {
  BaselineState st = make_state(problem, config, std::move(sink), repetition);
  const int dim = st.space.dim();
  const TrParams params = config.resolved_tr(dim);
  const int r = config.resolved_r(dim);

  evaluate_init_design(st, problem, config);
  refit(st, config, config.schedule.init_epochs);
  st.log.current_set =
      reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);

  TrustRegionState tr;
  tr.rank = 1;
  tr.length = params.length_init;
  tr.center = st.space.normalize(st.log.current_set.ranked[0].x);
  tr.incumbent_value = st.log.current_set.ranked[0].y;

  while (!st.log.finished && st.log.evals_used < config.budget) {
    st.log.iteration += 1;
    refit(st, config, config.schedule.step_epochs);
    st.log.current_set =
        reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);
    tr.center = st.space.normalize(st.log.current_set.ranked[0].x);
    tr.incumbent_value = st.log.current_set.ranked[0].y;

    Eigen::MatrixXd C = generate_candidates(
        tr, st.surrogate.hyper.lengthscales(), r, st.rng);
    Eigen::VectorXd sampled = st.surrogate.model->thompson_sample(C, st.rng);
    Eigen::MatrixXd C_raw(C.rows(), C.cols());
    for (int k = 0; k < C.rows(); ++k)
      C_raw.row(k) = st.space.denormalize(C.row(k).transpose()).transpose();
    std::vector<int> chosen =
        select_from_sampled(C_raw, sampled, {}, st.log.diversity,
                            config.batch_per_tr, /*apply_filter=*/false);

    std::vector<Point> evaluated;
    double batch_best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int idx : chosen) {
      if (st.log.finished) break;
      Point x = C_raw.row(idx).transpose();
      if (duplicate_in_batch(evaluated, x)) continue;
      double y = problem.objective(x);
      st.log.commit(x, y, "tr1");
      evaluated.push_back(std::move(x));
      any = true;
      if (y > batch_best) batch_best = y;
    }
    if (any) record_result(tr, params, batch_best);

    if (!st.log.finished && needs_restart(tr, params)) {
      tr.length = params.length_init;
      tr.success_count = 0;
      tr.failure_count = 0;
      RestartDraw draw = evaluate_restart_design(
          st, problem, config.resolved_restart_points(dim), "restart1", {});
      if (draw.found) {
        tr.center = draw.best_norm;
        tr.incumbent_value = draw.best_y;
        tr.center_is_fallback = false;
      } else {
        tr.center = random_point_norm(dim, st.rng);
        tr.incumbent_value = -std::numeric_limits<double>::infinity();
        tr.center_is_fallback = true;
      }
    }

    st.log.current_set =
        reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);
  }
  return {st.log.current_set, std::move(st.log.history)};
}

// ------------------------------------------------------------------ turbo_m

// M independent trust regions over one shared surrogate. Each keeps its own
// cumulative incumbent (best of its own evaluations plus its share of the
// initial design); the step batch is allocated globally across the union of
// all regions' Thompson-sampled candidates.
RunResult run_turbo_m(const Problem& problem, const RobotConfig& config,
                      TraceSink sink, int repetition) {
  BaselineState st = make_state(problem, config, std::move(sink), repetition);
  const int dim = st.space.dim();
  const TrParams params = config.resolved_tr(dim);
  const int r = config.resolved_r(dim);
  const int M = config.M;

  evaluate_init_design(st, problem, config);
  refit(st, config, config.schedule.init_epochs);
  st.log.current_set =
      reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);

  // Even shards of the initial design seed the per-region incumbents.
  const long n0 = static_cast<long>(st.log.history.size());
  std::vector<TrustRegionState> trs(M);
  {
    long base = n0 / M, extra = n0 % M, pos = 0;
    for (int i = 0; i < M; ++i) {
      long count = base + (i < extra ? 1 : 0);
      TrustRegionState& tr = trs[i];
      tr.rank = i + 1;
      tr.length = params.length_init;
      long best = -1;
      for (long k = pos; k < pos + count; ++k) {
        if (best < 0 || st.log.history.evals[k].y >
                            st.log.history.evals[best].y)
          best = k;
      }
      if (best >= 0) {
        tr.center = st.space.normalize(st.log.history.evals[best].x);
        tr.incumbent_value = st.log.history.evals[best].y;
      } else {
        tr.center = random_point_norm(dim, st.rng);
        tr.incumbent_value = -std::numeric_limits<double>::infinity();
        tr.center_is_fallback = true;
      }
      pos += count;
    }
  }

  while (!st.log.finished && st.log.evals_used < config.budget) {
    st.log.iteration += 1;
    refit(st, config, config.schedule.step_epochs);

    Eigen::MatrixXd C_raw(M * r, dim);
    Eigen::VectorXd sampled(M * r);
    for (int i = 0; i < M; ++i) {
      Eigen::MatrixXd C = generate_candidates(
          trs[i], st.surrogate.hyper.lengthscales(), r, st.rng);
      sampled.segment(i * r, r) =
          st.surrogate.model->thompson_sample(C, st.rng);
      for (int k = 0; k < r; ++k)
        C_raw.row(i * r + k) =
            st.space.denormalize(C.row(k).transpose()).transpose();
    }

    std::vector<int> chosen =
        allocate_batch(sampled, M * config.batch_per_tr);
    std::vector<Point> evaluated;
    std::vector<double> batch_best(M,
                                   -std::numeric_limits<double>::infinity());
    std::vector<Point> batch_best_x(M);
    std::vector<char> any(M, 0);
    for (int idx : chosen) {
      if (st.log.finished) break;
      int owner = idx / r;
      Point x = C_raw.row(idx).transpose();
      if (duplicate_in_batch(evaluated, x)) continue;
      double y = problem.objective(x);
      st.log.commit(x, y, "tr" + std::to_string(owner + 1));
      evaluated.push_back(std::move(x));
      any[owner] = 1;
      if (y > batch_best[owner]) {
        batch_best[owner] = y;
        batch_best_x[owner] = C_raw.row(idx).transpose();
      }
    }
    for (int i = 0; i < M; ++i) {
      if (!any[i]) continue;
      record_result(trs[i], params, batch_best[i]);
      if (batch_best[i] > trs[i].incumbent_value) {
        trs[i].incumbent_value = batch_best[i];
        trs[i].center = st.space.normalize(batch_best_x[i]);
        trs[i].center_is_fallback = false;
      }
    }

    for (int i = 0; i < M && !st.log.finished; ++i) {
      if (!needs_restart(trs[i], params)) continue;
      trs[i].length = params.length_init;
      trs[i].success_count = 0;
      trs[i].failure_count = 0;
      RestartDraw draw = evaluate_restart_design(
          st, problem, config.resolved_restart_points(dim),
          "restart" + std::to_string(i + 1), {});
      if (draw.found && draw.best_y > trs[i].incumbent_value) {
        trs[i].incumbent_value = draw.best_y;
        trs[i].center = draw.best_norm;
        trs[i].center_is_fallback = false;
      }
    }

    st.log.current_set =
        reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);
  }
  return {st.log.current_set, std::move(st.log.history)};
}

// ------------------------------------------------- sequential_constrained

// M runs of single-region BO in a row; phase i filters candidates against
// the finalized solutions of phases < i, starts from the best already-known
// feasible point, and shares the surrogate and history throughout.
RunResult run_sequential(const Problem& problem, const RobotConfig& config,
                         TraceSink sink, int repetition) {
  BaselineState st = make_state(problem, config, std::move(sink), repetition);
  const int dim = st.space.dim();
  const TrParams params = config.resolved_tr(dim);
  const int r = config.resolved_r(dim);
  const int M = config.M;

  evaluate_init_design(st, problem, config);
  refit(st, config, config.schedule.init_epochs);
  st.log.current_set =
      reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);

  std::vector<Point> priors;              // finalized phase solutions
  std::vector<std::size_t> prior_rows;    // their history indices
  SolutionSet final_set;

  // Best history row feasible against all priors (ties to the earliest).
  auto best_feasible_row = [&st, &priors]() -> long {
    long best = -1;
    for (std::size_t i = 0; i < st.log.history.size(); ++i) {
      const Evaluation& e = st.log.history.evals[i];
      if (best >= 0 && !(e.y > st.log.history.evals[best].y)) continue;
      bool ok = true;
      for (const Point& p : priors) {
        if (!pair_feasible(st.log.diversity, e.x, p)) {
          ok = false;
          break;
        }
      }
      if (ok) best = static_cast<long>(i);
    }
    return best;
  };

  long remaining = config.budget - st.log.evals_used;
  for (int phase = 0; phase < M && remaining > 0 && !st.log.finished; ++phase) {
    long phase_budget = remaining / (M - phase);
    remaining -= phase_budget;
    long phase_end = st.log.evals_used + phase_budget;
    const std::string source = "phase" + std::to_string(phase + 1);

    TrustRegionState tr;
    tr.rank = phase + 1;
    tr.length = params.length_init;
    long row = best_feasible_row();
    if (row >= 0) {
      tr.center = st.space.normalize(st.log.history.evals[row].x);
      tr.incumbent_value = st.log.history.evals[row].y;
    } else {
      tr.center = random_point_norm(dim, st.rng);
      tr.incumbent_value = -std::numeric_limits<double>::infinity();
      tr.center_is_fallback = true;
    }

    while (st.log.evals_used < phase_end && !st.log.finished) {
      st.log.iteration += 1;
      refit(st, config, config.schedule.step_epochs, prior_rows);
      row = best_feasible_row();
      if (row >= 0) {
        tr.center = st.space.normalize(st.log.history.evals[row].x);
        tr.incumbent_value = st.log.history.evals[row].y;
        tr.center_is_fallback = false;
      }

      Eigen::MatrixXd C = generate_candidates(
          tr, st.surrogate.hyper.lengthscales(), r, st.rng);
      Eigen::VectorXd sampled = st.surrogate.model->thompson_sample(C, st.rng);
      Eigen::MatrixXd C_raw(C.rows(), C.cols());
      for (int k = 0; k < C.rows(); ++k)
        C_raw.row(k) = st.space.denormalize(C.row(k).transpose()).transpose();
      std::vector<int> chosen =
          select_from_sampled(C_raw, sampled, priors, st.log.diversity,
                              config.batch_per_tr, /*apply_filter=*/true);

      if (chosen.empty()) {
        // Nothing feasible in the discretization: shrink toward a restart so
        // the phase keeps making progress.
        record_result(tr, params, -std::numeric_limits<double>::infinity());
      } else {
        std::vector<Point> evaluated;
        double batch_best = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (int idx : chosen) {
          if (st.log.finished || st.log.evals_used >= phase_end) break;
          Point x = C_raw.row(idx).transpose();
          if (duplicate_in_batch(evaluated, x)) continue;
          double y = problem.objective(x);
          st.log.commit(x, y, source);
          evaluated.push_back(std::move(x));
          any = true;
          if (y > batch_best) batch_best = y;
        }
        if (any) record_result(tr, params, batch_best);
      }

      if (!st.log.finished && st.log.evals_used < phase_end &&
          needs_restart(tr, params)) {
        tr.length = params.length_init;
        tr.success_count = 0;
        tr.failure_count = 0;
        RestartDraw draw = evaluate_restart_design(
            st, problem, config.resolved_restart_points(dim), source, priors,
            phase_end - st.log.evals_used);
        if (draw.found) {
          tr.center = draw.best_norm;
          tr.incumbent_value = draw.best_y;
          tr.center_is_fallback = false;
        } else {
          tr.center = random_point_norm(dim, st.rng);
          tr.incumbent_value = -std::numeric_limits<double>::infinity();
          tr.center_is_fallback = true;
        }
      }
    }

    long final_row = best_feasible_row();
    if (final_row >= 0) {
      const Evaluation& e = st.log.history.evals[final_row];
      priors.push_back(e.x);
      prior_rows.push_back(static_cast<std::size_t>(final_row));
      final_set.ranked.push_back(
          {e.x, e.y, static_cast<std::size_t>(final_row)});
    }
  }

  st.log.current_set =
      reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);
  return {final_set, std::move(st.log.history)};
}

// -------------------------------------------------------------- standard_bo

// Global Thompson sampling over a fresh low-discrepancy discretization of
// the whole space each step; no trust regions.
RunResult run_standard_bo(const Problem& problem, const RobotConfig& config,
                          TraceSink sink, int repetition) {
  BaselineState st = make_state(problem, config, std::move(sink), repetition);
  const int dim = st.space.dim();
  const int r = config.resolved_r(dim);
  const int batch = config.M * config.batch_per_tr;

  evaluate_init_design(st, problem, config);
  refit(st, config, config.schedule.init_epochs);
  st.log.current_set =
      reconstruct_feasible_set(st.log.history, st.log.diversity, st.log.M);

  while (!st.log.finished && st.log.evals_used < config.budget) {
    st.log.iteration += 1;
    refit(st, config, config.schedule.step_epochs);

    ScrambledSobol sobol(dim, st.rng);
    Eigen::MatrixXd C = sobol.draw(r);
    Eigen::VectorXd sampled = st.surrogate.model->thompson_sample(C, st.rng);
    std::vector<int> chosen = allocate_batch(sampled, batch);

    std::vector<Point> evaluated;
    for (int idx : chosen) {
      if (st.log.finished) break;
      Point x = st.space.denormalize(C.row(idx).transpose());
      if (duplicate_in_batch(evaluated, x)) continue;
      double y = problem.objective(x);
      st.log.commit(x, y, "global");
      evaluated.push_back(std::move(x));
    }
  }
  return {st.log.current_set, std::move(st.log.history)};
}

// ------------------------------------------------------------------- random

// Uniform random search over the whole budget; an exact repeat of an
// already-evaluated point is redrawn.
RunResult run_random(const Problem& problem, const RobotConfig& config,
                     TraceSink sink, int repetition) {
  BaselineState st = make_state(problem, config, std::move(sink), repetition);
  const int dim = st.space.dim();
  std::set<std::vector<double>> seen;
  while (!st.log.finished && st.log.evals_used < config.budget) {
    Point x;
    std::vector<double> key;
    do {
      x = st.space.denormalize(random_point_norm(dim, st.rng));
      key.assign(x.data(), x.data() + x.size());
    } while (!seen.insert(key).second);
    st.log.commit(x, problem.objective(x), "random");
  }
  return {st.log.current_set, std::move(st.log.history)};
}

}  // namespace

RunResult run_baseline(BaselineKind kind, const Problem& problem,
                       const RobotConfig& config, TraceSink sink,
                       int repetition) {
  switch (kind) {
    case BaselineKind::turbo1:
      return run_turbo1(problem, config, std::move(sink), repetition);
    case BaselineKind::turbo_m:
      return run_turbo_m(problem, config, std::move(sink), repetition);
    case BaselineKind::sequential_constrained:
      return run_sequential(problem, config, std::move(sink), repetition);
    case BaselineKind::standard_bo:
      return run_standard_bo(problem, config, std::move(sink), repetition);
    case BaselineKind::random_search:
      return run_random(problem, config, std::move(sink), repetition);
  }
  throw std::logic_error("bad baseline kind");
}

}  // namespace robot
