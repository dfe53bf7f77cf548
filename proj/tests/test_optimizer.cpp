#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robot/optimizer.hpp"

using namespace robot;

namespace {

Problem toy2d() {
  Problem p;
  p.name = "toy2d";
  p.space = SearchSpace::unit_cube(2);
  p.objective = [](const Point& x) {
    return 1.0 - 4.0 * (x[0] - 0.25) * (x[0] - 0.25) -
           (x[1] - 0.75) * (x[1] - 0.75);
  };
  return p;
}

Problem toy1d() {
  Problem p;
  p.name = "toy1d";
  p.space = SearchSpace::unit_cube(1);
  p.objective = [](const Point& x) { return -(x[0] - 0.3) * (x[0] - 0.3); };
  return p;
}

DiversitySpec euclidean(double tau) {
  DiversitySpec s;
  s.measure = [](const Point& a, const Point& b) { return (a - b).norm(); };
  s.tau = tau;
  s.name = "euclidean";
  return s;
}

DiversitySpec vacuous() {
  DiversitySpec s;
  s.measure = [](const Point&, const Point&) { return 1e18; };
  s.tau = 0.0;
  s.name = "none";
  return s;
}

RobotConfig small_config(int M, DiversitySpec spec, long budget,
                         std::uint64_t seed) {
  RobotConfig c;
  c.M = M;
  c.diversity = std::move(spec);
  c.n_init = 12;
  c.budget = budget;
  c.r = 50;
  c.max_gp_points = 64;
  c.seed = seed;
  return c;
}

bool histories_equal(const History& a, const History& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.evals[i].x != b.evals[i].x) return false;
    if (a.evals[i].y != b.evals[i].y) return false;
    if (a.evals[i].source != b.evals[i].source) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("selection orders by sampled value and filters infeasible rows") {
  Eigen::MatrixXd C(4, 1);
  C << 0.0, 0.9, 0.05, 0.5;
  Eigen::VectorXd sampled(4);
  sampled << 3.0, 5.0, 4.0, 1.0;
  Point zero = Point::Zero(1);
  DiversitySpec spec = euclidean(0.3);

  std::vector<int> unfiltered =
      select_from_sampled(C, sampled, {zero}, spec, 2, false);
  CHECK(unfiltered == std::vector<int>{1, 2});

  std::vector<int> filtered =
      select_from_sampled(C, sampled, {zero}, spec, 2, true);
  CHECK(filtered == std::vector<int>{1, 3});

  // Everything infeasible: nothing is selected.
  std::vector<int> none = select_from_sampled(
      C, sampled, {zero}, euclidean(5.0), 2, true);
  CHECK(none.empty());
}

TEST_CASE("selection ties break toward the lower row index") {
  Eigen::MatrixXd C(3, 1);
  C << 0.1, 0.2, 0.3;
  Eigen::VectorXd sampled(3);
  sampled << 2.0, 7.0, 7.0;
  std::vector<int> chosen =
      select_from_sampled(C, sampled, {}, vacuous(), 2, false);
  CHECK(chosen == std::vector<int>{1, 2});
}

TEST_CASE("surrogate subsample keeps recency plus pins") {
  std::vector<std::size_t> all = surrogate_subsample(5, {}, 10);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});

  std::vector<std::size_t> cut = surrogate_subsample(10, {1, 7}, 4);
  CHECK(cut == std::vector<std::size_t>{1, 6, 7, 8, 9});
}

TEST_CASE("config validation") {
  Problem p = toy2d();
  RobotConfig c = small_config(2, euclidean(0.2), 50, 0);
  c.validate(2);

  RobotConfig bad = c;
  bad.M = 0;
  CHECK_THROWS(bad.validate(2));
  bad = c;
  bad.batch_per_tr = 999;  // exceeds r
  CHECK_THROWS(bad.validate(2));
  bad = c;
  bad.diversity.measure = nullptr;
  CHECK_THROWS(bad.validate(2));

  CHECK(c.resolved_r(2) == 50);
  RobotConfig defaults;
  defaults.diversity = vacuous();
  CHECK(defaults.resolved_r(2) == 200);
  CHECK(defaults.resolved_r(60) == 5000);  // capped
  CHECK(defaults.resolved_restart_points(2) == 20);
  CHECK(defaults.resolved_restart_points(60) == 120);
}

TEST_CASE("initialization centers regions on the reconstructed set") {
  Problem p = toy2d();
  RobotConfig c = small_config(2, euclidean(0.1), 100, 3);
  RobotState st = robot_initialize(p, c);

  CHECK(st.history().size() == 12);
  for (const auto& e : st.history().evals) CHECK(e.source == "init");

  SolutionSet want =
      reconstruct_feasible_set(st.history(), c.diversity, c.M);
  REQUIRE(st.current_set().size() == want.size());
  REQUIRE(want.size() == 2);
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(st.trs[i].center == st.space.normalize(want.ranked[i].x));
    CHECK(st.trs[i].incumbent_value == want.ranked[i].y);
    CHECK_FALSE(st.trs[i].center_is_fallback);
    CHECK(st.trs[i].rank == static_cast<int>(i) + 1);
    CHECK(st.trs[i].length == c.tr_params.length_init);
  }
}

TEST_CASE("unfillable ranks fall back to random centers") {
  Problem p = toy1d();
  RobotConfig c = small_config(3, euclidean(1.2), 40, 5);  // only rank 1 fits
  RobotState st = robot_initialize(p, c);
  CHECK(st.current_set().size() == 1);
  CHECK_FALSE(st.trs[0].center_is_fallback);
  for (int i = 1; i < 3; ++i) {
    CHECK(st.trs[i].center_is_fallback);
    CHECK(st.trs[i].incumbent_value ==
          -std::numeric_limits<double>::infinity());
    CHECK(st.trs[i].center[0] >= 0.0);
    CHECK(st.trs[i].center[0] <= 1.0);
  }
}

TEST_CASE("vacuous diversity selects a full batch per rank") {
  Problem p = toy2d();
  RobotConfig c = small_config(3, vacuous(), 400, 11);
  c.batch_per_tr = 2;
  RobotState st = robot_initialize(p, c);
  std::vector<std::vector<Point>> picks = robot_select_candidates(st, c);
  REQUIRE(picks.size() == 3);
  int total = 0;
  for (const auto& rank_picks : picks) {
    CHECK(rank_picks.size() == 2);
    total += static_cast<int>(rank_picks.size());
  }
  CHECK(total == 6);
}

TEST_CASE("run satisfies budget accounting and per-row feasibility") {
  Problem p = toy2d();
  RobotConfig c = small_config(3, euclidean(0.25), 90, 21);

  long rows = 0;
  long last_evals = 0;
  double last_best = -std::numeric_limits<double>::infinity();
  double running_max = -std::numeric_limits<double>::infinity();
  TraceSink sink = [&](const TraceRow& row, const SolutionSet& set) {
    ++rows;
    CHECK(row.evals_used == last_evals + 1);
    last_evals = row.evals_used;

    running_max = std::max(running_max, row.y);
    CHECK(row.set_best == running_max);   // rank 1 is the global best so far
    CHECK(row.set_best >= last_best);     // and never regresses
    last_best = row.set_best;

    REQUIRE(set.size() >= 1);
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        CHECK(c.diversity.measure(set.ranked[i].x, set.ranked[j].x) >=
              c.diversity.tau);
  };

  RunResult result = robot_run(p, c, sink);
  CHECK(rows == 90);
  CHECK(static_cast<long>(result.history.size()) == 90);

  SolutionSet rebuilt =
      reconstruct_feasible_set(result.history, c.diversity, c.M);
  REQUIRE(result.final_set.size() == rebuilt.size());
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    CHECK(result.final_set.ranked[i].y == rebuilt.ranked[i].y);
    CHECK(result.final_set.ranked[i].history_index ==
          rebuilt.ranked[i].history_index);
  }
}

TEST_CASE("budget equal to the initial design skips optimization") {
  Problem p = toy2d();
  RobotConfig c = small_config(2, euclidean(0.2), 12, 8);  // budget == n_init
  RunResult r = robot_run(p, c);
  CHECK(static_cast<long>(r.history.size()) == 12);
  for (const auto& e : r.history.evals) CHECK(e.source == "init");
}

TEST_CASE("budget exhaustion truncates a batch mid-step") {
  Problem p = toy2d();
  RobotConfig c = small_config(2, vacuous(), 13, 101);  // one step of one eval
  c.batch_per_tr = 3;
  RunResult r = robot_run(p, c);
  CHECK(static_cast<long>(r.history.size()) == 13);
  CHECK(r.history.evals.back().source == "tr1");
}

TEST_CASE("runs are deterministic per seed") {
  Problem p = toy2d();
  RobotConfig c = small_config(2, euclidean(0.3), 70, 77);
  RunResult a = robot_run(p, c);
  RunResult b = robot_run(p, c);
  CHECK(histories_equal(a.history, b.history));

  c.seed = 78;
  RunResult other = robot_run(p, c);
  CHECK_FALSE(histories_equal(a.history, other.history));
}

TEST_CASE("collapsed regions restart with fresh design points") {
  Problem p;
  p.name = "flat";
  p.space = SearchSpace::unit_cube(2);
  p.objective = [](const Point&) { return 0.0; };  // every batch fails

  RobotConfig c = small_config(2, euclidean(0.2), 120, 9);
  c.tr_params.length_init = 0.01;  // one halving from collapse
  c.tr_params.failure_tolerance = 1;
  c.restart_init_points = 6;

  bool saw_restart1 = false, saw_restart2 = false;
  RunResult r = robot_run(p, c, [&](const TraceRow& row, const SolutionSet&) {
    if (row.source == "restart1") saw_restart1 = true;
    if (row.source == "restart2") saw_restart2 = true;
  });
  CHECK(static_cast<long>(r.history.size()) == 120);
  CHECK(saw_restart1);
  CHECK(saw_restart2);
}

TEST_CASE("iteration numbering starts after the initial design") {
  Problem p = toy2d();
  RobotConfig c = small_config(1, vacuous(), 20, 2);
  c.n_init = 10;
  std::vector<long> iters;
  robot_run(p, c, [&](const TraceRow& row, const SolutionSet&) {
    iters.push_back(row.iteration);
  });
  REQUIRE(iters.size() == 20);
  for (int i = 0; i < 10; ++i) CHECK(iters[i] == 0);
  CHECK(iters[10] == 1);
  CHECK(iters.back() >= 1);
}
