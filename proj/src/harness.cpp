#include "robot/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace robot {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long parse_long(const std::string& value, const std::string& key, int line) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "': invalid integer '" + value + "'");
  return v;
}

double parse_double(const std::string& value, const std::string& key, int line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key +
                      "': invalid number '" + value + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> setters = {
      {"problem", [&c](const std::string& v, int) { c.problem = v; }},
      {"method", [&c](const std::string& v, int) { c.method = v; }},
      {"diversity", [&c](const std::string& v, int) { c.diversity = v; }},
      {"tau", [&c](const std::string& v, int l) { c.tau = parse_double(v, "tau", l); }},
      {"m", [&c](const std::string& v, int l) { c.m = static_cast<int>(parse_long(v, "m", l)); }},
      {"budget", [&c](const std::string& v, int l) { c.budget = parse_long(v, "budget", l); }},
      {"n_init", [&c](const std::string& v, int l) { c.n_init = static_cast<int>(parse_long(v, "n_init", l)); }},
      {"r", [&c](const std::string& v, int l) { c.r = static_cast<int>(parse_long(v, "r", l)); }},
      {"batch_per_tr", [&c](const std::string& v, int l) { c.batch_per_tr = static_cast<int>(parse_long(v, "batch_per_tr", l)); }},
      {"repetitions", [&c](const std::string& v, int l) { c.repetitions = static_cast<int>(parse_long(v, "repetitions", l)); }},
      {"seed_base", [&c](const std::string& v, int l) { c.seed_base = parse_long(v, "seed_base", l); }},
      {"out_dir", [&c](const std::string& v, int) { c.out_dir = v; }},
      {"length_init", [&c](const std::string& v, int l) { c.length_init = parse_double(v, "length_init", l); }},
      {"length_min", [&c](const std::string& v, int l) { c.length_min = parse_double(v, "length_min", l); }},
      {"length_max", [&c](const std::string& v, int l) { c.length_max = parse_double(v, "length_max", l); }},
      {"success_tolerance", [&c](const std::string& v, int l) { c.success_tolerance = static_cast<int>(parse_long(v, "success_tolerance", l)); }},
      {"failure_tolerance", [&c](const std::string& v, int l) { c.failure_tolerance = static_cast<int>(parse_long(v, "failure_tolerance", l)); }},
      {"gamma_rel", [&c](const std::string& v, int l) { c.gamma_rel = parse_double(v, "gamma_rel", l); }},
      {"init_epochs", [&c](const std::string& v, int l) { c.init_epochs = static_cast<int>(parse_long(v, "init_epochs", l)); }},
      {"step_epochs", [&c](const std::string& v, int l) { c.step_epochs = static_cast<int>(parse_long(v, "step_epochs", l)); }},
      {"learning_rate", [&c](const std::string& v, int l) { c.learning_rate = parse_double(v, "learning_rate", l); }},
      {"max_gp_points", [&c](const std::string& v, int l) { c.max_gp_points = static_cast<int>(parse_long(v, "max_gp_points", l)); }},
      {"restart_init_points", [&c](const std::string& v, int l) { c.restart_init_points = static_cast<int>(parse_long(v, "restart_init_points", l)); }},
      {"portfolio_csv", [&c](const std::string& v, int) { c.problem_params.portfolio_csv = v; }},
      {"rover_samples_per_segment", [&c](const std::string& v, int l) { c.problem_params.rover_samples_per_segment = static_cast<int>(parse_long(v, "rover_samples_per_segment", l)); }},
      {"rover_diversity_samples_per_segment", [&c](const std::string& v, int l) { c.problem_params.rover_diversity_samples_per_segment = static_cast<int>(parse_long(v, "rover_diversity_samples_per_segment", l)); }},
  };

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    it->second(value, line_no);
  }
  if (c.problem.empty()) throw ConfigError("config: missing required key 'problem'");
  if (c.method.empty()) throw ConfigError("config: missing required key 'method'");
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "problem = " << c.problem << "\n";
  out << "method = " << c.method << "\n";
  out << "diversity = " << c.diversity << "\n";
  out << "tau = " << format_double(c.tau) << "\n";
  out << "m = " << c.m << "\n";
  out << "budget = " << c.budget << "\n";
  out << "n_init = " << c.n_init << "\n";
  out << "r = " << c.r << "\n";
  out << "batch_per_tr = " << c.batch_per_tr << "\n";
  out << "repetitions = " << c.repetitions << "\n";
  out << "seed_base = " << c.seed_base << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  out << "length_init = " << format_double(c.length_init) << "\n";
  out << "length_min = " << format_double(c.length_min) << "\n";
  out << "length_max = " << format_double(c.length_max) << "\n";
  out << "success_tolerance = " << c.success_tolerance << "\n";
  out << "failure_tolerance = " << c.failure_tolerance << "\n";
  out << "gamma_rel = " << format_double(c.gamma_rel) << "\n";
  out << "init_epochs = " << c.init_epochs << "\n";
  out << "step_epochs = " << c.step_epochs << "\n";
  out << "learning_rate = " << format_double(c.learning_rate) << "\n";
  out << "max_gp_points = " << c.max_gp_points << "\n";
  out << "restart_init_points = " << c.restart_init_points << "\n";
  out << "portfolio_csv = " << c.problem_params.portfolio_csv << "\n";
  out << "rover_samples_per_segment = "
      << c.problem_params.rover_samples_per_segment << "\n";
  out << "rover_diversity_samples_per_segment = "
      << c.problem_params.rover_diversity_samples_per_segment << "\n";
  return out.str();
}

Problem ExperimentConfig::make_problem_instance() const {
  return make_problem(problem, problem_params);
}

DiversitySpec ExperimentConfig::make_diversity_spec() const {
  return make_diversity(diversity, tau, problem, problem_params);
}

RobotConfig ExperimentConfig::to_robot_config(std::uint64_t seed) const {
  RobotConfig rc;
  rc.M = m;
  rc.diversity = make_diversity_spec();
  rc.n_init = n_init;
  rc.budget = budget;
  rc.r = r;
  rc.batch_per_tr = batch_per_tr;
  rc.tr_params.length_init = length_init;
  rc.tr_params.length_min = length_min;
  rc.tr_params.length_max = length_max;
  rc.tr_params.success_tolerance = success_tolerance;
  rc.tr_params.failure_tolerance = failure_tolerance;
  rc.tr_params.gamma_rel = gamma_rel;
  rc.seed = seed;
  rc.schedule.init_epochs = init_epochs;
  rc.schedule.step_epochs = step_epochs;
  rc.schedule.learning_rate = learning_rate;
  rc.max_gp_points = max_gp_points;
  rc.restart_init_points = restart_init_points;
  return rc;
}

std::vector<long> checkpoint_grid(long final_evals) {
  std::vector<long> grid;
  for (long e = 100; e < final_evals; e += 100) grid.push_back(e);
  if (final_evals >= 1) grid.push_back(final_evals);
  return grid;
}

namespace {

// Removes every listed file if the experiment fails partway.
struct OutputJanitor {
  std::vector<std::string> paths;
  bool armed = true;

  void track(const std::string& p) { paths.push_back(p); }
  void disarm() { armed = false; }
  ~OutputJanitor() {
    if (!armed) return;
    for (const auto& p : paths) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

void write_trace_header(std::ofstream& out, int dim) {
  out << "repetition,iteration,evals_used,source";
  for (int j = 0; j < dim; ++j) out << ",x" << j;
  out << ",y,set_mean,set_best\n";
}

void write_trace_row(std::ofstream& out, const TraceRow& row) {
  out << row.repetition << ',' << row.iteration << ',' << row.evals_used << ','
      << row.source;
  for (int j = 0; j < row.x.size(); ++j) out << ',' << format_double(row.x[j]);
  out << ',' << format_double(row.y) << ',' << format_double(row.set_mean)
      << ',' << format_double(row.set_best) << "\n";
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  if (config.repetitions < 1)
    throw ConfigError("config: repetitions must be >= 1");
  if (config.out_dir.empty())
    throw ConfigError("config: missing required key 'out_dir'");

  Problem problem = config.make_problem_instance();
  DiversitySpec spec = config.make_diversity_spec();
  const int dim = problem.space.dim();
  const std::vector<long> grid = checkpoint_grid(config.budget);

  fs::create_directories(config.out_dir);
  OutputJanitor janitor;
  ExperimentOutput output;

  // Echo the resolved configuration so a run can be repeated exactly.
  {
    const std::string path =
        (fs::path(config.out_dir) / "config.txt").string();
    const std::string tmp = path + ".tmp";
    janitor.track(tmp);
    janitor.track(path);
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << serialize_config(config);
    out.close();
    if (!out) throw std::runtime_error("error writing '" + tmp + "'");
    fs::rename(tmp, path);
  }

  // Per-rep per-checkpoint (set mean, fill count).
  std::vector<std::vector<std::pair<double, int>>> checkpoint_stats(
      config.repetitions);
  std::vector<SolutionSet> final_sets(config.repetitions);

  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::string path =
        (fs::path(config.out_dir) / ("trace_rep" + std::to_string(rep) + ".csv"))
            .string();
    const std::string tmp = path + ".tmp";
    janitor.track(tmp);
    janitor.track(path);

    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    write_trace_header(out, dim);

    auto& stats = checkpoint_stats[rep];
    std::size_t next_cp = 0;
    TraceSink sink = [&out, &stats, &grid, &next_cp](const TraceRow& row,
                                                     const SolutionSet& set) {
      write_trace_row(out, row);
      if (next_cp < grid.size() && row.evals_used == grid[next_cp]) {
        stats.emplace_back(set.mean_value(), static_cast<int>(set.size()));
        ++next_cp;
      }
    };

    RobotConfig rc = config.to_robot_config(
        static_cast<std::uint64_t>(config.seed_base + rep));
    rc.diversity = spec;  // share one (possibly caching) measure across reps

    RunResult result;
    if (config.method == "robot") {
      result = robot_run(problem, rc, sink, rep);
    } else {
      result = run_baseline(baseline_from_string(config.method), problem, rc,
                            sink, rep);
    }
    final_sets[rep] = std::move(result.final_set);

    out.close();
    if (!out) throw std::runtime_error("error writing '" + tmp + "'");
    fs::rename(tmp, path);
    output.trace_paths.push_back(path);

    if (stats.size() != grid.size())
      throw std::runtime_error("trace checkpoints incomplete for repetition " +
                               std::to_string(rep));
  }

  // Final solutions with all pairwise diversity values.
  {
    const std::string path =
        (fs::path(config.out_dir) / "final_solutions.csv").string();
    const std::string tmp = path + ".tmp";
    janitor.track(tmp);
    janitor.track(path);
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << "repetition,rank";
    for (int j = 0; j < dim; ++j) out << ",x" << j;
    out << ",y";
    for (int j = 0; j < config.m; ++j) out << ",delta_rank" << (j + 1);
    out << "\n";
    for (int rep = 0; rep < config.repetitions; ++rep) {
      const SolutionSet& set = final_sets[rep];
      for (std::size_t i = 0; i < set.size(); ++i) {
        out << rep << ',' << (i + 1);
        for (int j = 0; j < dim; ++j)
          out << ',' << format_double(set.ranked[i].x[j]);
        out << ',' << format_double(set.ranked[i].y);
        for (int j = 0; j < config.m; ++j) {
          out << ',';
          if (static_cast<std::size_t>(j) < set.size())
            out << format_double(spec.measure(set.ranked[i].x, set.ranked[j].x));
        }
        out << "\n";
      }
    }
    out.close();
    if (!out) throw std::runtime_error("error writing '" + tmp + "'");
    fs::rename(tmp, path);
    output.final_solutions_path = path;
  }

  // Checkpointed summary across repetitions.
  {
    std::vector<SummaryRow> rows(grid.size());
    const double n = static_cast<double>(config.repetitions);
    for (std::size_t c = 0; c < grid.size(); ++c) {
      SummaryRow& row = rows[c];
      row.evals = grid[c];
      double sum = 0.0, fill_sum = 0.0;
      for (int rep = 0; rep < config.repetitions; ++rep) {
        sum += checkpoint_stats[rep][c].first;
        fill_sum += checkpoint_stats[rep][c].second;
      }
      row.mean = sum / n;
      row.fill = fill_sum / n;
      if (config.repetitions > 1) {
        double ss = 0.0;
        for (int rep = 0; rep < config.repetitions; ++rep) {
          double d = checkpoint_stats[rep][c].first - row.mean;
          ss += d * d;
        }
        row.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
    }
    const std::string path = (fs::path(config.out_dir) / "summary.csv").string();
    janitor.track(path + ".tmp");
    janitor.track(path);
    write_summary_csv(path, rows);
    output.summary_path = path;
  }

  janitor.disarm();
  return output;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  const std::string tmp = path + ".tmp";
  std::ofstream out(tmp);
  if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
  out << "evals,mean,stderr,fill\n";
  for (const auto& row : rows)
    out << row.evals << ',' << format_double(row.mean) << ','
        << format_double(row.stderr_) << ',' << format_double(row.fill) << "\n";
  out.close();
  if (!out) throw std::runtime_error("error writing '" + tmp + "'");
  fs::rename(tmp, path);
}

std::vector<LoadedTrace> load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file '" + path + "'");
  auto header = split_csv_line(line);
  if (header.size() < 7 || header[0] != "repetition" || header[3] != "source")
    throw std::runtime_error("trace: bad header in '" + path + "'");
  int dim = 0;
  while (4 + dim < static_cast<int>(header.size()) &&
         header[4 + dim].size() > 1 && header[4 + dim][0] == 'x')
    ++dim;
  if (dim == 0 || header.size() != static_cast<std::size_t>(4 + dim + 3) ||
      header[4 + dim] != "y")
    throw std::runtime_error("trace: bad header in '" + path + "'");

  std::vector<LoadedTrace> reps;
  std::map<int, std::size_t> index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("trace: row " + std::to_string(line_no) +
                               " in '" + path + "': wrong column count");
    int rep = static_cast<int>(parse_long(cells[0], "repetition", line_no));
    auto it = index.find(rep);
    if (it == index.end()) {
      index.emplace(rep, reps.size());
      reps.push_back({});
      reps.back().repetition = rep;
      it = index.find(rep);
    }
    LoadedTrace& t = reps[it->second];
    Point x(dim);
    for (int j = 0; j < dim; ++j)
      x[j] = parse_double(cells[4 + j], "x", line_no);
    double y = parse_double(cells[4 + dim], "y", line_no);
    long evals = parse_long(cells[2], "evals_used", line_no);
    if (evals != static_cast<long>(t.history.size()) + 1)
      throw std::runtime_error("trace: row " + std::to_string(line_no) +
                               " in '" + path +
                               "': evals_used must increase by 1 per row");
    t.history.append(std::move(x), y, cells[3]);
    t.set_mean.push_back(parse_double(cells[5 + dim], "set_mean", line_no));
    t.set_best.push_back(parse_double(cells[6 + dim], "set_best", line_no));
  }
  if (reps.empty()) throw std::runtime_error("trace: no rows in '" + path + "'");
  return reps;
}

std::vector<SummaryRow> summarize_traces(const std::vector<std::string>& trace_paths,
                                         int M, const DiversitySpec& spec) {
  if (trace_paths.empty())
    throw std::invalid_argument("summarize: no trace files");
  std::vector<LoadedTrace> reps;
  int dim = -1;
  for (const auto& path : trace_paths) {
    for (auto& t : load_trace_csv(path)) {
      int d = static_cast<int>(t.history.evals.front().x.size());
      if (dim < 0) dim = d;
      if (d != dim)
        throw std::runtime_error("summarize: mixed-problem traces");
      reps.push_back(std::move(t));
    }
  }

  long min_final = std::numeric_limits<long>::max();
  for (const auto& t : reps)
    min_final = std::min(min_final, static_cast<long>(t.history.size()));
  const std::vector<long> grid = checkpoint_grid(min_final);

  const double n = static_cast<double>(reps.size());
  std::vector<std::vector<std::pair<double, int>>> stats(reps.size());
  for (std::size_t k = 0; k < reps.size(); ++k) {
    History prefix;
    std::size_t pos = 0;
    for (long e : grid) {
      while (pos < static_cast<std::size_t>(e)) {
        prefix.evals.push_back(reps[k].history.evals[pos]);
        ++pos;
      }
      SolutionSet set = best_m_diverse(prefix, spec, M);
      stats[k].emplace_back(set.mean_value(), static_cast<int>(set.size()));
    }
  }

  std::vector<SummaryRow> rows(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    SummaryRow& row = rows[c];
    row.evals = grid[c];
    double sum = 0.0, fill_sum = 0.0;
    for (std::size_t k = 0; k < reps.size(); ++k) {
      sum += stats[k][c].first;
      fill_sum += stats[k][c].second;
    }
    row.mean = sum / n;
    row.fill = fill_sum / n;
    if (reps.size() > 1) {
      double ss = 0.0;
      for (std::size_t k = 0; k < reps.size(); ++k) {
        double d = stats[k][c].first - row.mean;
        ss += d * d;
      }
      row.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
  }
  return rows;
}

}  // namespace robot
