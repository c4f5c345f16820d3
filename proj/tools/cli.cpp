#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "seqnpa_fixture.hpp"

namespace seqnpa::cli {

using nlohmann::json;
using scenarios::CurvePoint;
using scenarios::EveTargets;
using scenarios::Options;
using scenarios::ScenarioCurve;
using scenarios::SeqDistribution;
using scenarios::SetChoice;

namespace {

const std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::kTradeoff, "tradeoff"},     {Scenario::kDvRandomness, "dv-randomness"},
    {Scenario::kEveTradeoff, "eve-tradeoff"}, {Scenario::kEveFull, "eve-full"},
    {Scenario::kMembership, "membership"}, {Scenario::kExportSdp, "export-sdp"},
};

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

SetChoice parse_set_choice(const std::string& s) {
  if (s == "S1") return SetChoice::kS1;
  if (s == "S1prime") return SetChoice::kS1Prime;
  throw ConfigError("set_choice must be S1 or S1prime, got '" + s + "'");
}

Grid grid_from_json(const json& g) {
  Grid grid;
  if (g.is_array()) {
    for (const auto& v : g) {
      if (!v.is_number()) throw ConfigError("grid list entries must be numbers");
      grid.list.push_back(v.get<double>());
    }
    if (grid.list.empty()) throw ConfigError("grid list is empty");
    return grid;
  }
  if (!g.is_object()) throw ConfigError("grid must be {start, stop, count} or a list");
  for (auto it = g.begin(); it != g.end(); ++it)
    if (it.key() != "start" && it.key() != "stop" && it.key() != "count")
      throw ConfigError("unknown grid key '" + it.key() + "'");
  if (!g.contains("start") || !g.contains("stop") || !g.contains("count"))
    throw ConfigError("grid needs start, stop and count");
  grid.start = get<double>(g, "start");
  grid.stop = get<double>(g, "stop");
  grid.count = get<int>(g, "count");
  if (grid.count < 1) throw ConfigError("grid count must be >= 1");
  return grid;
}

EveTargets targets_from_json(const json& t) {
  if (!t.is_object()) throw ConfigError("eve_targets must be an object {y1, y2, z}");
  EveTargets e;
  for (auto it = t.begin(); it != t.end(); ++it) {
    if (it.key() == "y1")
      e.y1 = get<int>(t, "y1");
    else if (it.key() == "y2")
      e.y2 = get<int>(t, "y2");
    else if (it.key() == "z")
      e.z = get<int>(t, "z");
    else
      throw ConfigError("unknown eve_targets key '" + it.key() + "'");
  }
  return e;
}

EveTargets parse_targets(const std::string& text) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("eve targets must be 'y1,y2,z', got '" + text + "'");
    }
  }
  if (v.size() != 3) throw ConfigError("eve targets must be 'y1,y2,z', got '" + text + "'");
  return {v[0], v[1], v[2]};
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
}

std::string point_status(const CurvePoint& p) {
  for (auto s : p.statuses)
    if (s != sdp::Status::kOptimal) return sdp::to_string(s);
  return "optimal";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void check_range(const std::vector<double>& pts, double lo, double hi, const std::string& what) {
  for (double v : pts)
    if (!std::isfinite(v) || v < lo - 1e-12 || v > hi)
      throw ConfigError(what + " grid value " + format_real(v) + " outside [" + format_real(lo) + ", " +
                        format_real(hi) + "]");
}

// Output sink: a file or standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw ConfigError("cannot write '" + path + "'");
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct Column {
  const char* name;
  std::function<std::string(const CurvePoint&)> cell;
};

Column value(const char* key) {
  return {key, [key](const CurvePoint& p) {
            auto it = p.values.find(key);
            return format_real(it == p.values.end() ? std::nan("") : it->second);
          }};
}

// Streams one row per grid point so that partial output survives failures.
int run_curve(const RunConfig& c, const std::vector<Column>& cols,
              const std::function<ScenarioCurve(double)>& solve_point, std::ostream& diag) {
  Sink sink(c.output_path);
  std::ostream& out = sink.out();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
  out << "\n" << std::flush;
  int failures = 0;
  const auto pts = c.grid ? c.grid->points() : default_grid(c.scenario).points();
  for (double x : pts) {
    const ScenarioCurve curve = solve_point(x);
    for (const CurvePoint& p : curve.points) {
      for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].cell(p);
      out << "\n" << std::flush;
      const std::string st = point_status(p);
      if (st != "optimal") ++failures;
      diag << to_string(c.scenario) << ": parameter " << format_real(p.parameter) << " " << st << ", "
           << p.statuses.size() << " solves, " << p.iterations << " iterations\n";
    }
  }
  diag << to_string(c.scenario) << ": " << pts.size() << " points, " << failures << " not optimal\n";
  return failures == 0 ? 0 : 1;
}

int run_membership(const RunConfig& c, const Options& opt, std::ostream& diag) {
  const SeqDistribution d =
      c.distribution.empty() ? bundled_distribution()
                             : parse_distribution(parse_json(read_file(c.distribution), c.distribution));
  scenarios::MembershipResult r;
  try {
    r = scenarios::membership_test(d, GramSpec::qrac(), c.level, opt);
  } catch (const scenarios::ScenarioError& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  }
  Sink sink(c.output_path);
  sink.out() << scenarios::to_string(r.verdict) << "\n";
  diag << "membership: level " << c.level << ", witness solve " << sdp::to_string(r.status) << "\n";
  return 0;
}

int run_export(const RunConfig& c, std::ostream& diag) {
  std::optional<MomentModel> model;
  LinearExpr objective;
  const auto pts = c.grid ? c.grid->points() : std::vector<double>{};
  if (!pts.empty()) {
    auto tp = scenarios::qrac_tradeoff_problem(std::min(pts[0], scenarios::qrac_optimum()), c.set_choice);
    objective = tp.objective.normalized();
    model.emplace(std::move(tp.model));
  } else if (c.level == 1) {
    model.emplace(build_model(scenarios::qrac_set(c.set_choice), GramSpec::qrac()));
  } else {
    model.emplace(build_model(level_set(NetworkShape::qrac(), c.level), GramSpec::qrac()));
  }
  const sdp::SdpProblem p = to_sdp(*model, objective, sdp::Sense::kMax);
  Sink sink(c.output_path);
  if (objective.constant != 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", objective.constant);
    sink.out() << "* objective constant " << buf << "\n";
  }
  sink.out() << sdp::write_sdpa(p);
  diag << "export-sdp: " << p.constraints.size() << " constraints, " << p.blocks.size() << " blocks, block 0 of size "
       << p.blocks[0] << "\n";
  return 0;
}

}  // namespace

std::string to_string(Scenario s) {
  for (auto& [k, name] : kScenarioNames)
    if (k == s) return name;
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (auto& [k, n] : kScenarioNames)
    if (name == n) return k;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<double> Grid::points() const {
  if (!list.empty()) return list;
  return scenarios::linspace(start, stop, count);
}

Grid parse_grid(const std::string& text) {
  Grid g;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("grid range must be start:stop:count, got '" + text + "'");
    g.start = to_double(parts[0], "grid start");
    g.stop = to_double(parts[1], "grid stop");
    const double count = to_double(parts[2], "grid count");
    if (count < 1 || count != std::floor(count)) throw ConfigError("grid count must be a positive integer");
    g.count = static_cast<int>(count);
    return g;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) g.list.push_back(to_double(item, "grid value"));
  if (g.list.empty()) throw ConfigError("grid is empty");
  return g;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "scenario")
      c.scenario = parse_scenario(get<std::string>(j, "scenario"));
    else if (k == "grid")
      c.grid = grid_from_json(*it);
    else if (k == "level")
      c.level = get<int>(j, "level");
    else if (k == "set_choice")
      c.set_choice = parse_set_choice(get<std::string>(j, "set_choice"));
    else if (k == "tolerance")
      c.tolerance = get<double>(j, "tolerance");
    else if (k == "max_iterations")
      c.max_iterations = get<int>(j, "max_iterations");
    else if (k == "output_path")
      c.output_path = get<std::string>(j, "output_path");
    else if (k == "eve_targets")
      c.eve_targets = targets_from_json(*it);
    else if (k == "distribution")
      c.distribution = get<std::string>(j, "distribution");
    else if (k == "verbose")
      c.verbose = get<bool>(j, "verbose");
    else
      throw ConfigError("unknown config key '" + k + "'");
  }
  return c;
}

Grid default_grid(Scenario s) {
  switch (s) {
    case Scenario::kTradeoff: return {0.5, 0.8536, 33, {}};
    case Scenario::kDvRandomness: return {0.75, 0.8218, 7, {}};
    case Scenario::kEveTradeoff: return {0.5, 0.8536, 9, {}};
    case Scenario::kEveFull: return {0.0, 1.0, 11, {}};
    default: return {};
  }
}

void validate(const RunConfig& c) {
  if (c.level < 1) throw ConfigError("level must be >= 1");
  if (!(c.tolerance > 0.0) || !std::isfinite(c.tolerance)) throw ConfigError("tolerance must be a positive number");
  if (c.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  const bool curve = c.scenario != Scenario::kMembership && c.scenario != Scenario::kExportSdp;
  if (curve && c.level != 1) throw ConfigError(to_string(c.scenario) + " is defined at level 1 only");
  if (c.set_choice == SetChoice::kS1Prime && c.level != 1) throw ConfigError("S1prime is a level-1 set");
  if (c.set_choice == SetChoice::kS1Prime && c.scenario != Scenario::kTradeoff && c.scenario != Scenario::kExportSdp)
    throw ConfigError("set_choice applies to tradeoff and export-sdp only");
  if (c.eve_targets) {
    const auto& t = *c.eve_targets;
    if (c.scenario != Scenario::kEveTradeoff && c.scenario != Scenario::kEveFull)
      throw ConfigError("eve_targets applies to eve-tradeoff and eve-full only");
    if (t.y1 < 0 || t.y1 > 1 || t.y2 < 0 || t.y2 > 1 || t.z < 0 || t.z > 3)
      throw ConfigError("eve_targets out of range: y1, y2 in {0,1}, z in {0..3}");
  }
  if (!c.distribution.empty() && c.scenario != Scenario::kMembership)
    throw ConfigError("distribution applies to membership only");
  if (!c.grid) return;
  if (c.grid->count < 0 || c.grid->empty()) throw ConfigError("grid count must be >= 1");
  const auto pts = c.grid->points();
  const double tmax = scenarios::qrac_optimum() + scenarios::kDomainSlack;
  switch (c.scenario) {
    case Scenario::kTradeoff:
    case Scenario::kEveTradeoff: check_range(pts, 0.5, tmax, to_string(c.scenario)); break;
    case Scenario::kDvRandomness:
      check_range(pts, 0.75, scenarios::dv_tau_max() + scenarios::kDomainSlack, "dv-randomness");
      break;
    case Scenario::kEveFull: check_range(pts, 0.0, 1.0, "eve-full"); break;
    case Scenario::kMembership: throw ConfigError("membership takes no grid");
    case Scenario::kExportSdp:
      if (pts.size() != 1) throw ConfigError("export-sdp takes at most one tau");
      if (c.level != 1) throw ConfigError("export-sdp with tau is a level-1 problem");
      check_range(pts, 0.5, tmax, "export-sdp");
      break;
  }
}

SeqDistribution parse_distribution(const json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
    throw ConfigError("distribution needs an 'entries' list");
  SeqDistribution d;
  std::set<std::tuple<int, int, int, int, int>> seen;
  for (const auto& e : j.at("entries")) {
    int idx[5];
    const char* names[5] = {"b1", "b2", "y1", "y2", "z"};
    const int limits[5] = {2, 2, 2, 2, 4};
    for (int k = 0; k < 5; ++k) {
      idx[k] = get<int>(e, names[k]);
      if (idx[k] < 0 || idx[k] >= limits[k]) throw ConfigError(std::string("distribution entry ") + names[k] + " out of range");
    }
    if (!seen.insert({idx[0], idx[1], idx[2], idx[3], idx[4]}).second)
      throw ConfigError("distribution entry listed twice");
    d(idx[0], idx[1], idx[2], idx[3], idx[4]) = get<double>(e, "p");
  }
  if (seen.size() != 64) throw ConfigError("distribution must list all 64 entries");
  return d;
}

SeqDistribution bundled_distribution() { return parse_distribution(json::parse(kBundledPobs)); }

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int run(const RunConfig& c, std::ostream& diag) {
  validate(c);
  Options opt;
  opt.tolerance = c.tolerance;
  opt.max_iterations = c.max_iterations;
  opt.verbose = c.verbose;
  const EveTargets targets = c.eve_targets.value_or(EveTargets{});
  try {
    switch (c.scenario) {
      case Scenario::kTradeoff:
        return run_curve(
            c,
            {{"tau", [](const CurvePoint& p) { return format_real(p.parameter); }},
             value("p2_sdp"),
             value("p2_closed_form"),
             {"status", point_status},
             {"iterations", [](const CurvePoint& p) { return std::to_string(p.iterations); }}},
            [&](double t) { return scenarios::qrac_tradeoff({t}, c.set_choice, opt); }, diag);
      case Scenario::kDvRandomness:
        return run_curve(c,
                         {{"tau", [](const CurvePoint& p) { return format_real(p.parameter); }},
                          value("Hb1"),
                          value("Hb2"),
                          value("Hb1b2"),
                          {"status", point_status}},
                         [&](double t) { return scenarios::dv_min_entropies({t}, opt); }, diag);
      case Scenario::kEveTradeoff:
        return run_curve(c,
                         {{"tau", [](const CurvePoint& p) { return format_real(p.parameter); }},
                          value("Hglobal"),
                          value("Hlocal_b1"),
                          value("Hlocal_b2"),
                          {"status", point_status}},
                         [&](double t) { return scenarios::eve_tradeoff_entropies({t}, opt, targets); }, diag);
      case Scenario::kEveFull:
        return run_curve(c,
                         {{"eta", [](const CurvePoint& p) { return format_real(p.parameter); }},
                          value("tau_of_eta"),
                          value("Hglobal"),
                          value("Hlocal_b1"),
                          value("Hlocal_b2"),
                          {"status", point_status}},
                         [&](double e) { return scenarios::eve_full_entropies({e}, opt, targets); }, diag);
      case Scenario::kMembership: return run_membership(c, opt, diag);
      case Scenario::kExportSdp: return run_export(c, diag);
    }
  } catch (const scenarios::ScenarioError& e) {
    throw ConfigError(e.what());
  }
  return 2;
}

int main_entry(int argc, char** argv, std::ostream& diag) {
  CLI::App app{"Sequential NPA hierarchy: trade-off, randomness and membership scenarios"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  std::vector<CLI::App*> subs;
  for (auto& [k, name] : kScenarioNames) subs.push_back(app.add_subcommand(name, "run the " + std::string(name) + " scenario"));

  std::string config_path, grid, set_choice, out, targets, distribution;
  int level = 0, max_iterations = 0;
  double tolerance = 0.0;
  bool verbose = false;
  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_grid = app.add_option("--grid", grid, "start:stop:count or a comma list (key: grid)");
  auto* o_level = app.add_option("--level", level, "hierarchy level (key: level)");
  auto* o_set = app.add_option("--set-choice", set_choice, "S1 or S1prime (key: set_choice)");
  auto* o_tol = app.add_option("--tolerance", tolerance, "solver tolerance (key: tolerance)");
  auto* o_iter = app.add_option("--max-iterations", max_iterations, "solver iteration cap (key: max_iterations)");
  auto* o_out = app.add_option("--out", out, "output file, standard output when absent (key: output_path)");
  auto* o_targets = app.add_option("--eve-targets", targets, "y1,y2,z (key: eve_targets)");
  auto* o_dist = app.add_option("--distribution", distribution, "membership distribution JSON (key: distribution)");
  auto* o_verbose = app.add_flag("--verbose", verbose, "solver progress on standard error (key: verbose)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    diag << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig c;
    bool have_scenario = false;
    if (*o_config) {
      const json j = parse_json(read_file(config_path), config_path);
      c = parse_config(j);
      have_scenario = j.is_object() && j.contains("scenario");
    }
    for (auto* s : subs)
      if (s->parsed()) {
        c.scenario = parse_scenario(s->get_name());
        have_scenario = true;
      }
    if (!have_scenario) throw ConfigError("no scenario given (subcommand or config key 'scenario')");
    if (*o_grid) c.grid = parse_grid(grid);
    if (*o_level) c.level = level;
    if (*o_set) c.set_choice = parse_set_choice(set_choice);
    if (*o_tol) c.tolerance = tolerance;
    if (*o_iter) c.max_iterations = max_iterations;
    if (*o_out) c.output_path = out;
    if (*o_targets) c.eve_targets = parse_targets(targets);
    if (*o_dist) c.distribution = distribution;
    if (*o_verbose) c.verbose = verbose;
    return run(c, diag);
  } catch (const ConfigError& e) {
    diag << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace seqnpa::cli
