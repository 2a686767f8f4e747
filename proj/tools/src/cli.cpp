#include "bagcheck/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bagcheck/error.hpp"
#include "bagcheck/normalizer.hpp"
#include "bagcheck/oracle.hpp"
#include "bagcheck/plan_io.hpp"
#include "bagcheck/sql_parser.hpp"
#include "json.hpp"

namespace bagcheck::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string format_ms(double ms) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << ms;
  return out.str();
}

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

QueryPtr load_query(const std::string& path, const Catalog& catalog) {
  if (fs::path(path).extension() == ".json") return load_plan_file(path, catalog);
  return parse_sql(read_file(path), catalog);
}

int PairReport::exit_code() const {
  if (error) return 2;
  return verdict.equivalent ? 0 : 1;
}

PairReport check_pair(const std::string& id, const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog,
                      const VerifyOptions& options) {
  PairReport r;
  r.id = id;
  auto start = std::chrono::steady_clock::now();
  try {
    VerifyStats stats;
    r.verdict = decide_equivalence(q1, q2, catalog, options, &stats);
    r.solver_calls = stats.solver_calls;
    r.normalized_size1 = stats.normalized_size1;
    r.normalized_size2 = stats.normalized_size2;
    r.normalized1 = stats.normalized1;
    r.normalized2 = stats.normalized2;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

PairReport check_files(const std::string& id, const std::string& q1_path, const std::string& q2_path,
                       const Catalog& catalog, const VerifyOptions& options) {
  QueryPtr q1;
  QueryPtr q2;
  try {
    q1 = load_query(q1_path, catalog);
    q2 = load_query(q2_path, catalog);
  } catch (const std::exception& e) {
    PairReport r;
    r.id = id;
    r.error = e.what();
    return r;
  }
  return check_pair(id, q1, q2, catalog, options);
}

std::string render(const PairReport& r, Format format) {
  if (format == Format::Machine) {
    json j;
    j["id"] = r.id;
    if (r.error) {
      j["verdict"] = "Error";
      j["error"] = *r.error;
    } else {
      j["verdict"] = r.verdict.label();
    }
    j["wall_time_ms"] = r.wall_time_ms;
    j["solver_calls"] = r.solver_calls;
    j["normalized_sizes"] = {r.normalized_size1, r.normalized_size2};
    return j.dump();
  }
  std::ostringstream out;
  if (!r.id.empty()) out << r.id << ": ";
  if (r.error) {
    out << "error: " << *r.error;
    return out.str();
  }
  out << r.verdict.label();
  if (!r.verdict.equivalent && !r.verdict.detail.empty()) out << " - " << r.verdict.detail;
  out << " [" << format_ms(r.wall_time_ms) << " ms, " << r.solver_calls << " solver calls, normalized sizes "
      << r.normalized_size1 << "/" << r.normalized_size2 << "]";
  return out.str();
}

// ---- batch ----------------------------------------------------------------

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array()) {
    throw ParseError("manifest " + path + ": expected {\"pairs\": [...]}");
  }
  fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::size_t n = 0;
  for (const auto& p : j["pairs"]) {
    ++n;
    if (!p.is_object() || !p.contains("q1") || !p.contains("q2") || !p["q1"].is_string() || !p["q2"].is_string()) {
      throw ParseError("manifest " + path + ": pair " + std::to_string(n) + " needs string fields q1 and q2");
    }
    ManifestEntry e;
    e.id = p.contains("id") && p["id"].is_string() ? p["id"].get<std::string>() : "pair" + std::to_string(n);
    e.q1 = (base / p["q1"].get<std::string>()).string();
    e.q2 = (base / p["q2"].get<std::string>()).string();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<PairReport> run_batch(const std::vector<ManifestEntry>& entries, const Catalog& catalog,
                                  const VerifyOptions& options, std::size_t jobs) {
  std::vector<PairReport> reports(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    VerifyOptions local = options;
    if (!local.solver.dump_dir.empty()) {
      local.solver.dump_dir = (fs::path(options.solver.dump_dir) / entries[i].id).string();
    }
    reports[i] = check_files(entries[i].id, entries[i].q1, entries[i].q2, catalog, local);
  });
  return reports;
}

BatchSummary summarize(const std::vector<PairReport>& reports) {
  BatchSummary s;
  s.pairs = reports.size();
  double total = 0;
  for (const auto& r : reports) {
    if (r.error) {
      ++s.errors;
    } else if (r.verdict.equivalent) {
      ++s.proved;
      total += r.wall_time_ms;
    } else {
      ++s.not_proven;
    }
  }
  s.mean_proved_ms = s.proved ? total / static_cast<double>(s.proved) : 0.0;
  return s;
}

std::string render_summary(const BatchSummary& s, Format format) {
  if (format == Format::Machine) {
    json j;
    j["summary"] = {{"pairs", s.pairs}, {"proved", s.proved}, {"not_proven", s.not_proven}, {"errors", s.errors}};
    return j.dump();
  }
  std::ostringstream out;
  out << "summary: pairs=" << s.pairs << " proved=" << s.proved << " not-proven=" << s.not_proven
      << " errors=" << s.errors;
  return out.str();
}

std::string render_timing(const BatchSummary& s, Format format) {
  if (format == Format::Machine) {
    json j;
    j["timing"] = {{"mean_proved_ms", s.mean_proved_ms}};
    return j.dump();
  }
  return "timing: mean over proved pairs " + format_ms(s.mean_proved_ms) + " ms";
}

// ---- overlap --------------------------------------------------------------

bool is_pure_scan(const Query& q) {
  if (as<plan::Table>(q)) return true;
  const auto* s = as<plan::Spj>(q);
  if (!s || !as<pred::True>(s->predicate)) return false;
  for (const auto& p : s->projections) {
    if (!as<expr::Column>(p)) return false;
  }
  return std::all_of(s->inputs.begin(), s->inputs.end(), [](const QueryPtr& in) { return is_pure_scan(*in); });
}

namespace {

bool any_node(const Query& q, const std::function<bool(const Query&)>& test) {
  if (test(q)) return true;
  if (const auto* s = as<plan::Spj>(q)) {
    for (const auto& in : s->inputs) {
      if (any_node(*in, test)) return true;
    }
  } else if (const auto* a = as<plan::Agg>(q)) {
    return any_node(*a->input, test);
  } else if (const auto* u = as<plan::Union>(q)) {
    for (const auto& in : u->inputs) {
      if (any_node(*in, test)) return true;
    }
  }
  return false;
}

std::vector<QueryPtr> children(const Query& q) {
  if (const auto* s = as<plan::Spj>(q)) return s->inputs;
  if (const auto* a = as<plan::Agg>(q)) return {a->input};
  if (const auto* u = as<plan::Union>(q)) return u->inputs;
  return {};
}

/// Outermost proper subtrees reading exactly `tables`, excluding pure scans.
void maximal_subqueries(const Query& q, const std::set<std::string>& tables, std::vector<QueryPtr>& out) {
  for (const auto& c : children(q)) {
    if (footprint(*c) != tables) continue;
    if (is_pure_scan(*c)) continue;
    out.push_back(c);
  }
}

struct Unit {
  std::string id;
  std::size_t owner;  // index of the workload query
  QueryPtr query;
  bool top;
};

}  // namespace

bool has_join(const Query& q) {
  return any_node(q, [](const Query& n) {
    const auto* s = as<plan::Spj>(n);
    return s && s->inputs.size() > 1;
  });
}

bool has_aggregate(const Query& q) {
  return any_node(q, [](const Query& n) { return as<plan::Agg>(n) != nullptr; });
}

std::vector<WorkloadQuery> load_workload(const std::string& dir, const Catalog& catalog,
                                         std::vector<std::string>* errors) {
  if (!fs::is_directory(dir)) throw ParseError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".sql" || ext == ".json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<WorkloadQuery> out;
  for (const auto& f : files) {
    try {
      out.push_back({f.stem().string(), load_query(f.string(), catalog)});
    } catch (const std::exception& e) {
      if (errors) errors->push_back(f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::vector<std::string>> clusters_of(const std::vector<std::string>& ids,
                                                  const std::vector<OverlapPair>& pairs) {
  std::map<std::string, std::string> parent;
  for (const auto& id : ids) parent[id] = id;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    std::string& p = parent[x];
    if (p != x) p = find(p);
    return p;
  };
  for (const auto& p : pairs) {
    if (!p.equivalent) continue;
    std::string a = find(p.a);
    std::string b = find(p.b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids) groups[find(id)].push_back(id);
  std::vector<std::vector<std::string>> out;
  for (auto& [_, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

OverlapReport run_overlap(const std::vector<WorkloadQuery>& workload, const Catalog& catalog,
                          const VerifyOptions& options, std::size_t jobs) {
  OverlapReport report;
  report.queries = workload.size();

  std::map<std::set<std::string>, std::vector<Unit>> groups;
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto& w = workload[i];
    if (is_pure_scan(*w.query)) continue;
    auto tables = footprint(*w.query);
    auto& units = groups[tables];
    units.push_back({w.id, i, w.query, true});
    std::vector<QueryPtr> subs;
    maximal_subqueries(*w.query, tables, subs);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      units.push_back({w.id + "#" + std::to_string(k + 1), i, subs[k], false});
    }
  }

  struct Task {
    const Unit* a;
    const Unit* b;
  };
  std::vector<Task> tasks;
  for (const auto& [_, units] : groups) {
    std::set<std::size_t> owners;
    for (const auto& u : units) owners.insert(u.owner);
    if (owners.size() < 2) continue;
    ++report.groups;
    for (std::size_t x = 0; x < units.size(); ++x) {
      for (std::size_t y = x + 1; y < units.size(); ++y) {
        if (units[x].owner != units[y].owner) tasks.push_back({&units[x], &units[y]});
      }
    }
  }

  std::vector<PairReport> results(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    results[i] = check_pair(tasks[i].a->id + "~" + tasks[i].b->id, tasks[i].a->query, tasks[i].b->query, catalog,
                            options);
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& r = results[i];
    if (r.error) {
      report.errors.push_back(r.id + ": " + *r.error);
      continue;
    }
    OverlapPair p{tasks[i].a->id, tasks[i].b->id, r.verdict.equivalent};
    (tasks[i].a->top && tasks[i].b->top ? report.pairs : report.subquery_pairs).push_back(p);
  }

  std::vector<std::string> ids;
  std::map<std::string, const Query*> by_id;
  for (const auto& w : workload) {
    ids.push_back(w.id);
    by_id[w.id] = w.query.get();
  }
  for (auto& members : clusters_of(ids, report.pairs)) {
    OverlapCluster c;
    for (const auto& m : members) {
      c.has_join |= has_join(*by_id[m]);
      c.has_aggregate |= has_aggregate(*by_id[m]);
    }
    c.members = std::move(members);
    report.clusters.push_back(std::move(c));
  }
  return report;
}

std::string render(const OverlapReport& r, Format format) {
  std::ostringstream out;
  if (format == Format::Machine) {
    for (const auto& c : r.clusters) {
      json j;
      j["cluster"] = c.members;
      j["has_join"] = c.has_join;
      j["has_aggregate"] = c.has_aggregate;
      out << j.dump() << '\n';
    }
    for (const auto& p : r.subquery_pairs) {
      if (!p.equivalent) continue;
      json j;
      j["subquery_match"] = {p.a, p.b};
      out << j.dump() << '\n';
    }
    for (const auto& e : r.errors) out << json{{"error", e}}.dump() << '\n';
    json s;
    s["overlap"] = {{"queries", r.queries},
                    {"groups", r.groups},
                    {"checked_pairs", r.pairs.size() + r.subquery_pairs.size()},
                    {"clusters", r.clusters.size()}};
    out << s.dump() << '\n';
    return out.str();
  }
  for (std::size_t i = 0; i < r.clusters.size(); ++i) {
    const auto& c = r.clusters[i];
    out << "cluster " << i + 1 << ":";
    for (const auto& m : c.members) out << ' ' << m;
    if (c.has_join) out << " [join]";
    if (c.has_aggregate) out << " [aggregate]";
    out << '\n';
  }
  for (const auto& p : r.subquery_pairs) {
    if (p.equivalent) out << "sub-query match: " << p.a << " = " << p.b << '\n';
  }
  for (const auto& e : r.errors) out << "error: " << e << '\n';
  out << "overlap: queries=" << r.queries << " groups=" << r.groups
      << " checked-pairs=" << r.pairs.size() + r.subquery_pairs.size() << " clusters=" << r.clusters.size() << '\n';
  return out.str();
}

// ---- command line ---------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bag-semantics SQL query equivalence checker"};
  app.require_subcommand(1);

  std::string catalog_path;
  long timeout_ms = 30000;
  std::string solver = default_solver_command();
  std::string dump_smt;
  bool dump_normalized = false;
  std::string format_name = "text";
  std::size_t jobs = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--catalog", catalog_path, "Catalog JSON file")->required();
    sub->add_option("--timeout-ms", timeout_ms, "Budget per pair in milliseconds")->check(CLI::PositiveNumber);
    sub->add_option("--solver", solver, "SMT-LIB2 solver command reading stdin");
    sub->add_option("--dump-smt", dump_smt, "Write every solver script to this directory");
    sub->add_flag("--dump-normalized", dump_normalized, "Print normalized plans on stderr");
    sub->add_option("--format", format_name, "Report format")->check(CLI::IsMember({"text", "machine"}));
    sub->add_option("--jobs", jobs, "Parallel verification tasks")->check(CLI::PositiveNumber);
  };

  std::string q1_path;
  std::string q2_path;
  auto* check = app.add_subcommand("check", "Decide one query pair");
  common(check);
  check->add_option("q1", q1_path)->required();
  check->add_option("q2", q2_path)->required();

  std::string manifest_path;
  auto* batch = app.add_subcommand("batch", "Decide every pair of a manifest");
  common(batch);
  batch->add_option("manifest", manifest_path)->required();

  std::string workload_dir;
  auto* overlap = app.add_subcommand("overlap", "Cluster equivalent queries of a workload directory");
  common(overlap);
  overlap->add_option("dir", workload_dir)->required();

  std::string query_path;
  std::string db_path;
  auto* exec = app.add_subcommand("exec", "Evaluate a query on a database file");
  common(exec);
  exec->add_option("query", query_path)->required();
  exec->add_option("--db", db_path, "Database JSON file")->required();

  auto* norm = app.add_subcommand("normalize", "Print the normalized plan of a query");
  common(norm);
  norm->add_option("query", query_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  Format format = format_name == "machine" ? Format::Machine : Format::Text;
  VerifyOptions options;
  options.solver.command = solver;
  options.solver.dump_dir = dump_smt;
  options.total_budget = std::chrono::milliseconds(timeout_ms);
  options.call_budget = std::min(options.call_budget, options.total_budget);

  auto show_normalized = [&](const PairReport& r) {
    if (!dump_normalized || !r.normalized1 || !r.normalized2) return;
    err << "normalized q1 (" << r.id << "):\n" << dump_plan(*r.normalized1, 2) << '\n';
    err << "normalized q2 (" << r.id << "):\n" << dump_plan(*r.normalized2, 2) << '\n';
  };

  try {
    Catalog catalog = load_catalog_file(catalog_path);

    if (*check) {
      PairReport r = check_files("", q1_path, q2_path, catalog, options);
      if (r.error && format == Format::Text) {
        err << "error: " << *r.error << '\n';
      } else {
        out << render(r, format) << '\n';
      }
      show_normalized(r);
      return r.exit_code();
    }

    if (*batch) {
      auto reports = run_batch(load_manifest(manifest_path), catalog, options, jobs);
      for (const auto& r : reports) {
        out << render(r, format) << '\n';
        show_normalized(r);
      }
      auto s = summarize(reports);
      out << render_summary(s, format) << '\n' << render_timing(s, format) << '\n';
      return 0;
    }

    if (*overlap) {
      std::vector<std::string> load_errors;
      auto workload = load_workload(workload_dir, catalog, &load_errors);
      auto report = run_overlap(workload, catalog, options, jobs);
      report.errors.insert(report.errors.begin(), load_errors.begin(), load_errors.end());
      out << render(report, format);
      return 0;
    }

    if (*exec) {
      QueryPtr q = load_query(query_path, catalog);
      Database db = load_database_file(db_path, catalog);
      Bag bag = eval_query(q, db);
      if (format == Format::Machine) {
        json rows = json::array();
        for (const auto& [row, n] : bag) {
          json r = json::array();
          for (const auto& v : row) r.push_back(v.is_null() ? json(nullptr) : json(v.to_string()));
          rows.push_back({{"row", r}, {"count", n}});
        }
        out << rows.dump() << '\n';
      } else {
        for (const auto& [row, n] : bag) out << to_string(row) << (n > 1 ? " x" + std::to_string(n) : "") << '\n';
        out << "(" << bag_size(bag) << " rows)\n";
      }
      return 0;
    }

    if (*norm) {
      QueryPtr q = load_query(query_path, catalog);
      SmtSession session(options.solver);
      NormalizeOptions nopts;
      nopts.solver = &session;
      nopts.unsat_budget = options.unsat_budget;
      NormalizeStats stats;
      QueryPtr n = normalize(q, catalog, nopts, &stats);
      out << dump_plan(*n, format == Format::Machine ? -1 : 2) << '\n';
      if (format == Format::Text) {
        out << "rewrites: " << stats.steps() << " (empty " << stats.empty_table << ", spj-merge " << stats.spj_merge
            << ", union-flatten " << stats.union_flatten << ", pushdown " << stats.pushdown << ", agg-merge "
            << stats.agg_merge << ", integrity " << stats.integrity << ")\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace bagcheck::cli
