#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bagcheck/term.hpp"

namespace bagcheck {

/// Process command for an SMT-LIB2 solver reading scripts on stdin
/// (the configured default is `z3 -in`).
std::string default_solver_command();

struct SolverOptions {
  std::string command = default_solver_command();
  /// When nonempty every script is also written to this directory.
  std::string dump_dir;
};

enum class SatStatus { Sat, Unsat, Unknown };

std::string_view to_string(SatStatus status);

/// Concrete assignment returned with a Sat answer, keyed by variable name.
struct Model {
  std::map<std::string, ConcreteValue> values;

  std::optional<ConcreteValue> get(const std::string& name) const;
};

struct SolverVerdict {
  SatStatus status = SatStatus::Unknown;
  Model model;         // filled on Sat when requested
  std::string reason;  // filled on Unknown
};

/// One solver process spoken to over pipes. A session belongs to a single
/// verification task; it is not safe to share between threads.
class SmtSession {
 public:
  explicit SmtSession(SolverOptions options = {});
  ~SmtSession();
  SmtSession(const SmtSession&) = delete;
  SmtSession& operator=(const SmtSession&) = delete;

  /// Satisfiability of the conjunction of `assertions`. Unknown covers solver
  /// timeouts and incomplete theories; SolverCrash is thrown on protocol failure.
  SolverVerdict check(const TermFactory& factory, const std::vector<Term>& assertions,
                      std::chrono::milliseconds budget, bool want_model = false);
  /// Same as check() but for a hand-written body of declarations and asserts.
  SolverVerdict check_script(const std::string& body, std::chrono::milliseconds budget, bool want_model = false);

  std::size_t calls() const { return calls_; }
  const SolverOptions& options() const { return options_; }

 private:
  void start();
  void stop();
  void send(const std::string& text);
  /// Lines up to (excluding) the marker; nullopt when the deadline passes.
  std::optional<std::vector<std::string>> read_until(const std::string& marker,
                                                     std::chrono::steady_clock::time_point deadline);
  void dump(const std::string& script);

  SolverOptions options_;
  int pid_ = -1;
  int to_solver_ = -1;
  int from_solver_ = -1;
  std::string pending_;
  std::size_t calls_ = 0;
};

/// Parses the body of a `(get-model)` response.
Model parse_model(const std::string& text);

}  // namespace bagcheck
