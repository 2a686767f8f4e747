#include "bagcheck/smt.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "bagcheck/error.hpp"

#ifndef BAGCHECK_DEFAULT_SOLVER
#define BAGCHECK_DEFAULT_SOLVER "z3 -in"
#endif

namespace bagcheck {

std::string default_solver_command() {
  if (const char* env = std::getenv("BAGCHECK_SOLVER"); env && *env) return env;
  return BAGCHECK_DEFAULT_SOLVER;
}

std::string_view to_string(SatStatus status) {
  switch (status) {
    case SatStatus::Sat:
      return "sat";
    case SatStatus::Unsat:
      return "unsat";
    case SatStatus::Unknown:
      return "unknown";
  }
  return "?";
}

std::optional<ConcreteValue> Model::get(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

namespace {

constexpr const char* kMarker = "@@end";
constexpr auto kGrace = std::chrono::milliseconds(2000);
std::atomic<std::uint64_t> dump_counter{0};

// Minimal s-expression reader, enough for model output.
struct Sexp {
  std::string atom;
  std::vector<Sexp> list;
  bool is_list = false;
};

Sexp read_sexp(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) throw SolverCrash("truncated solver output");
  if (s[i] == '(') {
    Sexp out;
    out.is_list = true;
    ++i;
    for (;;) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= s.size()) throw SolverCrash("unbalanced solver output");
      if (s[i] == ')') {
        ++i;
        return out;
      }
      out.list.push_back(read_sexp(s, i));
    }
  }
  Sexp out;
  if (s[i] == '|') {
    std::size_t end = s.find('|', i + 1);
    if (end == std::string::npos) throw SolverCrash("unterminated quoted symbol");
    out.atom = s.substr(i + 1, end - i - 1);
    i = end + 1;
    return out;
  }
  if (s[i] == '"') {
    std::size_t end = s.find('"', i + 1);
    if (end == std::string::npos) throw SolverCrash("unterminated string");
    out.atom = s.substr(i, end - i + 1);
    i = end + 1;
    return out;
  }
  std::size_t start = i;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')') ++i;
  out.atom = s.substr(start, i - start);
  return out;
}

std::optional<ConcreteValue> model_value(const Sexp& e) {
  if (!e.is_list) {
    if (e.atom == "true") return ConcreteValue{true};
    if (e.atom == "false") return ConcreteValue{false};
    try {
      return ConcreteValue{Rational::parse(e.atom)};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (e.list.size() == 2 && e.list[0].atom == "-") {
    auto v = model_value(e.list[1]);
    if (v && std::holds_alternative<Rational>(*v)) return ConcreteValue{-std::get<Rational>(*v)};
    return std::nullopt;
  }
  if (e.list.size() == 3 && e.list[0].atom == "/") {
    auto a = model_value(e.list[1]);
    auto b = model_value(e.list[2]);
    if (a && b && std::holds_alternative<Rational>(*a) && std::holds_alternative<Rational>(*b) &&
        !std::get<Rational>(*b).is_zero()) {
      return ConcreteValue{std::get<Rational>(*a) / std::get<Rational>(*b)};
    }
  }
  return std::nullopt;
}

}  // namespace

Model parse_model(const std::string& text) {
  Model model;
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i >= text.size()) return model;
  Sexp root = read_sexp(text, i);
  for (const auto& def : root.list) {
    // (define-fun name () Sort value)
    if (!def.is_list || def.list.size() != 5 || def.list[0].atom != "define-fun") continue;
    if (!def.list[2].is_list || !def.list[2].list.empty()) continue;
    if (auto v = model_value(def.list[4])) model.values.emplace(def.list[1].atom, *v);
  }
  return model;
}

SmtSession::SmtSession(SolverOptions options) : options_(std::move(options)) {
  signal(SIGPIPE, SIG_IGN);
}

SmtSession::~SmtSession() { stop(); }

void SmtSession::start() {
  if (pid_ > 0) return;
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw SolverCrash(std::string("pipe: ") + std::strerror(errno));
  std::string command = "exec " + options_.command;
  pid_t pid = fork();
  if (pid < 0) throw SolverCrash(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_solver_ = in_pipe[1];
  from_solver_ = out_pipe[0];
  pending_.clear();
}

void SmtSession::stop() {
  if (pid_ <= 0) return;
  close(to_solver_);
  close(from_solver_);
  kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
  pid_ = -1;
  to_solver_ = from_solver_ = -1;
  pending_.clear();
}

void SmtSession::send(const std::string& text) {
  std::size_t done = 0;
  while (done < text.size()) {
    ssize_t n = write(to_solver_, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      stop();
      throw SolverCrash("solver process is not accepting input (command: " + options_.command + ")");
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::vector<std::string>> SmtSession::read_until(const std::string& marker,
                                                                std::chrono::steady_clock::time_point deadline) {
  std::vector<std::string> lines;
  for (;;) {
    std::size_t nl;
    while ((nl = pending_.find('\n')) != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == marker) return lines;
      lines.push_back(std::move(line));
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd fd{from_solver_, POLLIN, 0};
    int r = poll(&fd, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw SolverCrash(std::string("poll: ") + std::strerror(errno));
    }
    if (r == 0) return std::nullopt;
    char buf[4096];
    ssize_t n = read(from_solver_, buf, sizeof buf);
    if (n <= 0) {
      std::string tail = pending_;
      for (const auto& l : lines) tail += "\n" + l;
      stop();
      throw SolverCrash("solver process exited unexpectedly (command: " + options_.command + ")" +
                        (tail.empty() ? "" : ": " + tail));
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

void SmtSession::dump(const std::string& script) {
  if (options_.dump_dir.empty()) return;
  std::filesystem::create_directories(options_.dump_dir);
  char name[32];
  std::snprintf(name, sizeof name, "%06llu.smt2", static_cast<unsigned long long>(++dump_counter));
  std::ofstream(std::filesystem::path(options_.dump_dir) / name) << script;
}

SolverVerdict SmtSession::check(const TermFactory& factory, const std::vector<Term>& assertions,
                                std::chrono::milliseconds budget, bool want_model) {
  return check_script(smtlib_script(factory, assertions), budget, want_model);
}

SolverVerdict SmtSession::check_script(const std::string& body, std::chrono::milliseconds budget, bool want_model) {
  ++calls_;
  if (budget.count() <= 0) return {SatStatus::Unknown, {}, "no time budget left"};
  start();
  std::ostringstream script;
  script << "(set-option :produce-models true)\n"
         << "(set-option :timeout " << budget.count() << ")\n"
         << "(set-logic ALL)\n"
         << body << "(check-sat)\n";
  dump(script.str());

  auto deadline = std::chrono::steady_clock::now() + budget + kGrace;
  send("(reset)\n" + script.str() + "(echo \"" + kMarker + "\")\n");
  auto lines = read_until(kMarker, deadline);
  if (!lines) {
    stop();
    return {SatStatus::Unknown, {}, "solver exceeded its wall-clock budget"};
  }
  SolverVerdict verdict;
  bool answered = false;
  for (const auto& line : *lines) {
    if (line.rfind("(error", 0) == 0) {
      stop();
      throw SolverCrash("solver rejected the script: " + line);
    }
    if (line == "sat" || line == "unsat" || line == "unknown") {
      verdict.status = line == "sat" ? SatStatus::Sat : line == "unsat" ? SatStatus::Unsat : SatStatus::Unknown;
      answered = true;
    }
  }
  if (!answered) {
    stop();
    throw SolverCrash("solver gave no answer to check-sat");
  }
  if (verdict.status == SatStatus::Unknown) {
    send("(get-info :reason-unknown)\n(echo \"" + std::string(kMarker) + "\")\n");
    auto reason = read_until(kMarker, std::chrono::steady_clock::now() + kGrace);
    if (!reason) {
      stop();
    } else {
      for (const auto& l : *reason) verdict.reason += l;
    }
    if (verdict.reason.empty()) verdict.reason = "unknown";
  } else if (verdict.status == SatStatus::Sat && want_model) {
    send("(get-model)\n(echo \"" + std::string(kMarker) + "\")\n");
    auto model = read_until(kMarker, std::chrono::steady_clock::now() + kGrace);
    if (!model) {
      stop();
      throw SolverCrash("solver did not produce a model");
    }
    std::string text;
    for (const auto& l : *model) text += l + "\n";
    verdict.model = parse_model(text);
  }
  return verdict;
}

}  // namespace bagcheck
