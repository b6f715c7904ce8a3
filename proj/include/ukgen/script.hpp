#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ukgen/schedule.hpp"

namespace ukgen {

// Replayable schedule scripts: one directive per line, arguments
// space-separated, cursors and affine expressions quoted. `phase` lines
// label the groups a generator emits snapshots for. Replaying a script from
// the same base proc reproduces the final proc structurally.

struct ScheduleScript {
  std::string target_name;
  std::vector<std::string> lines;  // directives, including phase markers

  std::string serialize() const {
    std::ostringstream os;
    os << "# schedule script (target " << target_name << ")\n";
    for (const auto& l : lines) os << l << "\n";
    return os.str();
  }
};

namespace scripting {

inline std::string quote(const std::string& s) { return "\"" + s + "\""; }

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    if (line[i] == '"') {
      size_t j = line.find('"', i + 1);
      if (j == std::string::npos) fail(ErrKind::ParseError, "unterminated quote in directive");
      out.push_back(line.substr(i + 1, j - i - 1));
      i = j + 1;
    } else {
      size_t j = line.find(' ', i);
      if (j == std::string::npos) j = line.size();
      out.push_back(line.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

inline AffineExpr parse_affine_text(const std::string& text) {
  parsing::LineLexer lx{text, 0, 1};
  AffineExpr e = parsing::parse_affine(lx);
  if (!lx.eof()) fail(ErrKind::ParseError, "trailing content in affine '" + text + "'");
  return e;
}

}  // namespace scripting

// Applies rewrites to a working proc while recording a replayable script and
// the full history of intermediates (used for per-step equivalence checks
// and for the paper-style phase snapshots).
class Scheduler {
 public:
  Scheduler(Proc base, const TargetLibrary& lib) : lib_(lib), proc_(std::move(base)) {
    history_.push_back(proc_);
  }

  const Proc& proc() const { return proc_; }
  const TargetLibrary& lib() const { return lib_; }
  const std::vector<Proc>& history() const { return history_; }
  const std::vector<std::string>& lines() const { return lines_; }

  ScheduleScript script() const {
    ScheduleScript s;
    s.target_name = lib_.name;
    s.lines = lines_;
    return s;
  }

  // proc state at the end of each phase, in phase order
  std::vector<std::pair<std::string, Proc>> phase_procs() const {
    std::vector<std::pair<std::string, Proc>> out;
    for (size_t i = 0; i < phase_marks_.size(); ++i) {
      size_t end = i + 1 < phase_marks_.size() ? phase_marks_[i + 1].second : history_.size() - 1;
      out.push_back({phase_marks_[i].first, history_[end]});
    }
    return out;
  }

  void phase(const std::string& label) {
    lines_.push_back("phase " + label);
    phase_marks_.push_back({label, history_.size() - 1});
  }

  void rename(const std::string& name) {
    step("rename " + name, [&] { return rename_proc(proc_, name); });
  }
  void partial_eval(const std::map<std::string, long long>& a) {
    std::ostringstream os;
    os << "partial_eval";
    for (const auto& [k, v] : a) os << " " << k << "=" << v;
    step(os.str(), [&] { return ukgen::partial_eval(proc_, a); });
  }
  void divide_loop(const Cursor& c, long long factor, const std::string& outer,
                   const std::string& inner) {
    step("divide_loop " + cur(c) + " " + std::to_string(factor) + " " + outer + " " + inner,
         [&] { return ukgen::divide_loop(proc_, c, factor, outer, inner); });
  }
  void reorder_loops(const Cursor& c) {
    step("reorder_loops " + cur(c), [&] { return ukgen::reorder_loops(proc_, c); });
  }
  void stage_mem(const Cursor& block, const std::string& window, const std::string& name) {
    step("stage_mem " + cur(block) + " " + scripting::quote(window) + " " + name,
         [&] { return ukgen::stage_mem(proc_, block, window, name); });
  }
  void expand_dim(const Cursor& alloc, const AffineExpr& dim, const AffineExpr& index) {
    step("expand_dim " + cur(alloc) + " " + scripting::quote(affine_to_string(dim)) + " " +
             scripting::quote(affine_to_string(index)),
         [&] { return ukgen::expand_dim(proc_, alloc, dim, index); });
  }
  void lift_alloc(const Cursor& alloc, int levels) {
    step("lift_alloc " + cur(alloc) + " " + std::to_string(levels),
         [&] { return ukgen::lift_alloc(proc_, alloc, levels); });
  }
  void fission(const Cursor& stmt, bool after, int levels) {
    step("fission " + cur(stmt) + " " + (after ? "after" : "before") + " " +
             std::to_string(levels),
         [&] { return ukgen::fission(proc_, stmt, after, levels); });
  }
  void bind_expr(const std::string& pattern, int occurrence, const std::string& name) {
    step("bind_expr " + scripting::quote(pattern) + " " + std::to_string(occurrence) + " " + name,
         [&] { return ukgen::bind_expr(proc_, pattern, occurrence, name); });
  }
  void assign_to_reduce(const Cursor& c) {
    step("assign_to_reduce " + cur(c), [&] { return ukgen::assign_to_reduce(proc_, c); });
  }
  void replace(const Cursor& block, const std::string& instr) {
    step("replace " + cur(block) + " " + instr,
         [&] { return ukgen::replace(proc_, block, lib_, instr); });
  }
  void set_memory(const Cursor& alloc, const std::string& space_name) {
    step("set_memory " + cur(alloc) + " " + space_name, [&] {
      const MemSpace* space = lib_.find_space(space_name);
      if (!space) fail(ErrKind::ValidationError, "unknown memory space '" + space_name + "'");
      return ukgen::set_memory(proc_, alloc, *space, lib_);
    });
  }
  void set_precision(const Cursor& c, Precision prec) {
    step(std::string("set_precision ") + cur(c) + " " + precision_name(prec),
         [&] { return ukgen::set_precision(proc_, c, prec, lib_); });
  }
  void unroll_loop(const Cursor& c) {
    step("unroll_loop " + cur(c), [&] { return ukgen::unroll_loop(proc_, c); });
  }

  // Cursor for a statement found programmatically: derives the head pattern
  // from the statement kind plus the occurrence index, so the recorded
  // directive replays unambiguously.
  Cursor cursor_at(const StmtPath& path) const {
    const Stmt::Ptr& s = stmt_at(proc_, path);
    std::string pattern;
    if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
      pattern = "for " + loop->var + " in _: _";
    } else if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
      pattern = a->buffer + (a->index.empty() ? " = _" : "[_] = _");
    } else if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
      pattern = r->buffer + (r->index.empty() ? " += _" : "[_] += _");
    } else if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
      pattern = al->decl.name + " : _";
    } else {
      pattern = std::get<Stmt::InstrCall>(s->node).instr + "(_)";
    }
    return Cursor(pattern, occurrence_of(proc_, pattern, path));
  }

 private:
  static std::string cur(const Cursor& c) {
    return scripting::quote(c.pattern) + " " + std::to_string(c.occurrence);
  }
  template <typename Fn>
  void step(std::string line, Fn&& fn) {
    try {
      Proc next = fn();
      proc_ = std::move(next);
      lines_.push_back(std::move(line));
      history_.push_back(proc_);
    } catch (const Error& e) {
      fail(e.kind(),
           "step " + std::to_string(lines_.size() + 1) + " [" + line + "]: " + e.what());
    }
  }

  const TargetLibrary& lib_;
  Proc proc_;
  std::vector<std::string> lines_;
  std::vector<Proc> history_;
  std::vector<std::pair<std::string, size_t>> phase_marks_;
};

// Replays a serialized script. Failures carry the 1-based step index (the
// scheduler adds it for rewrite errors; directive parse errors add their own).
inline Scheduler replay_script(const Proc& base, const TargetLibrary& lib,
                               const std::string& text) {
  Scheduler s(base, lib);
  std::istringstream is(text);
  std::string line;
  int step = 0;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ++step;
    std::vector<std::string> tok = scripting::tokenize(line);
    try {
      const std::string& op = tok[0];
      auto need = [&](size_t n) {
        if (tok.size() != n + 1)
          fail(ErrKind::ParseError, "directive '" + op + "' expects " + std::to_string(n) +
                                        " arguments, got " + std::to_string(tok.size() - 1));
      };
      auto cursor_arg = [&](size_t i) { return Cursor(tok[i], std::stoi(tok[i + 1])); };
      if (op == "phase") {
        need(1);
        s.phase(tok[1]);
      } else if (op == "rename") {
        need(1);
        s.rename(tok[1]);
      } else if (op == "partial_eval") {
        std::map<std::string, long long> a;
        for (size_t i = 1; i < tok.size(); ++i) {
          size_t eq = tok[i].find('=');
          if (eq == std::string::npos)
            fail(ErrKind::ParseError, "partial_eval expects name=value");
          a[tok[i].substr(0, eq)] = std::stoll(tok[i].substr(eq + 1));
        }
        s.partial_eval(a);
      } else if (op == "divide_loop") {
        need(5);
        s.divide_loop(cursor_arg(1), std::stoll(tok[3]), tok[4], tok[5]);
      } else if (op == "reorder_loops") {
        need(2);
        s.reorder_loops(cursor_arg(1));
      } else if (op == "stage_mem") {
        need(4);
        s.stage_mem(cursor_arg(1), tok[3], tok[4]);
      } else if (op == "expand_dim") {
        need(4);
        s.expand_dim(cursor_arg(1), scripting::parse_affine_text(tok[3]),
                     scripting::parse_affine_text(tok[4]));
      } else if (op == "lift_alloc") {
        need(3);
        s.lift_alloc(cursor_arg(1), std::stoi(tok[3]));
      } else if (op == "fission") {
        need(4);
        if (tok[3] != "after" && tok[3] != "before")
          fail(ErrKind::ParseError, "fission expects 'after' or 'before'");
        s.fission(cursor_arg(1), tok[3] == "after", std::stoi(tok[4]));
      } else if (op == "bind_expr") {
        need(3);
        s.bind_expr(tok[1], std::stoi(tok[2]), tok[3]);
      } else if (op == "assign_to_reduce") {
        need(2);
        s.assign_to_reduce(cursor_arg(1));
      } else if (op == "replace") {
        need(3);
        s.replace(cursor_arg(1), tok[3]);
      } else if (op == "set_memory") {
        need(3);
        s.set_memory(cursor_arg(1), tok[3]);
      } else if (op == "set_precision") {
        need(3);
        s.set_precision(cursor_arg(1), tok[3] == "f16" ? Precision::f16 : Precision::f32);
      } else if (op == "unroll_loop") {
        need(2);
        s.unroll_loop(cursor_arg(1));
      } else {
        fail(ErrKind::ParseError, "unknown directive '" + op + "'");
      }
    } catch (const Error& e) {
      std::string what = e.what();
      if (what.find("step ") != std::string::npos) throw;
      fail(e.kind(), "step " + std::to_string(step) + " (" + line + "): " + what);
    }
  }
  return s;
}

}  // namespace ukgen
