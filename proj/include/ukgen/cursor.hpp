#pragma once

#include <string>
#include <vector>

#include "ukgen/ir.hpp"

namespace ukgen {

// Statement addressing by textual head pattern plus 1-based occurrence among
// pre-order matches. Supported patterns:
//
//   "for i in _: _"     loop with variable i        ("for _ in _: _" = any)
//   "C[_] = _"          assignment to C             ("C = _" for rank-0)
//   "C[_] += _"         reduction into C
//   "C_reg : _"         allocation of C_reg
//   "neon_vld_4xf32(_)" instruction call by name
//
// Occurrence 0 means "unspecified": resolution then requires the pattern to
// match exactly once. No silent first-match tie-breaking.
struct Cursor {
  std::string pattern;
  int occurrence = 0;

  Cursor() = default;
  Cursor(std::string pat, int occ = 0) : pattern(std::move(pat)), occurrence(occ) {}
};

namespace cursors {

struct ParsedPattern {
  enum Kind { any_loop, loop_var, assign_to, reduce_to, alloc_of, call_of } kind;
  std::string name;
};

inline std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

inline ParsedPattern parse_pattern(const std::string& raw) {
  std::string s = strip(raw);
  auto fail_pattern = [&]() -> ParsedPattern {
    fail(ErrKind::NoMatch, "unrecognized cursor pattern '" + raw + "'");
  };
  if (s.rfind("for ", 0) == 0) {
    size_t in_pos = s.find(" in ");
    if (in_pos == std::string::npos) return fail_pattern();
    std::string var = strip(s.substr(4, in_pos - 4));
    std::string rest = strip(s.substr(in_pos + 4));
    if (rest != "_: _" && rest != "_ : _") return fail_pattern();
    if (var == "_") return ParsedPattern{ParsedPattern::any_loop, ""};
    return ParsedPattern{ParsedPattern::loop_var, var};
  }
  if (s.size() > 3 && s.substr(s.size() - 3) == "(_)") {
    return ParsedPattern{ParsedPattern::call_of, strip(s.substr(0, s.size() - 3))};
  }
  size_t colon = s.find(':');
  size_t eq = s.find('=');
  if (colon != std::string::npos && (eq == std::string::npos || colon < eq)) {
    if (strip(s.substr(colon + 1)) != "_") return fail_pattern();
    return ParsedPattern{ParsedPattern::alloc_of, strip(s.substr(0, colon))};
  }
  if (eq == std::string::npos || strip(s.substr(eq + 1)) != "_") return fail_pattern();
  bool reduce = eq > 0 && s[eq - 1] == '+';
  std::string head = strip(s.substr(0, reduce ? eq - 1 : eq));
  size_t bracket = head.find('[');
  if (bracket != std::string::npos) {
    if (strip(head.substr(bracket)) != "[_]") return fail_pattern();
    head = strip(head.substr(0, bracket));
  }
  if (head.empty()) return fail_pattern();
  return ParsedPattern{reduce ? ParsedPattern::reduce_to : ParsedPattern::assign_to, head};
}

inline bool matches(const ParsedPattern& pat, const Stmt::Ptr& s) {
  switch (pat.kind) {
    case ParsedPattern::any_loop:
      return std::holds_alternative<Stmt::Loop>(s->node);
    case ParsedPattern::loop_var: {
      auto* l = std::get_if<Stmt::Loop>(&s->node);
      return l && l->var == pat.name;
    }
    case ParsedPattern::assign_to: {
      auto* a = std::get_if<Stmt::Assign>(&s->node);
      return a && a->buffer == pat.name;
    }
    case ParsedPattern::reduce_to: {
      auto* r = std::get_if<Stmt::Reduce>(&s->node);
      return r && r->buffer == pat.name;
    }
    case ParsedPattern::alloc_of: {
      auto* al = std::get_if<Stmt::Alloc>(&s->node);
      return al && al->decl.name == pat.name;
    }
    case ParsedPattern::call_of: {
      auto* c = std::get_if<Stmt::InstrCall>(&s->node);
      return c && c->instr == pat.name;
    }
  }
  return false;
}

}  // namespace cursors

inline std::vector<StmtPath> find_all(const Proc& p, const std::string& pattern) {
  cursors::ParsedPattern pat = cursors::parse_pattern(pattern);
  std::vector<StmtPath> out;
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath& path) {
    if (cursors::matches(pat, s)) out.push_back(path);
    return true;
  });
  return out;
}

inline StmtPath resolve_cursor(const Proc& p, const Cursor& c) {
  std::vector<StmtPath> hits = find_all(p, c.pattern);
  if (hits.empty())
    fail(ErrKind::NoMatch, "pattern '" + c.pattern + "' matches nothing in proc '" + p.name + "'");
  if (c.occurrence == 0) {
    if (hits.size() > 1)
      fail(ErrKind::AmbiguousMatch, "pattern '" + c.pattern + "' matches " +
                                        std::to_string(hits.size()) +
                                        " statements; give an occurrence index");
    return hits[0];
  }
  if (c.occurrence < 1 || static_cast<size_t>(c.occurrence) > hits.size())
    fail(ErrKind::NoMatch, "pattern '" + c.pattern + "' has no occurrence " +
                               std::to_string(c.occurrence) + " (found " +
                               std::to_string(hits.size()) + ")");
  return hits[static_cast<size_t>(c.occurrence) - 1];
}

// Occurrence index (1-based) of the statement at `path` among the pattern's
// matches; used when recording replayable schedule scripts.
inline int occurrence_of(const Proc& p, const std::string& pattern, const StmtPath& path) {
  std::vector<StmtPath> hits = find_all(p, pattern);
  for (size_t i = 0; i < hits.size(); ++i)
    if (hits[i] == path) return static_cast<int>(i) + 1;
  fail(ErrKind::Internal, "statement is not a match of pattern '" + pattern + "'");
}

}  // namespace ukgen
