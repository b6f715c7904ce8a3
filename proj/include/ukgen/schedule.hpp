#pragma once

#include <algorithm>
#include <set>
#include <sstream>

#include "ukgen/cursor.hpp"
#include "ukgen/ir.hpp"
#include "ukgen/parser.hpp"
#include "ukgen/printer.hpp"
#include "ukgen/target.hpp"
#include "ukgen/wellformed.hpp"

namespace ukgen {

// The scheduling rewrite catalog. Every rewrite is a pure function
// Proc -> Proc that either preserves semantics or throws; rewrites never
// return a malformed proc (post-checked). Legality rules are conservative
// and documented per operation; they may reject transformations a finer
// dependence analysis would accept.

namespace sched {

inline const Stmt::Loop& loop_at(const Proc& p, const StmtPath& path, const char* who) {
  const Stmt::Ptr& s = stmt_at(p, path);
  auto* loop = std::get_if<Stmt::Loop>(&s->node);
  if (!loop) fail(ErrKind::NoMatch, std::string(who) + ": cursor must address a loop");
  return *loop;
}

inline std::set<std::string> all_symbols(const Proc& p) {
  std::set<std::string> out(p.size_params.begin(), p.size_params.end());
  for (const auto& a : p.args) out.insert(a.name);
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath&) {
    if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) out.insert(loop->var);
    if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) out.insert(al->decl.name);
    return true;
  });
  return out;
}

inline std::string fresh_name(const Proc& p, const std::string& base) {
  std::set<std::string> taken = all_symbols(p);
  if (!taken.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!taken.count(cand)) return cand;
  }
}

// Rewrites every access to `buffer` in a statement tree, renaming it to
// `new_name` (pass the same name for in-place index rewrites). fn_index maps
// plain access index lists; fn_window maps instruction operand windows and
// chooses the window's buffer itself.
inline Stmt::Ptr rewrite_accesses(
    const Stmt::Ptr& s, const std::string& buffer, const std::string& new_name,
    const std::function<std::vector<AffineExpr>(const std::vector<AffineExpr>&)>& fn_index,
    const std::function<Window(const Window&)>& fn_window) {
  std::function<Expr::Ptr(const Expr::Ptr&)> map_expr = [&](const Expr::Ptr& e) -> Expr::Ptr {
    if (auto* r = std::get_if<Expr::Read>(&e->node)) {
      if (r->buffer != buffer) return e;
      return Expr::read(new_name, fn_index(r->index));
    }
    if (auto* b = std::get_if<Expr::Binary>(&e->node))
      return Expr::binary(b->op, map_expr(b->lhs), map_expr(b->rhs));
    return e;
  };
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    std::vector<Stmt::Ptr> body;
    for (const auto& c : loop->body)
      body.push_back(rewrite_accesses(c, buffer, new_name, fn_index, fn_window));
    return Stmt::loop(loop->var, loop->bound, std::move(body));
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    bool hit = a->buffer == buffer;
    return Stmt::assign(hit ? new_name : a->buffer, hit ? fn_index(a->index) : a->index,
                        map_expr(a->value));
  }
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
    bool hit = r->buffer == buffer;
    return Stmt::reduce(hit ? new_name : r->buffer, hit ? fn_index(r->index) : r->index,
                        map_expr(r->value));
  }
  if (std::get_if<Stmt::Alloc>(&s->node)) return s;
  Stmt::InstrCall call = std::get<Stmt::InstrCall>(s->node);
  for (auto& op : call.operands)
    if (op.window.buffer == buffer) op.window = fn_window(op.window);
  return Stmt::instr_call(std::move(call));
}

// True when equal index tuples force equal values of `vars` (all other
// symbols treated as shared). Uses two rules to a fixpoint: a coordinate
// with a single undetermined var pins it; a coordinate whose undetermined
// vars have constant ranges pins them all when coefficients form a
// mixed-radix chain.
inline bool tuple_injective(const std::vector<AffineExpr>& tuple,
                            const std::set<std::string>& vars, const SymEnv& env) {
  std::set<std::string> det;
  bool progress = true;
  while (progress && det.size() < vars.size()) {
    progress = false;
    for (const auto& coord : tuple) {
      std::vector<std::pair<std::string, long long>> undet;
      for (const auto& [sym, c] : coord.terms)
        if (vars.count(sym) && !det.count(sym)) undet.push_back({sym, c});
      if (undet.empty()) continue;
      if (undet.size() == 1) {
        det.insert(undet[0].first);
        progress = true;
        continue;
      }
      // mixed-radix: sort by |coeff|, require each coeff to exceed the
      // largest delta expressible by the smaller ones
      bool all_const = true;
      std::vector<std::pair<long long, long long>> cr;  // (|coeff|, range-1)
      for (const auto& [sym, c] : undet) {
        auto it = env.find(sym);
        if (it == env.end() || !it->second.bound.is_constant()) {
          all_const = false;
          break;
        }
        cr.push_back({c < 0 ? -c : c, it->second.bound.constant - 1});
      }
      if (!all_const) continue;
      std::sort(cr.begin(), cr.end());
      long long reach = 0;
      bool ok = true;
      for (const auto& [c, r] : cr) {
        if (c <= reach) {
          ok = false;
          break;
        }
        reach += c * r;
      }
      if (ok) {
        for (const auto& [sym, c] : undet) det.insert(sym);
        progress = true;
      }
    }
  }
  return det.size() >= vars.size();
}

struct AccessSummary {
  std::vector<Access> accesses;
  SymEnv env;  // includes synthetic window symbols
};

inline AccessSummary summarize(const std::vector<Stmt::Ptr>& stmts, const SymEnv& outer_env) {
  AccessSummary out;
  out.env = outer_env;
  int synth = 0;
  for (const auto& s : stmts) collect_accesses(s, out.accesses, out.env, synth);
  return out;
}

inline std::set<std::string> written_buffers(const AccessSummary& a) {
  std::set<std::string> out;
  for (const auto& acc : a.accesses)
    if (acc.is_write) out.insert(acc.buffer);
  return out;
}
inline std::set<std::string> read_buffers(const AccessSummary& a) {
  std::set<std::string> out;
  for (const auto& acc : a.accesses)
    if (!acc.is_write || acc.is_reduce) out.insert(acc.buffer);
  return out;
}

inline bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a)
    if (b.count(x)) return true;
  return false;
}

}  // namespace sched

// ---------------------------------------------------------------------------
// rename: only the proc name changes.

inline Proc rename_proc(const Proc& p, const std::string& new_name) {
  Proc out = p;
  out.name = new_name;
  return out;
}

// ---------------------------------------------------------------------------
// partial_eval: freeze size parameters to constants and drop them from the
// signature.

inline Proc partial_eval(const Proc& p, const std::map<std::string, long long>& assignments) {
  Proc out = p;
  for (const auto& [name, value] : assignments) {
    if (std::find(out.size_params.begin(), out.size_params.end(), name) ==
        out.size_params.end())
      fail(ErrKind::UnknownParam, "'" + name + "' is not a size parameter of " + p.name);
    if (value < 1) fail(ErrKind::NonPositiveValue, name + " = " + std::to_string(value));
    out.size_params.erase(std::find(out.size_params.begin(), out.size_params.end(), name));
    AffineExpr repl = AffineExpr::cst(value);
    for (auto& a : out.args)
      for (auto& d : a.dims) d = d.substituted(name, repl);
    std::vector<Stmt::Ptr> body;
    for (const auto& s : out.body) body.push_back(stmt_substituted(s, name, repl));
    out.body = std::move(body);
  }
  expect_well_formed(out, "partial_eval");
  return out;
}

// ---------------------------------------------------------------------------
// divide_loop: perfect split only. `for v in 0..N` becomes
// `for vo in 0..N/f: for vi in 0..f` with v := f*vo + vi everywhere.
// Remainders are out of scope; differently sized kernels handle edges.

inline Proc divide_loop(const Proc& p, const Cursor& c, long long factor,
                        const std::string& outer_name, const std::string& inner_name) {
  StmtPath path = resolve_cursor(p, c);
  const Stmt::Loop& loop = sched::loop_at(p, path, "divide_loop");
  if (!loop.bound.is_constant())
    fail(ErrKind::NonConstantBound, "divide_loop needs a constant bound, got " +
                                        affine_to_string(loop.bound));
  long long n = loop.bound.constant;
  if (factor < 1 || n % factor != 0)
    fail(ErrKind::NonDivisible,
         "bound " + std::to_string(n) + " is not divisible by " + std::to_string(factor));
  std::set<std::string> taken = sched::all_symbols(p);
  if (taken.count(outer_name) || taken.count(inner_name) || outer_name == inner_name)
    fail(ErrKind::ValidationError, "divide_loop: new loop names must be fresh");

  AffineExpr repl = AffineExpr::sym(outer_name, factor) + AffineExpr::sym(inner_name);
  std::vector<Stmt::Ptr> body;
  for (const auto& s : loop.body) body.push_back(stmt_substituted(s, loop.var, repl));
  Stmt::Ptr inner = Stmt::loop(inner_name, AffineExpr::cst(factor), std::move(body));
  Stmt::Ptr outer = Stmt::loop(outer_name, AffineExpr::cst(n / factor), {inner});
  Proc out = with_replaced(p, path, {outer});
  expect_well_formed(out, "divide_loop");
  return out;
}

// ---------------------------------------------------------------------------
// reorder_loops: swaps a perfectly nested pair. Legal when (a) every write
// in the body is a `+=` reduction and no reduced buffer is read elsewhere in
// the body, or (b) every touched-and-written buffer is accessed through one
// index tuple that distinct (outer, inner) iterations map to distinct cells.

inline Proc reorder_loops(const Proc& p, const Cursor& c) {
  StmtPath path = resolve_cursor(p, c);
  const Stmt::Loop& outer = sched::loop_at(p, path, "reorder_loops");
  if (outer.body.size() != 1 || !std::holds_alternative<Stmt::Loop>(outer.body[0]->node))
    fail(ErrKind::NotPerfectlyNested,
         "body of '" + outer.var + "' is not exactly one nested loop");
  const Stmt::Loop& inner = std::get<Stmt::Loop>(outer.body[0]->node);

  SymEnv env = sym_env_at(p, path);
  env[outer.var] = SymRange{SymRange::loop, outer.bound};
  env[inner.var] = SymRange{SymRange::loop, inner.bound};
  sched::AccessSummary sum = sched::summarize(inner.body, env);

  bool rule_a = true;
  std::set<std::string> reduced;
  for (const auto& acc : sum.accesses)
    if (acc.is_write) {
      if (!acc.is_reduce) rule_a = false;
      reduced.insert(acc.buffer);
    }
  if (rule_a) {
    for (const auto& acc : sum.accesses)
      if (!acc.is_write && reduced.count(acc.buffer)) rule_a = false;
  }
  if (!rule_a) {
    std::set<std::string> vars{outer.var, inner.var};
    for (const auto& buf : sched::written_buffers(sum)) {
      const std::vector<AffineExpr>* tuple = nullptr;
      for (const auto& acc : sum.accesses) {
        if (acc.buffer != buf) continue;
        if (!tuple) {
          tuple = &acc.index;
        } else if (*tuple != acc.index) {
          fail(ErrKind::DependenceViolation,
               "reorder_loops: '" + buf + "' is accessed through differing index tuples");
        }
      }
      if (!sched::tuple_injective(*tuple, vars, sum.env))
        fail(ErrKind::DependenceViolation,
             "reorder_loops: iterations of (" + outer.var + ", " + inner.var +
                 ") may collide on '" + buf + "'");
    }
  }
  Stmt::Ptr new_inner = Stmt::loop(outer.var, outer.bound, inner.body);
  Stmt::Ptr new_outer = Stmt::loop(inner.var, inner.bound, {new_inner});
  Proc out = with_replaced(p, path, {new_outer});
  expect_well_formed(out, "reorder_loops");
  return out;
}

// ---------------------------------------------------------------------------
// stage_mem: bind a rectangular window of a buffer to a fresh staging buffer
// across a block. Point dimensions do not contribute rank (staging a point
// yields a scalar). Copy-in appears iff the block reads the window, copy-back
// iff it writes it; all accesses inside the block are rewired.

struct WindowSpec {
  std::string buffer;
  std::vector<WindowDim> dims;
};

inline WindowSpec parse_window_spec(const std::string& text) {
  parsing::LineLexer lx{text, 0, 1};
  std::string name = lx.ident();
  Window w = parsing::parse_window(lx, name);
  if (!lx.eof()) fail(ErrKind::NonContiguousWindow, "trailing content in window '" + text + "'");
  return WindowSpec{w.buffer, w.dims};
}

inline Proc stage_mem(const Proc& p, const Cursor& block, const std::string& window_text,
                      const std::string& new_name) {
  StmtPath path = resolve_cursor(p, block);
  WindowSpec spec = parse_window_spec(window_text);
  BufferTable bufs = collect_buffers(p);
  const BufferDecl* decl = bufs.find(spec.buffer);
  if (!decl) fail(ErrKind::NoMatch, "stage_mem: unknown buffer '" + spec.buffer + "'");
  if (static_cast<int>(spec.dims.size()) != decl->rank())
    fail(ErrKind::NonContiguousWindow, "window arity does not match buffer rank");
  SymEnv outer_env = sym_env_at(p, path);
  for (const auto& d : spec.dims) {
    for (const auto& [sym, _] : d.base.terms)
      if (!outer_env.count(sym))
        fail(ErrKind::NonContiguousWindow,
             "window base must be invariant across the staged block ('" + sym + "')");
    if (d.extent < 1) fail(ErrKind::NonContiguousWindow, "window extent must be positive");
  }

  // Containment: every access to the buffer inside the block must provably
  // land inside the window.
  const Stmt::Ptr& target = stmt_at(p, path);
  sched::AccessSummary sum = sched::summarize({target}, outer_env);
  bool reads = false, writes = false;
  for (const auto& acc : sum.accesses) {
    if (acc.buffer != spec.buffer) continue;
    if (acc.is_write) writes = true;
    if (!acc.is_write || acc.is_reduce) reads = true;
    for (size_t d = 0; d < acc.index.size(); ++d) {
      AffineExpr delta = acc.index[d] - spec.dims[d].base;
      if (!provably_in_range(delta, AffineExpr::cst(spec.dims[d].extent), sum.env))
        fail(ErrKind::WindowEscapes, "access " + affine_to_string(acc.index[d]) +
                                         " may leave window dimension " + std::to_string(d) +
                                         " of '" + spec.buffer + "'");
    }
  }
  if (!reads && !writes)
    fail(ErrKind::NoMatch, "stage_mem: block never touches '" + spec.buffer + "'");

  // staging declaration
  BufferDecl staged;
  staged.name = new_name;
  for (const auto& d : spec.dims)
    if (!d.is_point) staged.dims.push_back(AffineExpr::cst(d.extent));
  staged.precision = decl->precision;
  staged.memspace = MemSpace::dram();
  if (sched::all_symbols(p).count(new_name))
    fail(ErrKind::ValidationError, "stage_mem: name '" + new_name + "' already in use");

  // copy loop framework over the non-point dims
  std::vector<std::string> copy_vars;
  {
    int i = 0;
    std::set<std::string> taken = sched::all_symbols(p);
    taken.insert(new_name);
    for (const auto& d : spec.dims) {
      if (d.is_point) continue;
      std::string base = new_name + "_i" + std::to_string(i++);
      while (taken.count(base)) base += "x";
      taken.insert(base);
      copy_vars.push_back(base);
    }
  }
  auto window_index = [&](bool of_window) {
    // of_window: index into the original buffer; else into the staging buffer
    std::vector<AffineExpr> idx;
    size_t r = 0;
    for (const auto& d : spec.dims) {
      if (d.is_point) {
        if (of_window) idx.push_back(d.base);
      } else {
        AffineExpr v = AffineExpr::sym(copy_vars[r]);
        idx.push_back(of_window ? d.base + v : v);
        ++r;
      }
    }
    return idx;
  };
  auto wrap_copy = [&](Stmt::Ptr body) {
    for (size_t r = copy_vars.size(); r-- > 0;) {
      // find the extent of the r-th non-point dim
      size_t seen = 0;
      long long extent = 1;
      for (const auto& d : spec.dims) {
        if (d.is_point) continue;
        if (seen == r) extent = d.extent;
        ++seen;
      }
      body = Stmt::loop(copy_vars[r], AffineExpr::cst(extent), {body});
    }
    return body;
  };
  Stmt::Ptr copy_in =
      wrap_copy(Stmt::assign(new_name, window_index(false),
                             Expr::read(spec.buffer, window_index(true))));
  Stmt::Ptr copy_back =
      wrap_copy(Stmt::assign(spec.buffer, window_index(true),
                             Expr::read(new_name, window_index(false))));

  // rewire the block
  auto fn_index = [&](const std::vector<AffineExpr>& idx) {
    std::vector<AffineExpr> out;
    for (size_t d = 0; d < idx.size(); ++d)
      if (!spec.dims[d].is_point) out.push_back(idx[d] - spec.dims[d].base);
    return out;
  };
  auto fn_window = [&](const Window& w) {
    Window out;
    out.buffer = new_name;
    for (size_t d = 0; d < w.dims.size(); ++d) {
      if (spec.dims[d].is_point) continue;
      WindowDim nd = w.dims[d];
      nd.base = nd.base - spec.dims[d].base;
      out.dims.push_back(nd);
    }
    return out;
  };
  Stmt::Ptr rewired = sched::rewrite_accesses(target, spec.buffer, new_name, fn_index, fn_window);

  std::vector<Stmt::Ptr> replacement;
  replacement.push_back(Stmt::alloc(staged));
  if (reads) replacement.push_back(copy_in);
  replacement.push_back(rewired);
  if (writes) replacement.push_back(copy_back);
  Proc out = with_replaced(p, path, std::move(replacement));
  expect_well_formed(out, "stage_mem");
  return out;
}

// ---------------------------------------------------------------------------
// expand_dim: give an allocation a new leading dimension, indexed by an
// affine expression at every access site.

inline Proc expand_dim(const Proc& p, const Cursor& alloc, const AffineExpr& new_dim,
                       const AffineExpr& index) {
  StmtPath path = resolve_cursor(p, alloc);
  const Stmt::Ptr& s = stmt_at(p, path);
  auto* al = std::get_if<Stmt::Alloc>(&s->node);
  if (!al) fail(ErrKind::NotAnAlloc, "expand_dim: cursor must address an allocation");
  const std::string name = al->decl.name;

  // every access site must bind the index's symbols and stay in range
  bool range_ok = true;
  walk_stmts(p, [&](const Stmt::Ptr& st, const StmtPath& sp) {
    bool touches = false;
    std::vector<Access> accs;
    SymEnv env = sym_env_at(p, sp);
    if (auto* loop = std::get_if<Stmt::Loop>(&st->node))
      env[loop->var] = SymRange{SymRange::loop, loop->bound};
    int synth = 0;
    collect_accesses(st, accs, env, synth);
    for (const auto& a : accs)
      if (a.buffer == name) touches = true;
    if (touches && !provably_in_range(index, new_dim, env)) range_ok = false;
    return true;
  });
  if (!range_ok)
    fail(ErrKind::IndexOutOfRange, "expand_dim: index " + affine_to_string(index) +
                                       " not provably within [0, " + affine_to_string(new_dim) +
                                       ") at every access site");

  BufferDecl d = al->decl;
  d.dims.insert(d.dims.begin(), new_dim);
  auto fn_index = [&](const std::vector<AffineExpr>& idx) {
    std::vector<AffineExpr> out{index};
    out.insert(out.end(), idx.begin(), idx.end());
    return out;
  };
  auto fn_window = [&](const Window& w) {
    Window out = w;
    out.dims.insert(out.dims.begin(), WindowDim{index, 1, true});
    return out;
  };
  Proc out = p;
  std::vector<Stmt::Ptr> body;
  for (const auto& st : p.body)
    body.push_back(sched::rewrite_accesses(st, name, name, fn_index, fn_window));
  out.body = std::move(body);
  out = with_replaced(out, path, {Stmt::alloc(d)});
  expect_well_formed(out, "expand_dim");
  return out;
}

// ---------------------------------------------------------------------------
// lift_alloc: hoist an allocation out of `levels` enclosing loops.

inline Proc lift_alloc(const Proc& p, const Cursor& alloc, int levels) {
  StmtPath path = resolve_cursor(p, alloc);
  const Stmt::Ptr& s = stmt_at(p, path);
  auto* al = std::get_if<Stmt::Alloc>(&s->node);
  if (!al) fail(ErrKind::NotAnAlloc, "lift_alloc: cursor must address an allocation");
  if (levels == 0) return p;
  int enclosing = static_cast<int>(path.size()) - 1;
  if (levels < 0 || levels > enclosing)
    fail(ErrKind::TooManyLevels, "lift_alloc: only " + std::to_string(enclosing) +
                                     " enclosing loops, asked for " + std::to_string(levels));
  // loops being exited
  for (int l = 0; l < levels; ++l) {
    StmtPath prefix(path.begin(), path.end() - 1 - l);
    const Stmt::Loop& loop = std::get<Stmt::Loop>(stmt_at(p, prefix)->node);
    for (const auto& dim : al->decl.dims)
      if (dim.references(loop.var))
        fail(ErrKind::DimsDependOnLoop,
             "lift_alloc: dimension depends on loop '" + loop.var + "'");
  }
  Stmt::Ptr moved = s;
  Proc out = with_replaced(p, path, {});
  StmtPath dest(path.begin(), path.end() - levels);
  out = with_inserted(out, dest, {moved}, /*before=*/true);
  expect_well_formed(out, "lift_alloc");
  return out;
}

// ---------------------------------------------------------------------------
// fission: split the enclosing loop nest at a statement gap, through
// `levels` loops. At each level one of three cases must apply:
//   private   both halves touch conflicting buffers only through one index
//             tuple that distinct iterations map to distinct cells; the loop
//             is kept on both halves.
//   hoist-head  the first half does not depend on the loop variable, writes
//             only via assignment, re-reads nothing it writes, and the
//             second half neither writes what it reads nor what it writes;
//             it is emitted once before the loop.
//   hoist-tail  symmetric for the second half (its writes must not be read
//             by itself or the first half); emitted once after the loop.
// Otherwise the split is refused.

inline Proc fission(const Proc& p, const Cursor& stmt, bool after, int levels) {
  StmtPath gap_path = resolve_cursor(p, stmt);
  bool gap_after = after;
  Proc cur = p;
  for (int level = 0; level < levels; ++level) {
    if (gap_path.size() < 2)
      fail(ErrKind::TooManyLevels, "fission: gap reached the proc body after " +
                                       std::to_string(level) + " of " + std::to_string(levels) +
                                       " levels");
    StmtPath loop_path(gap_path.begin(), gap_path.end() - 1);
    const Stmt::Ptr& loop_stmt = stmt_at(cur, loop_path);
    auto* loop = std::get_if<Stmt::Loop>(&loop_stmt->node);
    if (!loop) fail(ErrKind::Internal, "fission: gap not directly inside a loop");
    size_t cut = static_cast<size_t>(gap_path.back()) + (gap_after ? 1 : 0);
    std::vector<Stmt::Ptr> first(loop->body.begin(), loop->body.begin() + cut);
    std::vector<Stmt::Ptr> second(loop->body.begin() + cut, loop->body.end());
    if (first.empty() || second.empty()) {
      // gap at the loop boundary: nothing to split, just step out
      gap_after = second.empty();
      gap_path = loop_path;
      continue;
    }
    // allocation scope must not break
    for (const auto& f : first) {
      if (auto* al = std::get_if<Stmt::Alloc>(&f->node)) {
        for (const auto& sec : second)
          if (stmt_references_symbol(sec, al->decl.name) ||
              [&] {  // buffer uses are not symbols; check accesses
                std::vector<Access> accs;
                SymEnv env;
                int synth = 0;
                collect_accesses(sec, accs, env, synth);
                for (const auto& a : accs)
                  if (a.buffer == al->decl.name) return true;
                return false;
              }())
            fail(ErrKind::DependenceViolation, "fission: allocation '" + al->decl.name +
                                                   "' would go out of scope; lift it first");
      }
    }

    SymEnv env = sym_env_at(cur, gap_path);
    env[loop->var] = SymRange{SymRange::loop, loop->bound};
    sched::AccessSummary fs = sched::summarize(first, env);
    sched::AccessSummary ss = sched::summarize(second, env);
    std::set<std::string> fw = sched::written_buffers(fs), fr = sched::read_buffers(fs);
    std::set<std::string> sw = sched::written_buffers(ss), sr = sched::read_buffers(ss);

    // conflicting buffers: written on one side, touched on the other
    std::set<std::string> conflicts;
    for (const auto& b : fw)
      if (sw.count(b) || sr.count(b)) conflicts.insert(b);
    for (const auto& b : sw)
      if (fw.count(b) || fr.count(b)) conflicts.insert(b);

    auto private_ok = [&]() {
      std::set<std::string> vars{loop->var};
      for (const auto& buf : conflicts) {
        const std::vector<AffineExpr>* tuple = nullptr;
        for (const auto* sum : {&fs, &ss}) {
          for (const auto& acc : sum->accesses) {
            if (acc.buffer != buf) continue;
            if (!tuple)
              tuple = &acc.index;
            else if (*tuple != acc.index)
              return false;
          }
        }
        // window symbols live in whichever env recorded them; merge for the check
        SymEnv merged = fs.env;
        for (const auto& [k, v] : ss.env) merged.emplace(k, v);
        if (!tuple || !sched::tuple_injective(*tuple, vars, merged)) return false;
      }
      return true;
    };
    auto invariant_assign_only = [&](const std::vector<Stmt::Ptr>& half,
                                     const sched::AccessSummary& sum) {
      for (const auto& st : half)
        if (stmt_references_symbol(st, loop->var)) return false;
      for (const auto& acc : sum.accesses)
        if (acc.is_write && acc.is_reduce) return false;
      return true;
    };

    std::vector<Stmt::Ptr> replacement;
    if (conflicts.empty() || private_ok()) {
      replacement.push_back(Stmt::loop(loop->var, loop->bound, first));
      replacement.push_back(Stmt::loop(loop->var, loop->bound, second));
    } else if (invariant_assign_only(first, fs) && !sched::intersects(fw, fr) &&
               !sched::intersects(sw, fr) && !sched::intersects(sw, fw)) {
      for (const auto& f : first) replacement.push_back(f);
      replacement.push_back(Stmt::loop(loop->var, loop->bound, second));
    } else if (invariant_assign_only(second, ss) && !sched::intersects(sw, sr) &&
               !sched::intersects(sw, fr) && !sched::intersects(sw, fw)) {
      replacement.push_back(Stmt::loop(loop->var, loop->bound, first));
      for (const auto& scd : second) replacement.push_back(scd);
    } else {
      std::ostringstream os;
      os << "fission at level " << level + 1 << " (loop '" << loop->var
         << "') violates the dependence rules; conflicting buffers:";
      for (const auto& b : conflicts) os << " " << b;
      fail(ErrKind::DependenceViolation, os.str());
    }
    size_t first_group = replacement.size() - 1;  // stmts before the second half
    cur = with_replaced(cur, loop_path, std::move(replacement));
    gap_path = loop_path;
    gap_path.back() += static_cast<int>(first_group) - 1;  // last stmt of first group
    gap_after = true;
  }
  expect_well_formed(cur, "fission");
  return cur;
}

// ---------------------------------------------------------------------------
// bind_expr: name a sub-expression, staging it through a fresh rank-0
// temporary assigned immediately before the statement that uses it.

namespace sched {

struct ExprPattern {
  Expr::Ptr expr;  // Reads with empty marker "_" in index slots act as wildcards
  std::vector<bool> wild;
};

// Pattern syntax is a value expression where `_` may stand for any index.
inline Expr::Ptr parse_expr_pattern(const std::string& text) {
  // reuse the value parser with `_` accepted as a symbol, then treat reads
  // of buffer `_` and indices equal to the symbol `_` as wildcards
  parsing::LineLexer lx{text, 0, 1};
  Expr::Ptr e = parsing::parse_expr(lx);
  if (!lx.eof()) fail(ErrKind::ParseError, "trailing content in expression pattern");
  return e;
}

inline bool is_wild(const AffineExpr& e) { return e == AffineExpr::sym("_"); }

inline bool expr_matches(const Expr::Ptr& pat, const Expr::Ptr& e) {
  if (auto* pc = std::get_if<Expr::Const>(&pat->node)) {
    auto* ec = std::get_if<Expr::Const>(&e->node);
    return ec && pc->value == ec->value;
  }
  if (auto* pr = std::get_if<Expr::Read>(&pat->node)) {
    auto* er = std::get_if<Expr::Read>(&e->node);
    if (!er || pr->buffer != er->buffer || pr->index.size() != er->index.size()) return false;
    for (size_t i = 0; i < pr->index.size(); ++i)
      if (!is_wild(pr->index[i]) && pr->index[i] != er->index[i]) return false;
    return true;
  }
  const auto& pb = std::get<Expr::Binary>(pat->node);
  auto* eb = std::get_if<Expr::Binary>(&e->node);
  return eb && pb.op == eb->op && expr_matches(pb.lhs, eb->lhs) && expr_matches(pb.rhs, eb->rhs);
}

}  // namespace sched

inline Proc bind_expr(const Proc& p, const std::string& pattern_text, int occurrence,
                      const std::string& new_name) {
  Expr::Ptr pattern = sched::parse_expr_pattern(pattern_text);
  struct Hit {
    StmtPath path;
    std::vector<int> expr_route;  // 0=lhs,1=rhs chain from the statement value
  };
  std::vector<Hit> hits;
  std::function<void(const Expr::Ptr&, const StmtPath&, std::vector<int>&)> scan =
      [&](const Expr::Ptr& e, const StmtPath& sp, std::vector<int>& route) {
        if (sched::expr_matches(pattern, e)) hits.push_back(Hit{sp, route});
        if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
          route.push_back(0);
          scan(b->lhs, sp, route);
          route.back() = 1;
          scan(b->rhs, sp, route);
          route.pop_back();
        }
      };
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath& sp) {
    const Expr::Ptr* value = nullptr;
    if (auto* a = std::get_if<Stmt::Assign>(&s->node)) value = &a->value;
    if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) value = &r->value;
    if (value) {
      std::vector<int> route;
      scan(*value, sp, route);
    }
    return true;
  });
  if (hits.empty()) fail(ErrKind::NoMatch, "bind_expr: no occurrence of '" + pattern_text + "'");
  if (occurrence == 0 && hits.size() > 1)
    fail(ErrKind::AmbiguousMatch, "bind_expr: " + std::to_string(hits.size()) +
                                      " occurrences of '" + pattern_text + "'");
  size_t pick = occurrence == 0 ? 0 : static_cast<size_t>(occurrence) - 1;
  if (pick >= hits.size())
    fail(ErrKind::NoMatch, "bind_expr: occurrence " + std::to_string(occurrence) +
                               " out of range (" + std::to_string(hits.size()) + ")");
  const Hit& hit = hits[pick];

  // replace the matched node with a read of the temporary
  const Stmt::Ptr& s = stmt_at(p, hit.path);
  const Expr::Ptr* value = nullptr;
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) value = &a->value;
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) value = &r->value;
  std::function<Expr::Ptr(const Expr::Ptr&, size_t)> rebuild = [&](const Expr::Ptr& e,
                                                                   size_t depth) -> Expr::Ptr {
    if (depth == hit.expr_route.size()) return Expr::read(new_name, {});
    const auto& b = std::get<Expr::Binary>(e->node);
    if (hit.expr_route[depth] == 0)
      return Expr::binary(b.op, rebuild(b.lhs, depth + 1), b.rhs);
    return Expr::binary(b.op, b.lhs, rebuild(b.rhs, depth + 1));
  };
  Expr::Ptr matched = *value;
  for (int step : hit.expr_route)
    matched = step == 0 ? std::get<Expr::Binary>(matched->node).lhs
                        : std::get<Expr::Binary>(matched->node).rhs;

  // the temporary's precision follows the first buffer the expression reads,
  // defaulting to the written buffer
  BufferTable bufs = collect_buffers(p);
  Precision prec = Precision::f32;
  {
    std::vector<Access> reads;
    expr_collect_reads(matched, reads);
    const std::string* from = nullptr;
    if (!reads.empty())
      from = &reads[0].buffer;
    else if (auto* a = std::get_if<Stmt::Assign>(&s->node))
      from = &a->buffer;
    else if (auto* r = std::get_if<Stmt::Reduce>(&s->node))
      from = &r->buffer;
    if (from && bufs.find(*from)) prec = bufs.find(*from)->precision;
  }
  if (sched::all_symbols(p).count(new_name))
    fail(ErrKind::ValidationError, "bind_expr: name '" + new_name + "' already in use");
  BufferDecl tmp;
  tmp.name = new_name;
  tmp.precision = prec;

  Stmt::Ptr new_stmt;
  if (auto* a = std::get_if<Stmt::Assign>(&s->node))
    new_stmt = Stmt::assign(a->buffer, a->index, rebuild(a->value, 0));
  else {
    const auto& r = std::get<Stmt::Reduce>(s->node);
    new_stmt = Stmt::reduce(r.buffer, r.index, rebuild(r.value, 0));
  }
  Proc out = with_replaced(p, hit.path,
                           {Stmt::alloc(tmp), Stmt::assign(new_name, {}, matched), new_stmt});
  expect_well_formed(out, "bind_expr");
  return out;
}

// ---------------------------------------------------------------------------
// assign_to_reduce: rewrite `buf[i] = e` into `buf[i] = 0; buf[i] += e`,
// opening the statement to FMA-style replacement.

inline Proc assign_to_reduce(const Proc& p, const Cursor& c) {
  StmtPath path = resolve_cursor(p, c);
  const Stmt::Ptr& s = stmt_at(p, path);
  auto* a = std::get_if<Stmt::Assign>(&s->node);
  if (!a) fail(ErrKind::NoMatch, "assign_to_reduce: cursor must address an assignment");
  Proc out = with_replaced(p, path,
                           {Stmt::assign(a->buffer, a->index, Expr::cst(Rational(0))),
                            Stmt::reduce(a->buffer, a->index, a->value)});
  expect_well_formed(out, "assign_to_reduce");
  return out;
}

// ---------------------------------------------------------------------------
// unroll_loop: constant-bound loop becomes `bound` copies of its body with
// the variable substituted.

inline Proc unroll_loop(const Proc& p, const Cursor& c) {
  StmtPath path = resolve_cursor(p, c);
  const Stmt::Loop& loop = sched::loop_at(p, path, "unroll_loop");
  if (!loop.bound.is_constant())
    fail(ErrKind::NonConstantBound,
         "unroll_loop needs a constant bound, got " + affine_to_string(loop.bound));
  std::vector<Stmt::Ptr> replacement;
  for (long long i = 0; i < loop.bound.constant; ++i)
    for (const auto& s : loop.body)
      replacement.push_back(stmt_substituted(s, loop.var, AffineExpr::cst(i)));
  Proc out = with_replaced(p, path, std::move(replacement));
  expect_well_formed(out, "unroll_loop");
  return out;
}

// ---------------------------------------------------------------------------
// replace: match a loop nest against an instruction's semantic body (up to
// loop renaming, operand naming and affine index normalization) and swap in
// the call. Register-space parameters accept local allocations that are
// still addressable; their placement is finalized by set_memory and
// validated again at emission.

namespace sched {

struct MatchState {
  const TargetLibrary& lib;
  const InstrDef& instr;
  const Proc& proc;
  std::map<std::string, std::string> var_map;      // body loop var -> target var
  std::map<std::string, Window> bound;             // param -> window
  std::map<std::string, AffineExpr> lane_binding;  // lane param -> target affine

  [[noreturn]] void mismatch(const std::string& why) const {
    fail(ErrKind::PatternMismatch,
         "cannot replace with '" + instr.name + "': " + why + "\n--- instruction body:\n" +
             stmt_to_string(instr.body));
  }

  AffineExpr subst_body(const AffineExpr& e) const {
    AffineExpr out = AffineExpr::cst(e.constant);
    for (const auto& [sym, c] : e.terms) {
      auto it = var_map.find(sym);
      out += AffineExpr::sym(it == var_map.end() ? sym : it->second, c);
    }
    return out;
  }

  // Binds `param[body_idx]` against a concrete access `buffer[target_idx]`.
  void match_access(const std::string& param, const std::vector<AffineExpr>& body_idx,
                    const std::string& buffer, const std::vector<AffineExpr>& target_idx,
                    bool as_write) {
    const InstrParam* ip = instr.find_param(param);
    if (!ip) mismatch("body references unknown parameter '" + param + "'");
    const BufferDecl* decl = collect_buffers(proc).find(buffer);
    if (!decl) mismatch("target accesses unknown buffer '" + buffer + "'");

    // substitute matched loop vars; split off lane params
    std::set<std::string> mapped;  // target vars owned by the instruction loops
    for (const auto& [b, t] : var_map) mapped.insert(t);

    std::vector<AffineExpr> idx;
    std::vector<const std::string*> lane_of;  // lane param used by body coordinate, or null
    for (const auto& e : body_idx) {
      AffineExpr sub = AffineExpr::cst(e.constant);
      const std::string* lane = nullptr;
      for (const auto& [sym, c] : e.terms) {
        auto it = var_map.find(sym);
        if (it != var_map.end()) {
          sub += AffineExpr::sym(it->second, c);
        } else if (instr.find_param(sym) && instr.find_param(sym)->role == InstrParam::lane) {
          if (c != 1 || e.terms.size() != 1 || e.constant != 0)
            mismatch("lane parameters may only appear as a bare index");
          lane = &instr.find_param(sym)->name;
        } else {
          mismatch("unbound symbol '" + sym + "' in instruction body index");
        }
      }
      idx.push_back(sub);
      lane_of.push_back(lane);
    }

    Window w;
    w.buffer = buffer;
    // lane-indexed access: the window ranges over the buffer's innermost
    // (lane) dimension in full, and the lane expression is that coordinate
    if (body_idx.size() == 1 && lane_of[0] != nullptr) {
      if (target_idx.empty()) mismatch("lane-selected operand must be indexed");
      for (size_t d = 0; d + 1 < target_idx.size(); ++d) {
        for (const auto& [sym, c] : target_idx[d].terms)
          if (mapped.count(sym))
            mismatch("lane-selected operand varies with the matched loops");
        w.dims.push_back(WindowDim{target_idx[d], 1, true});
      }
      const AffineExpr& lane_expr = target_idx.back();
      for (const auto& [sym, c] : lane_expr.terms)
        if (mapped.count(sym)) mismatch("lane expression varies with the matched loops");
      long long lanes = ip->shape.empty() ? 0 : ip->shape[0];
      const AffineExpr& dim = decl->dims.back();
      if (!dim.is_constant() || dim.constant != lanes)
        mismatch("lane-selected operand's innermost dimension must be the lane count");
      w.dims.push_back(WindowDim{AffineExpr::cst(0), lanes, false});
      auto it = lane_binding.find(*lane_of[0]);
      if (it != lane_binding.end()) {
        if (it->second != lane_expr) mismatch("conflicting lane bindings");
      } else {
        lane_binding[*lane_of[0]] = lane_expr;
      }
    } else {
      // ordinary operand: order-preserving assignment of body coordinates to
      // the target coordinates that vary with the matched loops
      if (target_idx.size() < idx.size()) mismatch("operand rank too small");
      size_t r = 0;
      for (size_t d = 0; d < target_idx.size(); ++d) {
        AffineExpr moving = AffineExpr::cst(0);
        for (const auto& [sym, c] : target_idx[d].terms)
          if (mapped.count(sym)) moving += AffineExpr::sym(sym, c);
        AffineExpr want = r < idx.size() ? idx[r] : AffineExpr::cst(0);
        AffineExpr want_moving = AffineExpr::cst(0);
        for (const auto& [sym, c] : want.terms)
          if (mapped.count(sym)) want_moving += AffineExpr::sym(sym, c);
        if (r < idx.size() && moving == want_moving && !(moving == AffineExpr::cst(0))) {
          long long extent = r < ip->shape.size() ? ip->shape[r] : 1;
          w.dims.push_back(WindowDim{target_idx[d] - idx[r], extent, false});
          ++r;
        } else if (moving == AffineExpr::cst(0)) {
          w.dims.push_back(WindowDim{target_idx[d], 1, true});
        } else {
          mismatch("index '" + affine_to_string(target_idx[d]) +
                   "' does not line up with the instruction access pattern");
        }
      }
      if (r != idx.size()) mismatch("could not line up all instruction indices");
    }

    auto it = bound.find(param);
    if (it != bound.end()) {
      if (!(it->second == w)) mismatch("parameter '" + param + "' bound to differing windows");
    } else {
      bound[param] = w;
    }
    (void)as_write;
  }

  void match_value(const Expr::Ptr& body, const Expr::Ptr& target) {
    if (auto* bc = std::get_if<Expr::Const>(&body->node)) {
      auto* tc = std::get_if<Expr::Const>(&target->node);
      if (!tc || !(bc->value == tc->value)) mismatch("constant mismatch");
      return;
    }
    if (auto* br = std::get_if<Expr::Read>(&body->node)) {
      auto* tr = std::get_if<Expr::Read>(&target->node);
      if (!tr) mismatch("expected a read");
      match_access(br->buffer, br->index, tr->buffer, tr->index, false);
      return;
    }
    const auto& bb = std::get<Expr::Binary>(body->node);
    auto* tb = std::get_if<Expr::Binary>(&target->node);
    if (!tb || tb->op != bb.op) mismatch("operator mismatch");
    match_value(bb.lhs, tb->lhs);
    match_value(bb.rhs, tb->rhs);
  }

  void match_stmt(const Stmt::Ptr& body, const Stmt::Ptr& target) {
    if (auto* bl = std::get_if<Stmt::Loop>(&body->node)) {
      auto* tl = std::get_if<Stmt::Loop>(&target->node);
      if (!tl) mismatch("expected a loop around '" + bl->var + "'");
      if (!tl->bound.is_constant() || !bl->bound.is_constant() ||
          tl->bound.constant != bl->bound.constant)
        mismatch("loop bound " + affine_to_string(tl->bound) + " != " +
                 affine_to_string(bl->bound));
      if (bl->body.size() != tl->body.size()) mismatch("loop body sizes differ");
      var_map[bl->var] = tl->var;
      for (size_t i = 0; i < bl->body.size(); ++i) match_stmt(bl->body[i], tl->body[i]);
      return;
    }
    if (auto* ba = std::get_if<Stmt::Assign>(&body->node)) {
      auto* ta = std::get_if<Stmt::Assign>(&target->node);
      if (!ta) mismatch("expected an assignment");
      match_access(ba->buffer, ba->index, ta->buffer, ta->index, true);
      match_value(ba->value, ta->value);
      return;
    }
    if (auto* br = std::get_if<Stmt::Reduce>(&body->node)) {
      auto* tr = std::get_if<Stmt::Reduce>(&target->node);
      if (!tr) mismatch("expected a reduction");
      match_access(br->buffer, br->index, tr->buffer, tr->index, true);
      match_value(br->value, tr->value);
      return;
    }
    mismatch("unsupported statement in instruction body");
  }

  void check_types() {
    BufferTable bufs = collect_buffers(proc);
    for (const auto& ip : instr.params) {
      if (ip.role == InstrParam::lane) {
        if (!lane_binding.count(ip.name)) mismatch("lane parameter never bound");
        continue;
      }
      auto it = bound.find(ip.name);
      if (it == bound.end()) mismatch("parameter '" + ip.name + "' never bound");
      const Window& w = it->second;
      const BufferDecl* decl = bufs.find(w.buffer);
      if (decl->precision != ip.precision)
        fail(ErrKind::PrecisionMismatch, "operand '" + decl->name + "' is " +
                                             precision_name(decl->precision) + ", '" +
                                             instr.name + "' wants " +
                                             precision_name(ip.precision));
      if (w.shape() != std::vector<long long>(ip.shape.begin(), ip.shape.end()))
        mismatch("operand '" + decl->name + "' window shape mismatch");
      // contiguity: inside the outermost ranged dimension everything must
      // cover its full extent
      int star = -1;
      for (size_t d = 0; d < w.dims.size(); ++d)
        if (w.dims[d].extent > 1) {
          star = static_cast<int>(d);
          break;
        }
      if (star >= 0) {
        for (size_t d = static_cast<size_t>(star) + 1; d < w.dims.size(); ++d) {
          const AffineExpr& dim = decl->dims[d];
          if (!dim.is_constant() || dim.constant != w.dims[d].extent)
            mismatch("operand '" + decl->name + "' window is not contiguous");
        }
      }
      if (ip.memspace == "DRAM") {
        if (decl->memspace.kind != MemSpace::addressable)
          fail(ErrKind::MemSpaceMismatch,
               "operand '" + decl->name + "' must live in addressable memory");
      } else {
        const MemSpace* want = lib.find_space(ip.memspace);
        if (decl->memspace.kind == MemSpace::vector_register) {
          if (decl->memspace.name != want->name)
            fail(ErrKind::MemSpaceMismatch, "operand '" + decl->name + "' lives in " +
                                                decl->memspace.name + ", '" + instr.name +
                                                "' wants " + want->name);
        } else {
          // placement still pending: only local allocations may be promoted
          // later by set_memory; fixed arguments cannot
          auto a = bufs.is_alloc.find(decl->name);
          if (a == bufs.is_alloc.end() || !a->second)
            mismatch("operand '" + decl->name +
                     "' is a fixed argument where a register operand is expected");
        }
      }
    }
  }
};

}  // namespace sched

inline Proc replace(const Proc& p, const Cursor& block, const TargetLibrary& lib,
                    const std::string& instr_name) {
  const InstrDef* instr = lib.find_instr(instr_name);
  if (!instr) fail(ErrKind::UnknownInstr, "'" + instr_name + "' not in target " + lib.name);
  StmtPath path = resolve_cursor(p, block);
  sched::MatchState m{lib, *instr, p, {}, {}, {}};
  m.match_stmt(instr->body, stmt_at(p, path));
  m.check_types();

  Stmt::InstrCall call;
  call.instr = instr_name;
  for (const auto& ip : instr->params) {
    if (ip.role == InstrParam::lane) {
      call.lane_args.push_back({ip.name, m.lane_binding.at(ip.name)});
      continue;
    }
    Stmt::Operand op;
    op.param = ip.name;
    op.window = m.bound.at(ip.name);
    op.is_write = ip.role == InstrParam::dst;
    op.is_reduce = op.is_write && instr->writes_by_reduce(ip.name);
    call.operands.push_back(std::move(op));
  }
  Proc out = with_replaced(p, path, {Stmt::instr_call(std::move(call))});
  expect_well_formed(out, "replace");
  return out;
}

// ---------------------------------------------------------------------------
// set_memory / set_precision: update placement or precision metadata and
// re-validate the lane rule plus every instruction call that touches the
// buffer.

namespace sched {

inline void revalidate_calls(const Proc& p, const TargetLibrary& lib, const std::string& buffer) {
  BufferTable bufs = collect_buffers(p);
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath&) {
    auto* call = std::get_if<Stmt::InstrCall>(&s->node);
    if (!call) return true;
    const InstrDef* instr = lib.find_instr(call->instr);
    if (!instr) fail(ErrKind::UnknownInstr, "'" + call->instr + "'");
    for (const auto& op : call->operands) {
      if (op.window.buffer != buffer) continue;
      const InstrParam* ip = instr->find_param(op.param);
      const BufferDecl* decl = bufs.find(op.window.buffer);
      if (decl->precision != ip->precision)
        fail(ErrKind::InstrTypeMismatch, "'" + call->instr + "' operand '" + decl->name +
                                             "' no longer type-checks: precision");
      if (ip->memspace != "DRAM" && decl->memspace.kind == MemSpace::vector_register &&
          decl->memspace.name != ip->memspace)
        fail(ErrKind::InstrTypeMismatch, "'" + call->instr + "' operand '" + decl->name +
                                             "' no longer type-checks: memory space");
      if (ip->memspace == "DRAM" && decl->memspace.kind != MemSpace::addressable)
        fail(ErrKind::InstrTypeMismatch, "'" + call->instr + "' operand '" + decl->name +
                                             "' no longer type-checks: needs addressable");
    }
    return true;
  });
}

}  // namespace sched

inline Proc set_memory(const Proc& p, const Cursor& alloc, const MemSpace& space,
                       const TargetLibrary& lib) {
  StmtPath path = resolve_cursor(p, alloc);
  const Stmt::Ptr& s = stmt_at(p, path);
  auto* al = std::get_if<Stmt::Alloc>(&s->node);
  if (!al) fail(ErrKind::NotAnAlloc, "set_memory: cursor must address an allocation");
  BufferDecl d = al->decl;
  if (space.kind == MemSpace::vector_register) {
    if (d.dims.empty() || !d.dims.back().is_constant() ||
        d.dims.back().constant != space.lanes)
      fail(ErrKind::LaneRuleViolation, "innermost dimension of '" + d.name + "' must equal " +
                                           std::to_string(space.lanes) + " lanes");
    if (d.precision != space.lane_precision)
      fail(ErrKind::LaneRuleViolation,
           "precision of '" + d.name + "' does not match space " + space.name);
  }
  d.memspace = space;
  Proc out = with_replaced(p, path, {Stmt::alloc(d)});
  sched::revalidate_calls(out, lib, d.name);
  expect_well_formed(out, "set_memory");
  return out;
}

inline Proc set_precision(const Proc& p, const Cursor& alloc_or_arg, Precision prec,
                          const TargetLibrary& lib) {
  // try an allocation first; fall back to an argument of the same name
  std::vector<StmtPath> hits = find_all(p, alloc_or_arg.pattern);
  if (!hits.empty()) {
    StmtPath path = resolve_cursor(p, alloc_or_arg);
    const Stmt::Ptr& s = stmt_at(p, path);
    auto* al = std::get_if<Stmt::Alloc>(&s->node);
    if (!al) fail(ErrKind::NotAnAlloc, "set_precision: cursor must address an allocation");
    BufferDecl d = al->decl;
    d.precision = prec;
    if (d.memspace.kind == MemSpace::vector_register && d.memspace.lane_precision != prec)
      fail(ErrKind::LaneRuleViolation,
           "precision of '" + d.name + "' does not match space " + d.memspace.name);
    Proc out = with_replaced(p, path, {Stmt::alloc(d)});
    sched::revalidate_calls(out, lib, d.name);
    expect_well_formed(out, "set_precision");
    return out;
  }
  cursors::ParsedPattern pat = cursors::parse_pattern(alloc_or_arg.pattern);
  if (pat.kind != cursors::ParsedPattern::alloc_of)
    fail(ErrKind::NoMatch, "set_precision: pattern matches nothing");
  Proc out = p;
  bool found = false;
  for (auto& a : out.args)
    if (a.name == pat.name) {
      a.precision = prec;
      found = true;
    }
  if (!found) fail(ErrKind::NoMatch, "set_precision: no allocation or argument '" + pat.name + "'");
  sched::revalidate_calls(out, lib, pat.name);
  expect_well_formed(out, "set_precision");
  return out;
}

}  // namespace ukgen
