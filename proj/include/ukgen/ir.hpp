#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ukgen/affine.hpp"
#include "ukgen/errors.hpp"

namespace ukgen {

enum class Precision { f32, f16 };

inline int byte_width(Precision p) { return p == Precision::f32 ? 4 : 2; }
inline const char* precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f16"; }

// A memory space is either plain addressable storage (DRAM) or a bank of
// fixed-width vector registers. Vector spaces constrain the innermost
// dimension of every allocation placed in them to exactly `lanes`.
struct MemSpace {
  std::string name;
  enum Kind { addressable, vector_register } kind = addressable;
  int lanes = 0;                              // vector_register only
  Precision lane_precision = Precision::f32;  // vector_register only
  std::string c_type;                         // register C type, e.g. float32x4_t

  static MemSpace dram() { return MemSpace{"DRAM", addressable, 0, Precision::f32, ""}; }

  friend bool operator==(const MemSpace& a, const MemSpace& b) {
    return a.name == b.name && a.kind == b.kind && a.lanes == b.lanes &&
           a.lane_precision == b.lane_precision && a.c_type == b.c_type;
  }
  friend bool operator!=(const MemSpace& a, const MemSpace& b) { return !(a == b); }
};

// Buffer declaration, used both for proc arguments and local allocations.
// Scalars (alpha, beta) are rank-0 read-only buffers so a single access
// mechanism serves every operand.
struct BufferDecl {
  std::string name;
  std::vector<AffineExpr> dims;  // empty = rank-0 scalar
  Precision precision = Precision::f32;
  MemSpace memspace = MemSpace::dram();
  bool read_only = false;

  int rank() const { return static_cast<int>(dims.size()); }

  friend bool operator==(const BufferDecl& a, const BufferDecl& b) {
    return a.name == b.name && a.dims == b.dims && a.precision == b.precision &&
           a.memspace == b.memspace && a.read_only == b.read_only;
  }
  friend bool operator!=(const BufferDecl& a, const BufferDecl& b) { return !(a == b); }
};

// Value expressions. Indices and loop bounds are not Exprs: they live in the
// canonical AffineExpr form, which is where loop variables and size
// parameters appear.
struct Expr {
  using Ptr = std::shared_ptr<const Expr>;

  struct Const {
    Rational value;
  };
  struct Read {
    std::string buffer;
    std::vector<AffineExpr> index;
  };
  struct Binary {
    char op;  // '+', '-', '*'
    Ptr lhs, rhs;
  };

  std::variant<Const, Read, Binary> node;

  static Ptr cst(Rational v) { return std::make_shared<Expr>(Expr{Const{v}}); }
  static Ptr read(std::string buffer, std::vector<AffineExpr> index) {
    return std::make_shared<Expr>(Expr{Read{std::move(buffer), std::move(index)}});
  }
  static Ptr binary(char op, Ptr lhs, Ptr rhs) {
    return std::make_shared<Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
  }
};

inline bool expr_equal(const Expr::Ptr& a, const Expr::Ptr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (auto* ca = std::get_if<Expr::Const>(&a->node)) {
    return ca->value == std::get<Expr::Const>(b->node).value;
  }
  if (auto* ra = std::get_if<Expr::Read>(&a->node)) {
    const auto& rb = std::get<Expr::Read>(b->node);
    return ra->buffer == rb.buffer && ra->index == rb.index;
  }
  const auto& ba = std::get<Expr::Binary>(a->node);
  const auto& bb = std::get<Expr::Binary>(b->node);
  return ba.op == bb.op && expr_equal(ba.lhs, bb.lhs) && expr_equal(ba.rhs, bb.rhs);
}

// One dimension of a contiguous buffer window: a point index (extent 1 that
// does not contribute to the window's rank) or a range [base, base+extent).
struct WindowDim {
  AffineExpr base;
  long long extent = 1;
  bool is_point = true;

  friend bool operator==(const WindowDim& a, const WindowDim& b) {
    return a.base == b.base && a.extent == b.extent && a.is_point == b.is_point;
  }
  friend bool operator!=(const WindowDim& a, const WindowDim& b) { return !(a == b); }
};

struct Window {
  std::string buffer;
  std::vector<WindowDim> dims;

  int rank() const {
    int r = 0;
    for (const auto& d : dims)
      if (!d.is_point) ++r;
    return r;
  }
  std::vector<long long> shape() const {
    std::vector<long long> s;
    for (const auto& d : dims)
      if (!d.is_point) s.push_back(d.extent);
    return s;
  }

  friend bool operator==(const Window& a, const Window& b) {
    return a.buffer == b.buffer && a.dims == b.dims;
  }
  friend bool operator!=(const Window& a, const Window& b) { return !(a == b); }
};

struct Stmt {
  using Ptr = std::shared_ptr<const Stmt>;

  struct Loop {
    std::string var;
    AffineExpr bound;  // iterates over [0, bound); bound is affine over size params
    std::vector<Ptr> body;
  };
  struct Assign {
    std::string buffer;
    std::vector<AffineExpr> index;
    Expr::Ptr value;
  };
  struct Reduce {  // buffer[index] += value
    std::string buffer;
    std::vector<AffineExpr> index;
    Expr::Ptr value;
  };
  struct Alloc {  // scopes over the remainder of the enclosing statement list
    BufferDecl decl;
  };
  struct Operand {
    std::string param;  // instruction parameter this window binds
    Window window;
    bool is_write = false;
    bool is_reduce = false;  // write is an accumulation in the semantic body
  };
  struct InstrCall {
    std::string instr;
    std::vector<Operand> operands;
    std::vector<std::pair<std::string, AffineExpr>> lane_args;  // e.g. lane=jtt
  };

  std::variant<Loop, Assign, Reduce, Alloc, InstrCall> node;

  static Ptr loop(std::string var, AffineExpr bound, std::vector<Ptr> body) {
    return std::make_shared<Stmt>(Stmt{Loop{std::move(var), std::move(bound), std::move(body)}});
  }
  static Ptr assign(std::string buffer, std::vector<AffineExpr> index, Expr::Ptr value) {
    return std::make_shared<Stmt>(
        Stmt{Assign{std::move(buffer), std::move(index), std::move(value)}});
  }
  static Ptr reduce(std::string buffer, std::vector<AffineExpr> index, Expr::Ptr value) {
    return std::make_shared<Stmt>(
        Stmt{Reduce{std::move(buffer), std::move(index), std::move(value)}});
  }
  static Ptr alloc(BufferDecl decl) { return std::make_shared<Stmt>(Stmt{Alloc{std::move(decl)}}); }
  static Ptr instr_call(InstrCall call) { return std::make_shared<Stmt>(Stmt{std::move(call)}); }
};

inline bool stmt_equal(const Stmt::Ptr& a, const Stmt::Ptr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (auto* la = std::get_if<Stmt::Loop>(&a->node)) {
    const auto& lb = std::get<Stmt::Loop>(b->node);
    if (la->var != lb.var || la->bound != lb.bound || la->body.size() != lb.body.size())
      return false;
    for (size_t i = 0; i < la->body.size(); ++i)
      if (!stmt_equal(la->body[i], lb.body[i])) return false;
    return true;
  }
  if (auto* sa = std::get_if<Stmt::Assign>(&a->node)) {
    const auto& sb = std::get<Stmt::Assign>(b->node);
    return sa->buffer == sb.buffer && sa->index == sb.index && expr_equal(sa->value, sb.value);
  }
  if (auto* ra = std::get_if<Stmt::Reduce>(&a->node)) {
    const auto& rb = std::get<Stmt::Reduce>(b->node);
    return ra->buffer == rb.buffer && ra->index == rb.index && expr_equal(ra->value, rb.value);
  }
  if (auto* aa = std::get_if<Stmt::Alloc>(&a->node)) {
    return aa->decl == std::get<Stmt::Alloc>(b->node).decl;
  }
  const auto& ca = std::get<Stmt::InstrCall>(a->node);
  const auto& cb = std::get<Stmt::InstrCall>(b->node);
  if (ca.instr != cb.instr || ca.operands.size() != cb.operands.size() ||
      ca.lane_args != cb.lane_args)
    return false;
  for (size_t i = 0; i < ca.operands.size(); ++i) {
    if (ca.operands[i].param != cb.operands[i].param ||
        ca.operands[i].window != cb.operands[i].window ||
        ca.operands[i].is_write != cb.operands[i].is_write ||
        ca.operands[i].is_reduce != cb.operands[i].is_reduce)
      return false;
  }
  return true;
}

struct Proc {
  std::string name;
  std::vector<std::string> size_params;
  std::vector<BufferDecl> args;
  std::vector<Stmt::Ptr> body;
};

inline bool proc_equal(const Proc& a, const Proc& b) {
  if (a.name != b.name || a.size_params != b.size_params || a.args != b.args ||
      a.body.size() != b.body.size())
    return false;
  for (size_t i = 0; i < a.body.size(); ++i)
    if (!stmt_equal(a.body[i], b.body[i])) return false;
  return true;
}

// Same bodies and signatures; only the proc name may differ.
inline bool proc_equal_modulo_name(const Proc& a, const Proc& b) {
  Proc t = a;
  t.name = b.name;
  return proc_equal(t, b);
}

// ---------------------------------------------------------------------------
// Tree navigation. A statement is addressed by the chain of child indices
// from the proc body down through loop bodies.

using StmtPath = std::vector<int>;

inline const Stmt::Ptr& stmt_at(const Proc& p, const StmtPath& path) {
  const std::vector<Stmt::Ptr>* list = &p.body;
  const Stmt::Ptr* cur = nullptr;
  for (size_t d = 0; d < path.size(); ++d) {
    int i = path[d];
    if (i < 0 || static_cast<size_t>(i) >= list->size())
      fail(ErrKind::Internal, "statement path out of range");
    cur = &(*list)[i];
    if (d + 1 < path.size()) {
      auto* loop = std::get_if<Stmt::Loop>(&(*cur)->node);
      if (!loop) fail(ErrKind::Internal, "statement path descends into a non-loop");
      list = &loop->body;
    }
  }
  if (!cur) fail(ErrKind::Internal, "empty statement path");
  return *cur;
}

namespace detail {

using ListEdit = std::function<void(std::vector<Stmt::Ptr>&, int)>;

inline std::vector<Stmt::Ptr> edit_list(const std::vector<Stmt::Ptr>& list, const StmtPath& path,
                                        size_t depth, const ListEdit& edit) {
  std::vector<Stmt::Ptr> out = list;
  int i = path[depth];
  if (i < 0 || static_cast<size_t>(i) >= list.size())
    fail(ErrKind::Internal, "statement path out of range");
  if (depth + 1 == path.size()) {
    edit(out, i);
    return out;
  }
  auto* loop = std::get_if<Stmt::Loop>(&list[i]->node);
  if (!loop) fail(ErrKind::Internal, "statement path descends into a non-loop");
  Stmt::Loop copy = *loop;
  copy.body = edit_list(loop->body, path, depth + 1, edit);
  out[i] = Stmt::loop(copy.var, copy.bound, copy.body);
  return out;
}

}  // namespace detail

// Replaces the addressed statement with a (possibly empty) list of statements.
inline Proc with_replaced(const Proc& p, const StmtPath& path,
                          std::vector<Stmt::Ptr> replacement) {
  Proc out = p;
  out.body = detail::edit_list(p.body, path, 0, [&](std::vector<Stmt::Ptr>& list, int i) {
    list.erase(list.begin() + i);
    list.insert(list.begin() + i, replacement.begin(), replacement.end());
  });
  return out;
}

// Inserts statements as siblings before or after the addressed statement.
inline Proc with_inserted(const Proc& p, const StmtPath& path, std::vector<Stmt::Ptr> stmts,
                          bool before) {
  Proc out = p;
  out.body = detail::edit_list(p.body, path, 0, [&](std::vector<Stmt::Ptr>& list, int i) {
    list.insert(list.begin() + i + (before ? 0 : 1), stmts.begin(), stmts.end());
  });
  return out;
}

// Pre-order traversal over all statements; the callback may stop the walk by
// returning false.
inline void walk_stmts(const std::vector<Stmt::Ptr>& body, StmtPath& path,
                       const std::function<bool(const Stmt::Ptr&, const StmtPath&)>& fn) {
  for (size_t i = 0; i < body.size(); ++i) {
    path.push_back(static_cast<int>(i));
    if (!fn(body[i], path)) {
      path.pop_back();
      return;
    }
    if (auto* loop = std::get_if<Stmt::Loop>(&body[i]->node)) walk_stmts(loop->body, path, fn);
    path.pop_back();
  }
}

inline void walk_stmts(const Proc& p,
                       const std::function<bool(const Stmt::Ptr&, const StmtPath&)>& fn) {
  StmtPath path;
  walk_stmts(p.body, path, fn);
}

// ---------------------------------------------------------------------------
// Symbol and buffer lookup

// Buffer names are unique across args and allocs of a well-formed proc, so a
// flat table suffices.
struct BufferTable {
  std::map<std::string, BufferDecl> decls;
  std::map<std::string, bool> is_alloc;

  const BufferDecl* find(const std::string& name) const {
    auto it = decls.find(name);
    return it == decls.end() ? nullptr : &it->second;
  }
};

inline BufferTable collect_buffers(const Proc& p) {
  BufferTable t;
  for (const auto& a : p.args) {
    t.decls[a.name] = a;
    t.is_alloc[a.name] = false;
  }
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath&) {
    if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
      t.decls[al->decl.name] = al->decl;
      t.is_alloc[al->decl.name] = true;
    }
    return true;
  });
  return t;
}

// Environment of size params plus the loops strictly enclosing `path`
// (i.e. the loops you are inside when standing at that statement).
inline SymEnv sym_env_at(const Proc& p, const StmtPath& path) {
  SymEnv env;
  for (const auto& sp : p.size_params) env[sp] = SymRange{SymRange::size_param, {}};
  const std::vector<Stmt::Ptr>* list = &p.body;
  for (size_t d = 0; d + 1 < path.size(); ++d) {
    const Stmt::Ptr& s = (*list)[path[d]];
    auto* loop = std::get_if<Stmt::Loop>(&s->node);
    if (!loop) fail(ErrKind::Internal, "statement path descends into a non-loop");
    env[loop->var] = SymRange{SymRange::loop, loop->bound};
    list = &loop->body;
  }
  return env;
}

// ---------------------------------------------------------------------------
// Symbol substitution (loop variable := affine expression)

inline Expr::Ptr expr_substituted(const Expr::Ptr& e, const std::string& name,
                                  const AffineExpr& repl) {
  if (auto* r = std::get_if<Expr::Read>(&e->node)) {
    bool touched = false;
    std::vector<AffineExpr> idx = r->index;
    for (auto& a : idx) {
      if (a.references(name)) {
        a = a.substituted(name, repl);
        touched = true;
      }
    }
    return touched ? Expr::read(r->buffer, std::move(idx)) : e;
  }
  if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
    Expr::Ptr lhs = expr_substituted(b->lhs, name, repl);
    Expr::Ptr rhs = expr_substituted(b->rhs, name, repl);
    return (lhs == b->lhs && rhs == b->rhs) ? e : Expr::binary(b->op, lhs, rhs);
  }
  return e;
}

inline Stmt::Ptr stmt_substituted(const Stmt::Ptr& s, const std::string& name,
                                  const AffineExpr& repl) {
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    std::vector<Stmt::Ptr> body;
    body.reserve(loop->body.size());
    for (const auto& c : loop->body) body.push_back(stmt_substituted(c, name, repl));
    return Stmt::loop(loop->var, loop->bound.substituted(name, repl), std::move(body));
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    std::vector<AffineExpr> idx = a->index;
    for (auto& x : idx) x = x.substituted(name, repl);
    return Stmt::assign(a->buffer, std::move(idx), expr_substituted(a->value, name, repl));
  }
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
    std::vector<AffineExpr> idx = r->index;
    for (auto& x : idx) x = x.substituted(name, repl);
    return Stmt::reduce(r->buffer, std::move(idx), expr_substituted(r->value, name, repl));
  }
  if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
    BufferDecl d = al->decl;
    for (auto& x : d.dims) x = x.substituted(name, repl);
    return Stmt::alloc(std::move(d));
  }
  Stmt::InstrCall call = std::get<Stmt::InstrCall>(s->node);
  for (auto& op : call.operands)
    for (auto& d : op.window.dims) d.base = d.base.substituted(name, repl);
  for (auto& [n, e] : call.lane_args) e = e.substituted(name, repl);
  return Stmt::instr_call(std::move(call));
}

// ---------------------------------------------------------------------------
// Symbol usage

inline void expr_collect_symbols(const Expr::Ptr& e, std::map<std::string, int>& out) {
  if (auto* r = std::get_if<Expr::Read>(&e->node)) {
    for (const auto& a : r->index)
      for (const auto& [s, _] : a.terms) out[s]++;
  } else if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
    expr_collect_symbols(b->lhs, out);
    expr_collect_symbols(b->rhs, out);
  }
}

// Symbols referenced by a statement subtree, not counting variables bound by
// loops inside the subtree itself.
inline void stmt_free_symbols(const Stmt::Ptr& s, std::map<std::string, int>& out) {
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    std::map<std::string, int> inner;
    for (const auto& [sym, _] : loop->bound.terms) inner[sym]++;
    for (const auto& c : loop->body) stmt_free_symbols(c, inner);
    inner.erase(loop->var);
    for (const auto& [sym, n] : inner) out[sym] += n;
    return;
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    for (const auto& x : a->index)
      for (const auto& [sym, _] : x.terms) out[sym]++;
    expr_collect_symbols(a->value, out);
    return;
  }
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
    for (const auto& x : r->index)
      for (const auto& [sym, _] : x.terms) out[sym]++;
    expr_collect_symbols(r->value, out);
    return;
  }
  if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
    for (const auto& x : al->decl.dims)
      for (const auto& [sym, _] : x.terms) out[sym]++;
    return;
  }
  const auto& call = std::get<Stmt::InstrCall>(s->node);
  for (const auto& op : call.operands)
    for (const auto& d : op.window.dims)
      for (const auto& [sym, _] : d.base.terms) out[sym]++;
  for (const auto& [n, e] : call.lane_args)
    for (const auto& [sym, _] : e.terms) out[sym]++;
}

inline bool stmt_references_symbol(const Stmt::Ptr& s, const std::string& name) {
  std::map<std::string, int> syms;
  stmt_free_symbols(s, syms);
  return syms.count(name) != 0;
}

// ---------------------------------------------------------------------------
// Access analysis

// One buffer access with affine indices. Window range dimensions appear as
// synthetic symbols "$w<n>" whose ranges the caller receives through `env`.
struct Access {
  std::string buffer;
  std::vector<AffineExpr> index;
  bool is_write = false;
  bool is_reduce = false;
};

inline void expr_collect_reads(const Expr::Ptr& e, std::vector<Access>& out) {
  if (auto* r = std::get_if<Expr::Read>(&e->node)) {
    out.push_back(Access{r->buffer, r->index, false, false});
  } else if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
    expr_collect_reads(b->lhs, out);
    expr_collect_reads(b->rhs, out);
  }
}

inline void collect_accesses(const Stmt::Ptr& s, std::vector<Access>& out, SymEnv& env,
                             int& synth_counter) {
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    env[loop->var] = SymRange{SymRange::loop, loop->bound};
    for (const auto& c : loop->body) collect_accesses(c, out, env, synth_counter);
    return;
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    out.push_back(Access{a->buffer, a->index, true, false});
    expr_collect_reads(a->value, out);
    return;
  }
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
    out.push_back(Access{r->buffer, r->index, true, true});
    expr_collect_reads(r->value, out);
    return;
  }
  if (std::get_if<Stmt::Alloc>(&s->node)) return;
  const auto& call = std::get<Stmt::InstrCall>(s->node);
  for (const auto& op : call.operands) {
    Access acc;
    acc.buffer = op.window.buffer;
    acc.is_write = op.is_write;
    acc.is_reduce = op.is_reduce;
    for (const auto& d : op.window.dims) {
      if (d.is_point) {
        acc.index.push_back(d.base);
      } else {
        std::string w = "$w" + std::to_string(synth_counter++);
        env[w] = SymRange{SymRange::lane, AffineExpr::cst(d.extent)};
        acc.index.push_back(d.base + AffineExpr::sym(w));
      }
    }
    out.push_back(std::move(acc));
  }
}

}  // namespace ukgen
