#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ukgen/ir.hpp"
#include "ukgen/printer.hpp"

namespace ukgen {

// Structural and bounds diagnostics. An empty result means the proc is well
// formed. The bounds check is conservative: it only accepts an access it can
// prove in range for every admissible size-parameter assignment (>= 1), so
// it may reject exotic-but-safe programs, never the reverse.

struct Diagnostic {
  std::string message;
};

namespace wf {

struct Checker {
  const Proc& p;
  std::vector<Diagnostic>& out;

  void report(const std::string& msg) { out.push_back(Diagnostic{msg}); }

  void check_decl_shape(const BufferDecl& d, const SymEnv& env) {
    for (const auto& dim : d.dims) {
      for (const auto& [sym, _] : dim.terms) {
        auto it = env.find(sym);
        if (it == env.end() || it->second.kind != SymRange::size_param)
          report("buffer '" + d.name + "' dimension references non-size symbol '" + sym + "'");
      }
      if (!provably_nonnegative(dim - AffineExpr::cst(1), env))
        report("buffer '" + d.name + "' dimension " + affine_to_string(dim) +
               " is not provably positive");
    }
    if (d.memspace.kind == MemSpace::vector_register) {
      if (d.dims.empty()) {
        report("vector-register buffer '" + d.name + "' must have at least one dimension");
      } else {
        const AffineExpr& inner = d.dims.back();
        if (!inner.is_constant() || inner.constant != d.memspace.lanes)
          report("vector-register buffer '" + d.name + "' innermost dimension must equal " +
                 std::to_string(d.memspace.lanes) + " lanes, got " + affine_to_string(inner));
      }
      if (d.precision != d.memspace.lane_precision)
        report("vector-register buffer '" + d.name + "' precision does not match the space's lane precision");
    }
  }

  void check_affine_symbols(const AffineExpr& e, const SymEnv& env, const std::string& where) {
    for (const auto& [sym, _] : e.terms) {
      if (!env.count(sym)) report("unbound symbol '" + sym + "' in " + where);
    }
  }

  void check_access(const std::string& buffer, const std::vector<AffineExpr>& index,
                    bool is_write, const std::map<std::string, BufferDecl>& scope,
                    const SymEnv& env) {
    auto it = scope.find(buffer);
    if (it == scope.end()) {
      report("access to unknown buffer '" + buffer + "'");
      return;
    }
    const BufferDecl& d = it->second;
    if (is_write && d.read_only) report("write to read-only buffer '" + buffer + "'");
    if (static_cast<int>(index.size()) != d.rank()) {
      report("access to '" + buffer + "' has arity " + std::to_string(index.size()) +
             ", buffer rank is " + std::to_string(d.rank()));
      return;
    }
    for (size_t i = 0; i < index.size(); ++i) {
      check_affine_symbols(index[i], env, "index of '" + buffer + "'");
      if (!provably_in_range(index[i], d.dims[i], env))
        report("index " + affine_to_string(index[i]) + " of '" + buffer +
               "' not provably within [0, " + affine_to_string(d.dims[i]) + ")");
    }
  }

  void check_window(const Window& w, const std::map<std::string, BufferDecl>& scope,
                    const SymEnv& env) {
    auto it = scope.find(w.buffer);
    if (it == scope.end()) {
      report("window over unknown buffer '" + w.buffer + "'");
      return;
    }
    const BufferDecl& d = it->second;
    if (static_cast<int>(w.dims.size()) != d.rank()) {
      report("window over '" + w.buffer + "' has arity " + std::to_string(w.dims.size()) +
             ", buffer rank is " + std::to_string(d.rank()));
      return;
    }
    for (size_t i = 0; i < w.dims.size(); ++i) {
      const WindowDim& wd = w.dims[i];
      check_affine_symbols(wd.base, env, "window base of '" + w.buffer + "'");
      if (wd.extent < 1) report("window extent must be at least 1");
      AffineExpr last = wd.base + AffineExpr::cst(wd.extent - 1);
      if (!provably_in_range(last, d.dims[i], env) || !provably_nonnegative(wd.base, env))
        report("window [" + affine_to_string(wd.base) + " .. +" + std::to_string(wd.extent) +
               ") of '" + w.buffer + "' not provably within dimension " +
               affine_to_string(d.dims[i]));
    }
    // Contiguity: everything inside the outermost ranged dimension must
    // cover its full extent, so the selected cells form one row-major run.
    int star = -1;
    for (size_t i = 0; i < w.dims.size(); ++i)
      if (w.dims[i].extent > 1) {
        star = static_cast<int>(i);
        break;
      }
    if (star >= 0) {
      for (size_t i = static_cast<size_t>(star) + 1; i < w.dims.size(); ++i) {
        const AffineExpr& dim = d.dims[i];
        if (!dim.is_constant() || dim.constant != w.dims[i].extent)
          report("window over '" + w.buffer + "' is not contiguous: dimension " +
                 std::to_string(i) + " is partial inside a ranged dimension");
      }
    }
  }

  void check_block(const std::vector<Stmt::Ptr>& body, std::map<std::string, BufferDecl> scope,
                   SymEnv env, std::set<std::string>& all_names) {
    for (const auto& s : body) {
      if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
        if (env.count(loop->var))
          report("loop variable '" + loop->var + "' shadows an enclosing symbol");
        check_affine_symbols(loop->bound, env, "bound of loop '" + loop->var + "'");
        for (const auto& [sym, _] : loop->bound.terms) {
          auto it = env.find(sym);
          if (it != env.end() && it->second.kind != SymRange::size_param)
            report("bound of loop '" + loop->var + "' references loop variable '" + sym + "'");
        }
        SymEnv inner = env;
        inner[loop->var] = SymRange{SymRange::loop, loop->bound};
        check_block(loop->body, scope, std::move(inner), all_names);
        continue;
      }
      if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
        check_access(a->buffer, a->index, true, scope, env);
        check_value(a->value, scope, env);
        continue;
      }
      if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
        check_access(r->buffer, r->index, true, scope, env);
        check_value(r->value, scope, env);
        continue;
      }
      if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
        if (!all_names.insert(al->decl.name).second)
          report("duplicate buffer name '" + al->decl.name + "'");
        if (env.count(al->decl.name))
          report("allocation '" + al->decl.name + "' shadows a symbol");
        check_decl_shape(al->decl, env);
        if (al->decl.read_only) report("allocation '" + al->decl.name + "' cannot be read-only");
        scope[al->decl.name] = al->decl;  // visible for the rest of this list
        continue;
      }
      const auto& call = std::get<Stmt::InstrCall>(s->node);
      for (const auto& op : call.operands) {
        check_window(op.window, scope, env);
        auto it = scope.find(op.window.buffer);
        if (it != scope.end() && op.is_write && it->second.read_only)
          report("instruction '" + call.instr + "' writes read-only buffer '" +
                 op.window.buffer + "'");
      }
      for (const auto& [name, e] : call.lane_args)
        check_affine_symbols(e, env, "lane argument of '" + call.instr + "'");
    }
  }

  void check_value(const Expr::Ptr& e, const std::map<std::string, BufferDecl>& scope,
                   const SymEnv& env) {
    if (auto* r = std::get_if<Expr::Read>(&e->node)) {
      check_access(r->buffer, r->index, false, scope, env);
    } else if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
      check_value(b->lhs, scope, env);
      check_value(b->rhs, scope, env);
    }
  }
};

}  // namespace wf

inline std::vector<Diagnostic> well_formed(const Proc& p) {
  std::vector<Diagnostic> out;
  wf::Checker c{p, out};

  std::set<std::string> names;
  SymEnv env;
  for (const auto& sp : p.size_params) {
    if (!names.insert(sp).second) c.report("duplicate size parameter '" + sp + "'");
    env[sp] = SymRange{SymRange::size_param, {}};
  }
  std::map<std::string, BufferDecl> scope;
  for (const auto& a : p.args) {
    if (!names.insert(a.name).second) c.report("duplicate argument name '" + a.name + "'");
    c.check_decl_shape(a, env);
    scope[a.name] = a;
  }
  c.check_block(p.body, std::move(scope), std::move(env), names);
  return out;
}

inline std::string diagnostics_to_string(const std::vector<Diagnostic>& ds) {
  std::ostringstream os;
  for (const auto& d : ds) os << d.message << "\n";
  return os.str();
}

// Throwing convenience for internal post-checks; rewrites must never return
// a malformed proc.
inline void expect_well_formed(const Proc& p, const std::string& who) {
  auto ds = well_formed(p);
  if (!ds.empty())
    fail(ErrKind::Internal, who + " produced a malformed proc:\n" + diagnostics_to_string(ds));
}

}  // namespace ukgen
