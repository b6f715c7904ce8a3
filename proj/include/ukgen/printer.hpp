#pragma once

#include <sstream>
#include <string>

#include "ukgen/ir.hpp"

namespace ukgen {

// Deterministic textual IR. The grammar is documented in docs/ir_format.md;
// parse(pretty_print(p)) reproduces p structurally.

inline std::string affine_to_string(const AffineExpr& e) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [sym, coeff] : e.terms) {
    long long c = coeff;
    if (first) {
      if (c < 0) {
        os << "-";
        c = -c;
      }
    } else {
      os << (c < 0 ? " - " : " + ");
      if (c < 0) c = -c;
    }
    if (c != 1) os << c << " * ";
    os << sym;
    first = false;
  }
  if (first) {
    os << e.constant;
  } else if (e.constant != 0) {
    os << (e.constant < 0 ? " - " : " + ")
       << (e.constant < 0 ? -e.constant : e.constant);
  }
  return os.str();
}

inline std::string rational_to_string(const Rational& r) {
  std::ostringstream os;
  os << r.num;
  if (r.den != 1) os << "/" << r.den;
  return os.str();
}

namespace detail {

inline void print_index_list(std::ostringstream& os, const std::vector<AffineExpr>& idx) {
  os << "[";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) os << ", ";
    os << affine_to_string(idx[i]);
  }
  os << "]";
}

// precedence: 0 = additive context, 1 = multiplicative context
inline void print_expr(std::ostringstream& os, const Expr::Ptr& e, int context) {
  if (auto* c = std::get_if<Expr::Const>(&e->node)) {
    os << rational_to_string(c->value);
    return;
  }
  if (auto* r = std::get_if<Expr::Read>(&e->node)) {
    os << r->buffer;
    if (!r->index.empty()) print_index_list(os, r->index);
    return;
  }
  const auto& b = std::get<Expr::Binary>(e->node);
  bool additive = (b.op == '+' || b.op == '-');
  bool parens = additive && context > 0;
  if (parens) os << "(";
  print_expr(os, b.lhs, additive ? 0 : 1);
  os << " " << b.op << " ";
  // right operand of '-' must re-parenthesize additive children
  print_expr(os, b.rhs, (b.op == '+') ? 0 : 1);
  if (parens) os << ")";
}

inline void print_window(std::ostringstream& os, const Window& w) {
  os << w.buffer;
  if (w.dims.empty()) return;
  os << "[";
  for (size_t i = 0; i < w.dims.size(); ++i) {
    if (i) os << ", ";
    const WindowDim& d = w.dims[i];
    os << affine_to_string(d.base);
    if (!d.is_point) os << ":" << affine_to_string(d.base + AffineExpr::cst(d.extent));
  }
  os << "]";
}

inline void print_decl(std::ostringstream& os, const BufferDecl& d, bool as_arg) {
  os << d.name << ": ";
  if (as_arg && d.read_only) os << "const ";
  os << precision_name(d.precision);
  if (!d.dims.empty()) {
    os << "[";
    for (size_t i = 0; i < d.dims.size(); ++i) {
      if (i) os << ", ";
      os << affine_to_string(d.dims[i]);
    }
    os << "]";
  }
  os << " @ " << d.memspace.name;
}

inline void print_stmt(std::ostringstream& os, const Stmt::Ptr& s, int depth) {
  std::string ind(static_cast<size_t>(depth) * 2, ' ');
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    os << ind << "for " << loop->var << " in seq(0, " << affine_to_string(loop->bound) << "):\n";
    for (const auto& c : loop->body) print_stmt(os, c, depth + 1);
    return;
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    os << ind << a->buffer;
    if (!a->index.empty()) print_index_list(os, a->index);
    os << " = ";
    print_expr(os, a->value, 0);
    os << "\n";
    return;
  }
  if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
    os << ind << r->buffer;
    if (!r->index.empty()) print_index_list(os, r->index);
    os << " += ";
    print_expr(os, r->value, 0);
    os << "\n";
    return;
  }
  if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
    os << ind;
    print_decl(os, al->decl, /*as_arg=*/false);
    os << "\n";
    return;
  }
  const auto& call = std::get<Stmt::InstrCall>(s->node);
  os << ind << call.instr << "(";
  bool first = true;
  for (const auto& op : call.operands) {
    if (!first) os << ", ";
    print_window(os, op.window);
    first = false;
  }
  for (const auto& [name, e] : call.lane_args) {
    if (!first) os << ", ";
    os << name << "=" << affine_to_string(e);
    first = false;
  }
  os << ")\n";
}

}  // namespace detail

inline std::string expr_to_string(const Expr::Ptr& e) {
  std::ostringstream os;
  detail::print_expr(os, e, 0);
  return os.str();
}

inline std::string stmt_to_string(const Stmt::Ptr& s) {
  std::ostringstream os;
  detail::print_stmt(os, s, 0);
  return os.str();
}

inline std::string pretty_print(const Proc& p) {
  std::ostringstream os;
  os << "proc " << p.name << "(";
  bool first = true;
  for (const auto& sp : p.size_params) {
    if (!first) os << ", ";
    os << sp << ": size";
    first = false;
  }
  for (const auto& a : p.args) {
    if (!first) os << ", ";
    detail::print_decl(os, a, /*as_arg=*/true);
    first = false;
  }
  os << "):\n";
  for (const auto& s : p.body) detail::print_stmt(os, s, 1);
  return os.str();
}

}  // namespace ukgen
