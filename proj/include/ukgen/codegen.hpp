#pragma once

#include <cctype>
#include <set>
#include <sstream>

#include "ukgen/ir.hpp"
#include "ukgen/printer.hpp"
#include "ukgen/target.hpp"
#include "ukgen/wellformed.hpp"

namespace ukgen {

// C99 emission. Buffers index row-major with strides folded into a single
// affine expression; vector-register allocations become arrays of the
// space's register type with the lane dimension absorbed by the type; calls
// render through the instruction's C template. Emission itself never needs a
// toolchain.

struct EmitOptions {
  bool restrict_pointers = false;
};

struct EmittedUnit {
  std::string kernel_symbol;
  std::string kernel_source;
  std::string header;
  std::string harness_source;  // filled by emit_harness
};

namespace codegen {

inline const char* scalar_c_type(Precision p) {
  return p == Precision::f32 ? "float" : "float16_t";
}

// Row-major flattening; every stride must fold to a constant, which holds
// whenever only the outermost dimension is symbolic.
inline AffineExpr flatten_index(const std::vector<AffineExpr>& idx,
                                const std::vector<AffineExpr>& dims, const std::string& buf) {
  AffineExpr out = AffineExpr::cst(0);
  long long stride = 1;
  for (size_t d = idx.size(); d-- > 0;) {
    out += idx[d] * stride;
    if (d > 0) {
      if (!dims[d].is_constant())
        fail(ErrKind::NonConstRegisterDim,
             "buffer '" + buf + "' has a symbolic non-leading dimension");
      stride *= dims[d].constant;
    }
  }
  return out;
}

struct Emitter {
  const Proc& p;
  const TargetLibrary& lib;
  EmitOptions opts;
  BufferTable bufs;
  std::ostringstream os;
  int indent = 1;

  Emitter(const Proc& proc, const TargetLibrary& library, EmitOptions options)
      : p(proc), lib(library), opts(options), bufs(collect_buffers(proc)) {}

  std::string pad() const { return std::string(static_cast<size_t>(indent) * 2, ' '); }

  const BufferDecl& decl_of(const std::string& name) {
    const BufferDecl* d = bufs.find(name);
    if (!d) fail(ErrKind::Internal, "emit: unknown buffer '" + name + "'");
    return *d;
  }

  bool is_register(const BufferDecl& d) const {
    return d.memspace.kind == MemSpace::vector_register;
  }

  // number of register variables behind an allocation (lane dim excluded)
  long long register_cells(const BufferDecl& d) const {
    long long n = 1;
    for (size_t i = 0; i + 1 < d.dims.size(); ++i) {
      if (!d.dims[i].is_constant())
        fail(ErrKind::NonConstRegisterDim, "register '" + d.name + "' needs constant dims");
      n *= d.dims[i].constant;
    }
    return n;
  }

  std::string scalar_ref(const std::string& name, const std::vector<AffineExpr>& idx) {
    const BufferDecl& d = decl_of(name);
    if (is_register(d))
      fail(ErrKind::Internal, "emit: scalar access to register buffer '" + name + "'");
    if (d.dims.empty()) return name;
    return name + "[" + affine_to_string(flatten_index(idx, d.dims, name)) + "]";
  }

  // register element for a window: point indices over all dims but the lane
  std::string register_ref(const Window& w) {
    const BufferDecl& d = decl_of(w.buffer);
    if (register_cells(d) == 1) return w.buffer;
    std::vector<AffineExpr> idx;
    std::vector<AffineExpr> dims(d.dims.begin(), d.dims.end() - 1);
    for (size_t i = 0; i + 1 < w.dims.size(); ++i) idx.push_back(w.dims[i].base);
    return w.buffer + "[" + affine_to_string(flatten_index(idx, dims, w.buffer)) + "]";
  }

  std::string dram_window_ref(const Window& w) {
    const BufferDecl& d = decl_of(w.buffer);
    if (d.dims.empty()) return w.buffer;
    std::vector<AffineExpr> idx;
    for (const auto& dim : w.dims) idx.push_back(dim.base);
    return w.buffer + "[" + affine_to_string(flatten_index(idx, d.dims, w.buffer)) + "]";
  }

  void expr_text(std::ostringstream& out, const Expr::Ptr& e, int context) {
    if (auto* c = std::get_if<Expr::Const>(&e->node)) {
      if (c->value.is_integer()) {
        out << c->value.num << ".0f";
      } else {
        out << "(" << c->value.num << ".0f / " << c->value.den << ".0f)";
      }
      return;
    }
    if (auto* r = std::get_if<Expr::Read>(&e->node)) {
      out << scalar_ref(r->buffer, r->index);
      return;
    }
    const auto& b = std::get<Expr::Binary>(e->node);
    bool additive = b.op == '+' || b.op == '-';
    bool parens = additive && context > 0;
    if (parens) out << "(";
    expr_text(out, b.lhs, additive ? 0 : 1);
    out << " " << b.op << " ";
    expr_text(out, b.rhs, b.op == '+' ? 0 : 1);
    if (parens) out << ")";
  }

  void emit_call(const Stmt::InstrCall& call) {
    const InstrDef* def = lib.find_instr(call.instr);
    if (!def) fail(ErrKind::UnresolvedInstr, "'" + call.instr + "' not in target " + lib.name);
    // strict operand validation: placement must be final here
    std::map<std::string, std::string> values;
    for (const auto& op : call.operands) {
      const InstrParam* ip = def->find_param(op.param);
      const BufferDecl& d = decl_of(op.window.buffer);
      if (ip->memspace == "DRAM") {
        if (is_register(d))
          fail(ErrKind::MemSpaceMismatch, "emit: '" + call.instr + "' operand '" + d.name +
                                              "' must be addressable");
        values[op.param + "_data"] = dram_window_ref(op.window);
      } else {
        if (!is_register(d) || d.memspace.name != ip->memspace)
          fail(ErrKind::MemSpaceMismatch, "emit: '" + call.instr + "' operand '" + d.name +
                                              "' is not placed in " + ip->memspace);
        values[op.param + "_data"] = register_ref(op.window);
      }
    }
    for (const auto& [name, e] : call.lane_args) values[name] = affine_to_string(e);
    std::string text = def->c_template;
    for (const auto& [key, val] : values) {
      std::string tok = "{" + key + "}";
      size_t pos;
      while ((pos = text.find(tok)) != std::string::npos) text.replace(pos, tok.size(), val);
    }
    if (text.find('{') != std::string::npos)
      fail(ErrKind::UnresolvedInstr, "unresolved placeholder in template of " + call.instr);
    os << pad() << text << "\n";
  }

  void emit_stmt(const Stmt::Ptr& s) {
    if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
      os << pad() << "for (int32_t " << loop->var << " = 0; " << loop->var << " < "
         << affine_to_string(loop->bound) << "; ++" << loop->var << ") {\n";
      ++indent;
      for (const auto& c : loop->body) emit_stmt(c);
      --indent;
      os << pad() << "}\n";
      return;
    }
    if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
      const BufferDecl& d = al->decl;
      if (is_register(d)) {
        long long cells = register_cells(d);
        os << pad() << d.memspace.c_type << " " << d.name;
        if (cells > 1) os << "[" << cells << "]";
        os << ";\n";
      } else if (d.dims.empty()) {
        os << pad() << scalar_c_type(d.precision) << " " << d.name << ";\n";
      } else {
        os << pad() << scalar_c_type(d.precision) << " " << d.name << "[";
        for (size_t i = 0; i < d.dims.size(); ++i) {
          if (i) os << " * ";
          os << "(" << affine_to_string(d.dims[i]) << ")";
        }
        os << "];\n";
      }
      bufs.decls[d.name] = d;  // visible to later statements
      bufs.is_alloc[d.name] = true;
      return;
    }
    if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
      os << pad() << scalar_ref(a->buffer, a->index) << " = ";
      expr_text(os, a->value, 0);
      os << ";\n";
      return;
    }
    if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
      os << pad() << scalar_ref(r->buffer, r->index) << " += ";
      expr_text(os, r->value, 0);
      os << ";\n";
      return;
    }
    emit_call(std::get<Stmt::InstrCall>(s->node));
  }

  std::string signature() {
    std::ostringstream sig;
    sig << "void " << p.name << "(";
    bool first = true;
    auto sep = [&] {
      if (!first) sig << ", ";
      first = false;
    };
    for (const auto& sp : p.size_params) {
      sep();
      sig << "int32_t " << sp;
    }
    for (const auto& a : p.args) {
      if (!a.dims.empty()) continue;
      sep();
      sig << scalar_c_type(a.precision) << " " << a.name;
    }
    for (const auto& a : p.args) {
      if (a.dims.empty()) continue;
      sep();
      if (a.read_only) sig << "const ";
      sig << scalar_c_type(a.precision) << "* ";
      if (opts.restrict_pointers) sig << "restrict ";
      sig << a.name;
    }
    sig << ")";
    return sig.str();
  }

  std::set<std::string> headers_used() {
    std::set<std::string> out;
    walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath&) {
      if (auto* call = std::get_if<Stmt::InstrCall>(&s->node)) {
        const InstrDef* def = lib.find_instr(call->instr);
        if (def)
          for (const auto& h : def->headers) out.insert(h);
      }
      return true;
    });
    return out;
  }
};

}  // namespace codegen

inline EmittedUnit emit(const Proc& p, const TargetLibrary& lib, const EmitOptions& opts = {}) {
  {
    auto ds = well_formed(p);
    if (!ds.empty())
      fail(ErrKind::Internal, "emit of malformed proc:\n" + diagnostics_to_string(ds));
  }
  codegen::Emitter em(p, lib, opts);
  EmittedUnit unit;
  unit.kernel_symbol = p.name;

  std::ostringstream src;
  src << "#include <stdint.h>\n";
  for (const auto& h : em.headers_used()) src << "#include <" << h << ">\n";
  src << "\n" << em.signature() << " {\n";
  for (const auto& s : p.body) em.emit_stmt(s);
  src << em.os.str();
  src << "}\n";
  unit.kernel_source = src.str();

  std::ostringstream hdr;
  std::string guard = p.name;
  for (auto& c : guard) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  hdr << "#ifndef " << guard << "_H\n#define " << guard << "_H\n\n#include <stdint.h>\n";
  if (p.args.size() && p.args[0].precision == Precision::f16) hdr << "#include <arm_fp16.h>\n";
  hdr << "\n" << codegen::Emitter(p, lib, opts).signature() << ";\n\n#endif\n";
  unit.header = hdr.str();
  return unit;
}

// ---------------------------------------------------------------------------
// Self-checking harness: fills inputs with a fixed splitmix64 pattern mapped
// into {-2..2}, runs the kernel and a naive reference, and exits 0 iff the
// outputs agree exactly (zero signs identified). `--dump` prints the kernel's
// C output as hex words for cross-validation against the interpreter.

struct HarnessShape {
  int mr = 8;
  int nr = 12;
  long long k = 512;
  bool generic_alpha_beta = false;
};

// The fill pattern is bit-exact and documented in docs/verification.md: a
// splitmix64 stream seeded with 0x243F6A8885A308D3, one draw per element in
// argument order, value = (int)(draw % 5) - 2.
inline constexpr unsigned long long kHarnessSeed = 0x243F6A8885A308D3ull;

inline std::string emit_harness(const Proc& p, const TargetLibrary& lib,
                                const HarnessShape& shape, const EmitOptions& opts = {}) {
  EmittedUnit unit = emit(p, lib, opts);
  Precision prec = Precision::f32;
  for (const auto& a : p.args)
    if (!a.dims.empty()) prec = a.precision;
  const char* ty = codegen::scalar_c_type(prec);

  std::ostringstream os;
  os << unit.kernel_source << "\n";
  os << "#include <stdio.h>\n#include <stdlib.h>\n#include <string.h>\n\n";
  os << "static uint64_t uk_state = " << kHarnessSeed << "ull;\n";
  os << "static uint64_t uk_next(void) {\n"
     << "  uint64_t z = (uk_state += 0x9E3779B97F4A7C15ull);\n"
     << "  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;\n"
     << "  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;\n"
     << "  return z ^ (z >> 31);\n"
     << "}\n";
  os << "static " << ty << " uk_draw(void) { return (" << ty
     << ")((int)(uk_next() % 5) - 2); }\n\n";
  os << "int main(int argc, char** argv) {\n";
  os << "  const int MR = " << shape.mr << ", NR = " << shape.nr << ";\n";
  os << "  const int32_t K = " << shape.k << ";\n";
  os << "  " << ty << "* C = malloc(sizeof(" << ty << ") * (size_t)(NR * MR));\n";
  os << "  " << ty << "* A = malloc(sizeof(" << ty << ") * (size_t)K * MR);\n";
  os << "  " << ty << "* B = malloc(sizeof(" << ty << ") * (size_t)K * NR);\n";
  os << "  " << ty << "* ref = malloc(sizeof(" << ty << ") * (size_t)(NR * MR));\n";
  if (shape.generic_alpha_beta) {
    os << "  " << ty << " alpha = uk_draw();\n  " << ty << " beta = uk_draw();\n";
  }
  os << "  for (int i = 0; i < NR * MR; ++i) C[i] = uk_draw();\n";
  os << "  for (long long i = 0; i < (long long)K * MR; ++i) A[i] = uk_draw();\n";
  os << "  for (long long i = 0; i < (long long)K * NR; ++i) B[i] = uk_draw();\n";
  os << "  memcpy(ref, C, sizeof(" << ty << ") * (size_t)(NR * MR));\n\n";
  // reference: plain triple loop over the transposed layouts
  os << "  for (int j = 0; j < NR; ++j) {\n"
     << "    for (int i = 0; i < MR; ++i) {\n"
     << "      float acc = " << (shape.generic_alpha_beta ? "(float)beta * " : "")
     << "(float)ref[j * MR + i];\n"
     << "      for (int32_t kk = 0; kk < K; ++kk)\n"
     << "        acc += (float)A[(size_t)kk * MR + i] * ("
     << (shape.generic_alpha_beta ? "(float)alpha * " : "") << "(float)B[(size_t)kk * NR + j]);\n"
     << "      ref[j * MR + i] = (" << ty << ")acc;\n"
     << "    }\n  }\n\n";
  os << "  " << p.name << "(K, " << (shape.generic_alpha_beta ? "alpha, beta, " : "")
     << "C, A, B);\n\n";
  os << "  if (argc > 1 && strcmp(argv[1], \"--dump\") == 0) {\n"
     << "    for (int i = 0; i < NR * MR; ++i) {\n"
     << "      uint32_t w = 0; memcpy(&w, &C[i], sizeof(" << ty << ") < 4 ? sizeof(" << ty
     << ") : 4);\n"
     << "      printf(\"%08x\\n\", w);\n"
     << "    }\n"
     << "  }\n";
  os << "  int bad = 0;\n"
     << "  for (int i = 0; i < NR * MR; ++i) {\n"
     << "    if (C[i] == ref[i]) continue;  /* value equality, zero signs equal */\n"
     << "    if (memcmp(&C[i], &ref[i], sizeof(" << ty << ")) != 0) {\n"
     << "      if (!bad) fprintf(stderr, \"mismatch at %d: %f vs %f\\n\", i, (double)C[i],\n"
     << "                        (double)ref[i]);\n"
     << "      bad = 1;\n"
     << "    }\n"
     << "  }\n";
  os << "  free(C); free(A); free(B); free(ref);\n";
  os << "  return bad;\n";
  os << "}\n";
  return os.str();
}

}  // namespace ukgen
