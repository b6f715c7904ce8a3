#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <random>
#include <span>
#include <sstream>

#include "ukgen/f16.hpp"
#include "ukgen/ir.hpp"
#include "ukgen/printer.hpp"
#include "ukgen/target.hpp"
#include "ukgen/wellformed.hpp"

namespace ukgen {

// Reference executor. Every scheduling rewrite and every generated kernel is
// validated against it. Procs are first lowered to pure loop nests by
// inlining instruction semantic bodies, then compiled to a compact op tree;
// buffer strides are fixed once sizes are bound, and innermost
// single-statement loops run as strided fused loops.
//
// Arithmetic is 32-bit float throughout; stores to f16 buffers round to the
// nearest representable half on every store.

struct ConcreteBuffer {
  std::vector<long long> dims;
  Precision precision = Precision::f32;
  std::vector<float> data;  // row-major over dims; values already at precision

  long long size() const {
    long long n = 1;
    for (long long d : dims) n *= d;
    return n;
  }
  static ConcreteBuffer zeros(std::vector<long long> dims, Precision prec = Precision::f32) {
    ConcreteBuffer b;
    b.dims = std::move(dims);
    b.precision = prec;
    b.data.assign(static_cast<size_t>(b.size()), 0.0f);
    return b;
  }
  static ConcreteBuffer scalar(float v, Precision prec = Precision::f32) {
    ConcreteBuffer b;
    b.precision = prec;
    b.data = {prec == Precision::f16 ? f16_round(v) : v};
    return b;
  }
};

struct Bindings {
  std::map<std::string, long long> sizes;
  std::map<std::string, ConcreteBuffer> buffers;  // scalars are rank-0 buffers
};

// ---------------------------------------------------------------------------
// Instruction inlining: substitute each call's semantic body, mapping
// parameter accesses through the operand windows. The result is a proc with
// no InstrCall statements and identical semantics.

namespace interp_detail {

inline AffineExpr subst_all(const AffineExpr& e, const std::map<std::string, AffineExpr>& m) {
  AffineExpr out = AffineExpr::cst(e.constant);
  for (const auto& [sym, c] : e.terms) {
    auto it = m.find(sym);
    if (it == m.end())
      out += AffineExpr::sym(sym, c);
    else
      out += it->second * c;
  }
  return out;
}

struct Inliner {
  const TargetLibrary& lib;
  int fresh = 0;

  std::vector<AffineExpr> map_index(const Window& w, const std::vector<AffineExpr>& param_idx,
                                    const std::map<std::string, AffineExpr>& sub) const {
    std::vector<AffineExpr> out;
    size_t r = 0;
    for (const auto& d : w.dims) {
      if (d.is_point) {
        out.push_back(d.base);
      } else {
        if (r >= param_idx.size())
          fail(ErrKind::Internal, "window rank does not match parameter access");
        out.push_back(d.base + subst_all(param_idx[r++], sub));
      }
    }
    if (r != param_idx.size())
      fail(ErrKind::Internal, "window rank does not match parameter access");
    return out;
  }

  Expr::Ptr map_expr(const Expr::Ptr& e, const std::map<std::string, Window>& windows,
                     const std::map<std::string, AffineExpr>& sub) const {
    if (auto* rd = std::get_if<Expr::Read>(&e->node)) {
      auto it = windows.find(rd->buffer);
      if (it == windows.end()) fail(ErrKind::Internal, "instruction body reads unknown symbol");
      return Expr::read(it->second.buffer, map_index(it->second, rd->index, sub));
    }
    if (auto* b = std::get_if<Expr::Binary>(&e->node)) {
      return Expr::binary(b->op, map_expr(b->lhs, windows, sub), map_expr(b->rhs, windows, sub));
    }
    return e;
  }

  Stmt::Ptr map_stmt(const Stmt::Ptr& s, const std::map<std::string, Window>& windows,
                     std::map<std::string, AffineExpr> sub) {
    if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
      std::string v = loop->var + "__" + std::to_string(fresh++);
      sub[loop->var] = AffineExpr::sym(v);
      std::vector<Stmt::Ptr> body;
      for (const auto& c : loop->body) body.push_back(map_stmt(c, windows, sub));
      return Stmt::loop(v, subst_all(loop->bound, sub), std::move(body));
    }
    if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
      auto it = windows.find(a->buffer);
      if (it == windows.end()) fail(ErrKind::Internal, "instruction body writes unknown symbol");
      std::vector<AffineExpr> idx;
      for (const auto& x : a->index) idx.push_back(subst_all(x, sub));
      return Stmt::assign(it->second.buffer, map_index(it->second, idx, {}),
                          map_expr(a->value, windows, sub));
    }
    if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
      auto it = windows.find(r->buffer);
      if (it == windows.end()) fail(ErrKind::Internal, "instruction body writes unknown symbol");
      std::vector<AffineExpr> idx;
      for (const auto& x : r->index) idx.push_back(subst_all(x, sub));
      return Stmt::reduce(it->second.buffer, map_index(it->second, idx, {}),
                          map_expr(r->value, windows, sub));
    }
    fail(ErrKind::Internal, "instruction bodies contain only loops, assigns and reduces");
  }

  std::vector<Stmt::Ptr> inline_call(const Stmt::InstrCall& call) {
    const InstrDef* def = lib.find_instr(call.instr);
    if (!def) fail(ErrKind::UnknownInstr, "'" + call.instr + "' not in target '" + lib.name + "'");
    std::map<std::string, Window> windows;
    for (const auto& op : call.operands) windows[op.param] = op.window;
    std::map<std::string, AffineExpr> sub;
    for (const auto& [n, e] : call.lane_args) sub[n] = e;
    return {map_stmt(def->body, windows, sub)};
  }

  std::vector<Stmt::Ptr> run(const std::vector<Stmt::Ptr>& body) {
    std::vector<Stmt::Ptr> out;
    for (const auto& s : body) {
      if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
        out.push_back(Stmt::loop(loop->var, loop->bound, run(loop->body)));
      } else if (auto* call = std::get_if<Stmt::InstrCall>(&s->node)) {
        for (auto& t : inline_call(*call)) out.push_back(std::move(t));
      } else {
        out.push_back(s);
      }
    }
    return out;
  }
};

}  // namespace interp_detail

inline Proc inline_calls(const Proc& p, const TargetLibrary& lib) {
  interp_detail::Inliner inl{lib, 0};
  Proc out = p;
  out.body = inl.run(p.body);
  return out;
}

// ---------------------------------------------------------------------------
// Compilation

namespace interp_detail {

// Affine form over register slots.
struct CAff {
  std::vector<std::pair<int, long long>> terms;
  long long constant = 0;

  long long eval(const std::vector<long long>& regs) const {
    long long v = constant;
    for (const auto& [slot, c] : terms) v += regs[static_cast<size_t>(slot)] * c;
    return v;
  }
  long long coeff(int slot) const {
    for (const auto& [s, c] : terms)
      if (s == slot) return c;
    return 0;
  }
  CAff without(int slot) const {
    CAff out;
    out.constant = constant;
    for (const auto& [s, c] : terms)
      if (s != slot) out.terms.push_back({s, c});
    return out;
  }
};

// Multi-dimensional access; the flat offset needs the buffer's runtime
// strides, which are fixed once sizes are bound.
struct CIndex {
  std::vector<CAff> dims;
};

struct BufRt {
  float* data = nullptr;
  long long size = 0;
  bool round_f16 = false;
  std::vector<long long> strides;  // row-major, one per dim
};

struct RtState {
  std::vector<long long> regs;
  std::vector<BufRt> bufs;
};

inline long long eval_offset(const CIndex& idx, const BufRt& b,
                             const std::vector<long long>& regs) {
  long long off = 0;
  for (size_t d = 0; d < idx.dims.size(); ++d) off += idx.dims[d].eval(regs) * b.strides[d];
  return off;
}

// Splits an access into (base, stride) with respect to one loop slot.
inline void base_stride(const CIndex& idx, const BufRt& b, int slot,
                        const std::vector<long long>& regs, long long& base,
                        long long& stride) {
  base = 0;
  stride = 0;
  for (size_t d = 0; d < idx.dims.size(); ++d) {
    base += idx.dims[d].without(slot).eval(regs) * b.strides[d];
    stride += idx.dims[d].coeff(slot) * b.strides[d];
  }
}

// Compiled value expression, pool-indexed.
struct CExpr {
  enum Kind { cst, read, add, sub, mul } kind = cst;
  float value = 0.0f;
  int buf = -1;
  CIndex index;
  int a = -1, b = -1;
};

struct ExprPool {
  std::vector<CExpr> nodes;
  float eval(int node, const RtState& st) const {
    const CExpr& e = nodes[static_cast<size_t>(node)];
    switch (e.kind) {
      case CExpr::cst: return e.value;
      case CExpr::read: {
        const BufRt& b = st.bufs[static_cast<size_t>(e.buf)];
        long long off = eval_offset(e.index, b, st.regs);
        if (off < 0 || off >= b.size)
          fail(ErrKind::InterpreterBoundsFault, "read offset out of range");
        return b.data[off];
      }
      case CExpr::add: return eval(e.a, st) + eval(e.b, st);
      case CExpr::sub: return eval(e.a, st) - eval(e.b, st);
      case CExpr::mul: return eval(e.a, st) * eval(e.b, st);
    }
    return 0.0f;
  }
};

struct OpNode {
  virtual ~OpNode() = default;
  virtual void exec(RtState& st, const ExprPool& pool) const = 0;
};
using OpPtr = std::unique_ptr<OpNode>;

struct OpWrite : OpNode {  // single assign or reduce
  int buf;
  CIndex index;
  int rhs;
  bool is_reduce;
  void exec(RtState& st, const ExprPool& pool) const override {
    BufRt& b = st.bufs[static_cast<size_t>(buf)];
    long long off = eval_offset(index, b, st.regs);
    if (off < 0 || off >= b.size)
      fail(ErrKind::InterpreterBoundsFault, "write offset out of range");
    float v = pool.eval(rhs, st);
    if (is_reduce) v += b.data[off];
    b.data[off] = b.round_f16 ? f16_round(v) : v;
  }
};

struct OpLoop : OpNode {
  int slot;
  CAff bound;
  std::vector<OpPtr> body;
  void exec(RtState& st, const ExprPool& pool) const override {
    long long n = bound.eval(st.regs);
    long long& r = st.regs[static_cast<size_t>(slot)];
    for (long long i = 0; i < n; ++i) {
      r = i;
      for (const auto& op : body) op->exec(st, pool);
    }
    r = 0;
  }
};

// Innermost loop whose body is one assign/reduce: runs as a strided loop.
// This covers both scalar loop nests and inlined vector-instruction bodies,
// which is where nearly all interpretation time goes.
struct OpFused : OpNode {
  int slot;
  CAff bound;
  int dst_buf;
  CIndex dst;
  bool is_reduce;
  int rhs;
  std::vector<int> reads;  // pool nodes of all reads in rhs, in visit order
  enum Shape { generic, copy, fma2 } shape = generic;

  void exec(RtState& st, const ExprPool& pool) const override {
    long long n = bound.eval(st.regs);
    if (n <= 0) return;
    BufRt& db = st.bufs[static_cast<size_t>(dst_buf)];
    long long d0, ds;
    base_stride(dst, db, slot, st.regs, d0, ds);
    auto check = [&](long long lo, long long stride, long long size) {
      long long hi = lo + stride * (n - 1);
      if (lo < 0 || lo >= size || hi < 0 || hi >= size)
        fail(ErrKind::InterpreterBoundsFault, "fused loop offset out of range");
    };
    check(d0, ds, db.size);
    if (shape == copy || shape == fma2) {
      long long s0[2], ss[2];
      for (size_t k = 0; k < reads.size(); ++k) {
        const CExpr& rd = pool.nodes[static_cast<size_t>(reads[k])];
        const BufRt& rb = st.bufs[static_cast<size_t>(rd.buf)];
        base_stride(rd.index, rb, slot, st.regs, s0[k], ss[k]);
        check(s0[k], ss[k], rb.size);
      }
      float* d = db.data;
      if (shape == copy) {
        const float* s = st.bufs[size_t(pool.nodes[size_t(reads[0])].buf)].data;
        if (db.round_f16) {
          if (is_reduce)
            for (long long i = 0; i < n; ++i) {
              long long o = d0 + ds * i;
              d[o] = f16_round(d[o] + s[s0[0] + ss[0] * i]);
            }
          else
            for (long long i = 0; i < n; ++i) d[d0 + ds * i] = f16_round(s[s0[0] + ss[0] * i]);
        } else if (is_reduce) {
          for (long long i = 0; i < n; ++i) d[d0 + ds * i] += s[s0[0] + ss[0] * i];
        } else {
          for (long long i = 0; i < n; ++i) d[d0 + ds * i] = s[s0[0] + ss[0] * i];
        }
        return;
      }
      // fma2: dst (+)= readA * readB
      const float* pa = st.bufs[size_t(pool.nodes[size_t(reads[0])].buf)].data;
      const float* pb = st.bufs[size_t(pool.nodes[size_t(reads[1])].buf)].data;
      if (!db.round_f16) {
        if (is_reduce) {
          for (long long i = 0; i < n; ++i)
            d[d0 + ds * i] += pa[s0[0] + ss[0] * i] * pb[s0[1] + ss[1] * i];
        } else {
          for (long long i = 0; i < n; ++i)
            d[d0 + ds * i] = pa[s0[0] + ss[0] * i] * pb[s0[1] + ss[1] * i];
        }
      } else {
        for (long long i = 0; i < n; ++i) {
          long long o = d0 + ds * i;
          float v = pa[s0[0] + ss[0] * i] * pb[s0[1] + ss[1] * i];
          d[o] = f16_round(is_reduce ? d[o] + v : v);
        }
      }
      return;
    }
    // generic: re-evaluate through the pool with the loop register live
    long long& r = st.regs[static_cast<size_t>(slot)];
    float* d = db.data;
    for (long long i = 0; i < n; ++i) {
      r = i;
      float v = pool.eval(rhs, st);
      long long off = d0 + ds * i;
      if (is_reduce) v += d[off];
      d[off] = db.round_f16 ? f16_round(v) : v;
    }
    r = 0;
  }
};

struct CompiledBuf {
  std::string name;
  bool is_arg = false;
  bool f16 = false;
  std::vector<CAff> dims;  // over size-param slots
};

}  // namespace interp_detail

class Executable {
 public:
  Executable(const Proc& p, const TargetLibrary& lib) : proc_name_(p.name) {
    Proc flat = inline_calls(p, lib);
    {
      auto ds = well_formed(flat);
      if (!ds.empty())
        fail(ErrKind::Internal,
             "cannot interpret malformed proc '" + p.name + "':\n" + diagnostics_to_string(ds));
    }
    size_params_ = flat.size_params;
    args_ = flat.args;
    for (const auto& sp : flat.size_params) slot(sp);
    for (const auto& a : flat.args) add_buffer(a, /*is_arg=*/true);
    ops_ = compile_block(flat.body);
    n_slots_ = static_cast<int>(slots_.size());
  }

  const std::string& proc_name() const { return proc_name_; }
  const std::vector<std::string>& size_params() const { return size_params_; }
  const std::vector<BufferDecl>& args() const { return args_; }

  // Scratch reused across calls on the hot driver path.
  struct Workspace {
    std::vector<std::vector<float>> scratch;
  };

  // Raw entry: size values in size-param order, one data span per argument
  // (the caller guarantees dims = declared dims). Writes happen in place.
  void run_views(std::span<const long long> size_values, std::span<float* const> arg_data,
                 Workspace& ws) const {
    using namespace interp_detail;
    if (size_values.size() != size_params_.size() || arg_data.size() != args_.size())
      fail(ErrKind::MissingBinding, "wrong number of sizes or arguments");
    RtState st;
    st.regs.assign(static_cast<size_t>(n_slots_), 0);
    for (size_t i = 0; i < size_values.size(); ++i) st.regs[i] = size_values[i];
    st.bufs.resize(bufs_.size());
    ws.scratch.resize(bufs_.size());
    for (size_t i = 0; i < bufs_.size(); ++i) {
      const CompiledBuf& cb = bufs_[i];
      BufRt& rt = st.bufs[i];
      rt.round_f16 = cb.f16;
      long long sz = 1;
      rt.strides.assign(cb.dims.size(), 1);
      for (size_t d = cb.dims.size(); d-- > 0;) {
        rt.strides[d] = sz;
        sz *= cb.dims[d].eval(st.regs);
      }
      rt.size = sz;
      if (cb.is_arg) {
        rt.data = arg_data[arg_index_[i]];
      } else {
        auto& vec = ws.scratch[i];
        vec.assign(static_cast<size_t>(sz), 0.0f);
        rt.data = vec.data();
      }
    }
    for (const auto& op : ops_) op->exec(st, pool_);
  }

  // Pure functional entry: returns mutated copies of read-write buffers.
  Bindings run(const Bindings& b) const {
    Bindings out;
    std::vector<long long> sizes;
    std::map<std::string, long long> size_env;
    for (const auto& sp : size_params_) {
      auto it = b.sizes.find(sp);
      if (it == b.sizes.end()) fail(ErrKind::MissingBinding, "no value for size param " + sp);
      if (it->second < 1) fail(ErrKind::MissingBinding, "size param " + sp + " must be >= 1");
      sizes.push_back(it->second);
      size_env[sp] = it->second;
      out.sizes[sp] = it->second;
    }
    std::vector<ConcreteBuffer> copies;
    copies.reserve(args_.size());
    for (const auto& a : args_) {
      auto it = b.buffers.find(a.name);
      if (it == b.buffers.end()) fail(ErrKind::MissingBinding, "no buffer bound for " + a.name);
      ConcreteBuffer buf = it->second;
      std::vector<long long> want;
      for (const auto& d : a.dims) {
        long long v = d.constant;
        for (const auto& [sym, c] : d.terms) v += size_env.at(sym) * c;
        want.push_back(v);
      }
      if (buf.dims != want || buf.precision != a.precision)
        fail(ErrKind::MissingBinding, "buffer " + a.name + " has the wrong shape or precision");
      copies.push_back(std::move(buf));
    }
    std::vector<float*> ptrs;
    for (auto& c : copies) ptrs.push_back(c.data.data());
    Workspace ws;
    run_views(sizes, ptrs, ws);
    for (size_t i = 0; i < args_.size(); ++i) {
      if (!args_[i].read_only) out.buffers[args_[i].name] = std::move(copies[i]);
    }
    return out;
  }

 private:
  using CAff = interp_detail::CAff;
  using CIndex = interp_detail::CIndex;
  using OpPtr = interp_detail::OpPtr;

  int slot(const std::string& name) {
    auto it = slot_of_.find(name);
    if (it != slot_of_.end()) return it->second;
    int s = static_cast<int>(slots_.size());
    slots_.push_back(name);
    slot_of_[name] = s;
    return s;
  }

  CAff compile_affine(const AffineExpr& e) {
    CAff out;
    out.constant = e.constant;
    for (const auto& [sym, c] : e.terms) out.terms.push_back({slot(sym), c});
    return out;
  }

  CIndex compile_index(const std::vector<AffineExpr>& index) {
    CIndex out;
    for (const auto& x : index) out.dims.push_back(compile_affine(x));
    return out;
  }

  void add_buffer(const BufferDecl& d, bool is_arg) {
    interp_detail::CompiledBuf cb;
    cb.name = d.name;
    cb.is_arg = is_arg;
    cb.f16 = d.precision == Precision::f16;
    for (const auto& dim : d.dims) cb.dims.push_back(compile_affine(dim));
    buf_of_[d.name] = static_cast<int>(bufs_.size());
    arg_index_.push_back(is_arg ? n_args_++ : SIZE_MAX);
    bufs_.push_back(std::move(cb));
  }

  int compile_expr(const Expr::Ptr& e) {
    using interp_detail::CExpr;
    CExpr node;
    if (auto* c = std::get_if<Expr::Const>(&e->node)) {
      node.kind = CExpr::cst;
      node.value = static_cast<float>(c->value.num) / static_cast<float>(c->value.den);
    } else if (auto* r = std::get_if<Expr::Read>(&e->node)) {
      node.kind = CExpr::read;
      auto it = buf_of_.find(r->buffer);
      if (it == buf_of_.end()) fail(ErrKind::Internal, "read of unknown buffer while compiling");
      node.buf = it->second;
      node.index = compile_index(r->index);
    } else {
      const auto& b = std::get<Expr::Binary>(e->node);
      CExpr tmp;  // children first so indices stay valid
      tmp.kind = b.op == '+' ? CExpr::add : b.op == '-' ? CExpr::sub : CExpr::mul;
      tmp.a = compile_expr(b.lhs);
      tmp.b = compile_expr(b.rhs);
      node = tmp;
    }
    pool_.nodes.push_back(node);
    return static_cast<int>(pool_.nodes.size()) - 1;
  }

  void collect_reads(int node, std::vector<int>& out) const {
    const auto& e = pool_.nodes[static_cast<size_t>(node)];
    if (e.kind == interp_detail::CExpr::read) {
      out.push_back(node);
      return;
    }
    if (e.a >= 0) collect_reads(e.a, out);
    if (e.b >= 0) collect_reads(e.b, out);
  }

  std::vector<OpPtr> compile_block(const std::vector<Stmt::Ptr>& body) {
    using namespace interp_detail;
    std::vector<OpPtr> out;
    for (const auto& s : body) {
      if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
        add_buffer(al->decl, /*is_arg=*/false);
        continue;
      }
      if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
        int ls = slot(loop->var);
        bool fusable = loop->body.size() == 1 &&
                       (std::holds_alternative<Stmt::Assign>(loop->body[0]->node) ||
                        std::holds_alternative<Stmt::Reduce>(loop->body[0]->node));
        if (fusable) {
          const Stmt::Ptr& c = loop->body[0];
          const std::string* bufname;
          const std::vector<AffineExpr>* index;
          const Expr::Ptr* value;
          bool is_reduce;
          if (auto* a = std::get_if<Stmt::Assign>(&c->node)) {
            bufname = &a->buffer;
            index = &a->index;
            value = &a->value;
            is_reduce = false;
          } else {
            const auto& r = std::get<Stmt::Reduce>(c->node);
            bufname = &r.buffer;
            index = &r.index;
            value = &r.value;
            is_reduce = true;
          }
          auto fused = std::make_unique<OpFused>();
          fused->slot = ls;
          fused->bound = compile_affine(loop->bound);
          fused->dst_buf = buf_of_.at(*bufname);
          fused->dst = compile_index(*index);
          fused->is_reduce = is_reduce;
          fused->rhs = compile_expr(*value);
          collect_reads(fused->rhs, fused->reads);
          const CExpr& root = pool_.nodes[static_cast<size_t>(fused->rhs)];
          if (root.kind == CExpr::read) {
            fused->shape = OpFused::copy;
          } else if (root.kind == CExpr::mul && fused->reads.size() == 2 &&
                     pool_.nodes[static_cast<size_t>(root.a)].kind == CExpr::read &&
                     pool_.nodes[static_cast<size_t>(root.b)].kind == CExpr::read) {
            fused->shape = OpFused::fma2;
          }
          out.push_back(std::move(fused));
          continue;
        }
        auto op = std::make_unique<OpLoop>();
        op->slot = ls;
        op->bound = compile_affine(loop->bound);
        op->body = compile_block(loop->body);
        out.push_back(std::move(op));
        continue;
      }
      if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
        auto op = std::make_unique<OpWrite>();
        op->buf = buf_of_.at(a->buffer);
        op->index = compile_index(a->index);
        op->rhs = compile_expr(a->value);
        op->is_reduce = false;
        out.push_back(std::move(op));
        continue;
      }
      if (auto* r = std::get_if<Stmt::Reduce>(&s->node)) {
        auto op = std::make_unique<OpWrite>();
        op->buf = buf_of_.at(r->buffer);
        op->index = compile_index(r->index);
        op->rhs = compile_expr(r->value);
        op->is_reduce = true;
        out.push_back(std::move(op));
        continue;
      }
      fail(ErrKind::Internal, "instruction call survived inlining");
    }
    return out;
  }

  std::string proc_name_;
  std::vector<std::string> size_params_;
  std::vector<BufferDecl> args_;
  std::vector<std::string> slots_;
  std::map<std::string, int> slot_of_;
  std::vector<interp_detail::CompiledBuf> bufs_;
  std::map<std::string, int> buf_of_;
  std::vector<size_t> arg_index_;
  size_t n_args_ = 0;
  interp_detail::ExprPool pool_;
  std::vector<OpPtr> ops_;
  int n_slots_ = 0;
};

// One-shot convenience.
inline Bindings run(const Proc& p, const Bindings& b, const TargetLibrary& lib) {
  return Executable(p, lib).run(b);
}

// ---------------------------------------------------------------------------
// Randomized equivalence checking

enum class ValueMode { integer_exact, real_tolerance };

struct EquivReport {
  std::string proc1, proc2;
  int trials = 0;
  ValueMode mode = ValueMode::integer_exact;
  uint64_t seed = 0;
  bool equivalent = true;
  double max_err = 0.0;
  std::string counterexample;  // first failing binding, human readable

  std::string to_line() const {
    std::ostringstream os;
    os << "equiv " << proc1 << " " << proc2 << " trials=" << trials << " mode="
       << (mode == ValueMode::integer_exact ? "integer_exact" : "real_tolerance")
       << " seed=" << seed << " max_err=" << max_err
       << " verdict=" << (equivalent ? "equivalent" : "DIFFER");
    if (!counterexample.empty()) os << " counterexample={" << counterexample << "}";
    return os.str();
  }
};

// Tolerances for real_tolerance mode, sized for reductions up to 512 deep
// (see docs/verification.md): relative 1e-5 for f32, 1e-2 for f16, absolute
// floor 1e-6.
inline double tolerance_for(Precision p) { return p == Precision::f32 ? 1e-5 : 1e-2; }

// Exact comparison for integer-valued runs. Value equality covers every
// non-NaN case and deliberately identifies +0 with -0: rewrites that
// reassociate sums or introduce multiply-accumulate forms flip zero signs.
// NaNs fall back to the bit pattern.
inline bool integer_exact_equal(float a, float b) {
  return a == b || std::memcmp(&a, &b, sizeof a) == 0;
}

inline EquivReport equivalent(const Proc& p1, const Proc& p2, int trials, ValueMode mode,
                              const TargetLibrary& lib, uint64_t seed = 0x5eed) {
  EquivReport rep;
  rep.proc1 = p1.name;
  rep.proc2 = p2.name;
  rep.trials = trials;
  rep.mode = mode;
  rep.seed = seed;

  if (p1.size_params != p2.size_params) fail(ErrKind::SignatureMismatch, "size params differ");
  if (p1.args.size() != p2.args.size()) fail(ErrKind::SignatureMismatch, "argument count differs");
  for (size_t i = 0; i < p1.args.size(); ++i) {
    const BufferDecl& a = p1.args[i];
    const BufferDecl& b = p2.args[i];
    if (a.name != b.name || a.dims != b.dims || a.precision != b.precision ||
        a.read_only != b.read_only)
      fail(ErrKind::SignatureMismatch, "argument '" + a.name + "' differs");
  }

  Executable x1(p1, lib), x2(p2, lib);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long long> size_dist(1, 6);
  std::uniform_int_distribution<int> int_val(-2, 2);
  std::uniform_real_distribution<float> real_val(-1.0f, 1.0f);

  for (int t = 0; t < trials && rep.equivalent; ++t) {
    Bindings b;
    for (const auto& sp : p1.size_params) b.sizes[sp] = size_dist(rng);
    for (const auto& a : p1.args) {
      std::vector<long long> dims;
      for (const auto& d : a.dims) {
        long long v = d.constant;
        for (const auto& [sym, c] : d.terms) v += b.sizes.at(sym) * c;
        dims.push_back(v);
      }
      ConcreteBuffer buf = ConcreteBuffer::zeros(dims, a.precision);
      for (auto& v : buf.data) {
        float raw =
            mode == ValueMode::integer_exact ? static_cast<float>(int_val(rng)) : real_val(rng);
        v = a.precision == Precision::f16 ? f16_round(raw) : raw;
      }
      b.buffers[a.name] = std::move(buf);
    }
    Bindings r1 = x1.run(b);
    Bindings r2 = x2.run(b);
    for (const auto& [name, buf1] : r1.buffers) {
      const ConcreteBuffer& buf2 = r2.buffers.at(name);
      Precision prec = buf1.precision;
      for (size_t i = 0; i < buf1.data.size(); ++i) {
        float v1 = buf1.data[i], v2 = buf2.data[i];
        bool ok;
        double err;
        if (mode == ValueMode::integer_exact) {
          ok = integer_exact_equal(v1, v2);
          err = ok ? 0.0 : std::fabs(double(v1) - double(v2));
        } else {
          double diff = std::fabs(double(v1) - double(v2));
          double scale = std::max(std::fabs(double(v1)), std::fabs(double(v2)));
          err = diff / std::max(1e-6, scale);
          ok = diff <= std::max(1e-6, tolerance_for(prec) * scale);
        }
        rep.max_err = std::max(rep.max_err, err);
        if (!ok && rep.equivalent) {
          rep.equivalent = false;
          std::ostringstream os;
          os << "trial " << t << " buffer " << name << " flat index " << i << ": " << v1
             << " vs " << v2 << " sizes";
          for (const auto& [sp, v] : b.sizes) os << " " << sp << "=" << v;
          rep.counterexample = os.str();
        }
      }
    }
  }
  return rep;
}

}  // namespace ukgen
