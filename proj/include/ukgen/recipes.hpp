#pragma once

#include <functional>
#include <optional>
#include <sstream>

#include "ukgen/codegen.hpp"
#include "ukgen/script.hpp"

namespace ukgen {

// Schedule builders that take a kernel specification to a fully scheduled
// proc in six labeled phases:
//   v1  specialize MR/NR          v2  split loops to the vector length
//   v3  stage C in registers      v4  stage the A and B operands
//   v5  select the FMA            v6  unroll
//
// Two vectorization shapes cover all targets: when the library provides a
// lane-indexed FMA and the vector length divides NR, B is loaded whole and
// the FMA selects lanes (the 8x12 Neon shape); otherwise each B element is
// broadcast into a register and the elementwise FMA is used. Kernels with
// unpacked A keep the i loop whole and broadcast A instead; rows beyond one
// fall back to scalar code.

struct KernelSpec {
  int mr = 8;
  int nr = 12;
  Precision precision = Precision::f32;
  std::string target = "neon_f32";
  bool packed_a = true;
  bool generic_alpha_beta = false;  // false: the simplified C += A*B kernel
};

inline std::string kernel_symbol(const KernelSpec& spec) {
  std::string s = "gemm_ukr_" + std::to_string(spec.mr) + "x" + std::to_string(spec.nr) + "_" +
                  precision_name(spec.precision) + "_" + spec.target;
  if (spec.generic_alpha_beta) s += "_ab";
  return s;
}

namespace recipes {

inline AffineExpr aff(long long c) { return AffineExpr::cst(c); }
inline AffineExpr aff(const std::string& s, long long c = 1) { return AffineExpr::sym(s, c); }

inline const MemSpace& reg_space(const TargetLibrary& lib) {
  if (lib.memspaces.empty() || lib.memspaces[0].kind != MemSpace::vector_register)
    fail(ErrKind::ValidationError, "target '" + lib.name + "' declares no register space");
  return lib.memspaces[0];
}

inline std::string instr_name(const TargetLibrary& lib, InstrKind kind, Precision prec) {
  const InstrDef* def = lib.find_kind(kind, prec);
  if (!def)
    fail(ErrKind::ValidationError, "target '" + lib.name + "' lacks a " +
                                       std::string(instr_kind_name(kind)) + " instruction for " +
                                       precision_name(prec));
  return def->name;
}

// ---------------------------------------------------------------------------
// statement finders

inline bool subtree_any(const Stmt::Ptr& s, const std::function<bool(const Stmt::Ptr&)>& pred) {
  if (pred(s)) return true;
  if (auto* loop = std::get_if<Stmt::Loop>(&s->node)) {
    for (const auto& c : loop->body)
      if (subtree_any(c, pred)) return true;
  }
  return false;
}

inline StmtPath find_one(const Proc& p, const std::function<bool(const Stmt::Ptr&)>& pred,
                         const std::string& what) {
  std::vector<StmtPath> hits;
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath& path) {
    if (pred(s)) hits.push_back(path);
    return true;
  });
  if (hits.size() != 1)
    fail(ErrKind::Internal, "recipe expected exactly one " + what + ", found " +
                                std::to_string(hits.size()) + " in:\n" + pretty_print(p));
  return hits[0];
}

inline bool is_loop(const Stmt::Ptr& s, const std::string& var) {
  auto* l = std::get_if<Stmt::Loop>(&s->node);
  return l && l->var == var;
}
inline bool assigns_to(const Stmt::Ptr& s, const std::string& buf) {
  auto* a = std::get_if<Stmt::Assign>(&s->node);
  return a && a->buffer == buf;
}
inline bool reads_buffer(const Stmt::Ptr& s, const std::string& buf) {
  std::vector<Access> accs;
  SymEnv env;
  int synth = 0;
  collect_accesses(s, accs, env, synth);
  for (const auto& a : accs)
    if (a.buffer == buf && (!a.is_write || a.is_reduce)) return true;
  return false;
}
inline bool calls_with_window(const Stmt::Ptr& s, const std::string& instr,
                              const std::string& buf) {
  auto* c = std::get_if<Stmt::InstrCall>(&s->node);
  if (!c || c->instr != instr) return false;
  for (const auto& op : c->operands)
    if (op.window.buffer == buf) return true;
  return false;
}

// Loop with variable `var` whose subtree satisfies pred.
inline Cursor loop_where(Scheduler& s, const std::string& var,
                         const std::function<bool(const Stmt::Ptr&)>& pred,
                         const std::string& what) {
  StmtPath path = find_one(
      s.proc(),
      [&](const Stmt::Ptr& st) { return is_loop(st, var) && subtree_any(st, pred); }, what);
  return s.cursor_at(path);
}

// The loop whose body is exactly the given var's loop (for sinking a loop
// outward one level at a time).
inline Cursor parent_of_loop(Scheduler& s, const std::string& var) {
  StmtPath path = find_one(
      s.proc(),
      [&](const Stmt::Ptr& st) {
        auto* l = std::get_if<Stmt::Loop>(&st->node);
        return l && l->body.size() == 1 && is_loop(l->body[0], var);
      },
      "parent of loop '" + var + "'");
  return s.cursor_at(path);
}

inline Cursor assign_where(Scheduler& s, const std::string& buf,
                           const std::function<bool(const Stmt::Ptr&)>& pred,
                           const std::string& what) {
  StmtPath path = find_one(
      s.proc(), [&](const Stmt::Ptr& st) { return assigns_to(st, buf) && pred(st); }, what);
  return s.cursor_at(path);
}

// ---------------------------------------------------------------------------
// base procs

inline Proc base_unit(Precision prec) {
  Proc p;
  p.name = "ukernel";
  p.size_params = {"M_R", "N_R", "K_R"};
  auto buf = [&](const char* n, AffineExpr d0, AffineExpr d1, bool ro) {
    BufferDecl d;
    d.name = n;
    d.dims = {d0, d1};
    d.precision = prec;
    d.read_only = ro;
    return d;
  };
  p.args = {buf("C", aff("N_R"), aff("M_R"), false), buf("A", aff("K_R"), aff("M_R"), true),
            buf("B", aff("K_R"), aff("N_R"), true)};
  p.body = {Stmt::loop(
      "k", aff("K_R"),
      {Stmt::loop(
          "j", aff("N_R"),
          {Stmt::loop("i", aff("M_R"),
                      {Stmt::reduce("C", {aff("j"), aff("i")},
                                    Expr::binary('*', Expr::read("A", {aff("k"), aff("i")}),
                                                 Expr::read("B", {aff("k"), aff("j")})))})})})};
  return p;
}

inline Proc base_generic(Precision prec) {
  Proc p;
  p.name = "ukernel";
  p.size_params = {"M_R", "N_R", "K_R"};
  auto buf = [&](const char* n, std::vector<AffineExpr> dims, bool ro) {
    BufferDecl d;
    d.name = n;
    d.dims = std::move(dims);
    d.precision = prec;
    d.read_only = ro;
    return d;
  };
  p.args = {buf("alpha", {}, true),
            buf("beta", {}, true),
            buf("C", {aff("N_R"), aff("M_R")}, false),
            buf("A", {aff("K_R"), aff("M_R")}, true),
            buf("B", {aff("K_R"), aff("N_R")}, true)};
  BufferDecl cb = buf("C_b", {aff("N_R"), aff("M_R")}, false);
  BufferDecl ba = buf("B_a", {aff("K_R"), aff("N_R")}, false);
  p.body = {
      Stmt::alloc(cb),
      Stmt::alloc(ba),
      // C_b = beta * C
      Stmt::loop("jc", aff("N_R"),
                 {Stmt::loop("ic", aff("M_R"),
                             {Stmt::assign("C_b", {aff("jc"), aff("ic")},
                                           Expr::binary('*', Expr::read("beta", {}),
                                                        Expr::read("C", {aff("jc"), aff("ic")})))})}),
      // B_a = alpha * B
      Stmt::loop("kb", aff("K_R"),
                 {Stmt::loop("jb", aff("N_R"),
                             {Stmt::assign("B_a", {aff("kb"), aff("jb")},
                                           Expr::binary('*', Expr::read("alpha", {}),
                                                        Expr::read("B", {aff("kb"), aff("jb")})))})}),
      // C_b += A * B_a
      Stmt::loop(
          "k", aff("K_R"),
          {Stmt::loop(
              "j", aff("N_R"),
              {Stmt::loop("i", aff("M_R"),
                          {Stmt::reduce("C_b", {aff("j"), aff("i")},
                                        Expr::binary('*', Expr::read("A", {aff("k"), aff("i")}),
                                                     Expr::read("B_a", {aff("k"), aff("j")})))})})}),
      // C = C_b
      Stmt::loop("jw", aff("N_R"),
                 {Stmt::loop("iw", aff("M_R"),
                             {Stmt::assign("C", {aff("jw"), aff("iw")},
                                           Expr::read("C_b", {aff("jw"), aff("iw")}))})}),
  };
  return p;
}

}  // namespace recipes

inline Proc base_proc(const KernelSpec& spec) {
  return spec.generic_alpha_beta ? recipes::base_generic(spec.precision)
                                 : recipes::base_unit(spec.precision);
}

// ---------------------------------------------------------------------------
// spec validation

inline void validate_spec(const KernelSpec& spec) {
  const TargetLibrary& lib = get_target(spec.target);
  const MemSpace& space = recipes::reg_space(lib);
  int vl = space.lanes;
  if (spec.mr < 1 || spec.nr < 1)
    fail(ErrKind::ValidationError, "kernel dimensions must be positive");
  if (space.lane_precision != spec.precision)
    fail(ErrKind::ValidationError, "target '" + spec.target + "' carries " +
                                       std::string(precision_name(space.lane_precision)) +
                                       " lanes, not " + precision_name(spec.precision));
  if (spec.packed_a && spec.mr % vl != 0)
    fail(ErrKind::ValidationError,
         "vector length " + std::to_string(vl) + " does not divide MR=" +
             std::to_string(spec.mr) + "; use --no-packed-a for the broadcast variant");
}

namespace recipes {

// ---------------------------------------------------------------------------
// pass vectorization helpers (generic alpha/beta mode)

// Vectorizes `for <outer..>: for <axis>: DST[..] = scalar * SRC[..]` into
// zero + broadcast-FMA form: per tile one load, one zero, one FMA, one store,
// with the scalar broadcast once at the top of the proc.
struct ScalePass {
  std::string dst, src, scalar;
  std::string axis;    // inner loop variable, divided by the vector length
  int axis_dim;        // dimension of dst/src indexed by the axis
  std::string other;   // the other indexing variable
  std::string prefix;  // temporary name prefix
  int depth;           // loops enclosing the axis loop before division
};

inline std::string range_window(const std::string& buf, const ScalePass& d, int vl,
                                const std::string& tvar) {
  std::string lo = affine_to_string(aff(tvar, vl));
  std::string hi = affine_to_string(aff(tvar, vl) + aff(vl));
  std::string range = lo + ":" + hi;
  if (d.axis_dim == 0) return buf + "[" + range + ", " + d.other + "]";
  return buf + "[" + d.other + ", " + range + "]";
}

inline void vectorize_scale_pass(Scheduler& s, const ScalePass& d) {
  const TargetLibrary& lib = s.lib();
  const MemSpace& space = reg_space(lib);
  int vl = space.lanes;
  Precision prec = space.lane_precision;
  std::string t = d.axis + "t", tt = d.axis + "tt";
  std::string acc = d.prefix + "_acc", ld = d.prefix + "_ld", sc = d.prefix + "_s";

  s.divide_loop(Cursor("for " + d.axis + " in _: _", 1), vl, t, tt);
  s.stage_mem(loop_where(s, tt, [&](const Stmt::Ptr& st) { return assigns_to(st, d.dst); },
                         "pass body loop"),
              range_window(d.dst, d, vl, t), acc);
  // the accumulator must sit above the loops the scalar broadcast crosses
  s.lift_alloc(Cursor(acc + " : _", 1), d.depth);
  s.bind_expr(d.scalar, 1, sc);
  s.expand_dim(Cursor(sc + " : _", 1), aff(vl), aff(tt));
  s.lift_alloc(Cursor(sc + " : _", 1), d.depth + 1);
  s.fission(assign_where(s, sc, [](const Stmt::Ptr&) { return true; }, "scalar broadcast"),
            /*after=*/true, d.depth + 1);
  s.stage_mem(loop_where(s, tt, [&](const Stmt::Ptr& st) { return assigns_to(st, acc); },
                         "pass compute loop"),
              range_window(d.src, d, vl, t), ld);
  s.replace(loop_where(s, tt, [&](const Stmt::Ptr& st) { return assigns_to(st, sc); },
                       "scalar dup loop"),
            instr_name(lib, InstrKind::dup, prec));
  s.set_memory(Cursor(sc + " : _", 1), space.name);
  s.assign_to_reduce(assign_where(s, acc, [&](const Stmt::Ptr& st) { return reads_buffer(st, sc); },
                                  "scaled assign"));
  s.fission(assign_where(
                s, acc,
                [](const Stmt::Ptr& st) {
                  const auto& a = std::get<Stmt::Assign>(st->node);
                  auto* c = std::get_if<Expr::Const>(&a.value->node);
                  return c && c->value == Rational(0);
                },
                "zero fill"),
            /*after=*/true, 1);
  s.replace(loop_where(s, tt,
                       [&](const Stmt::Ptr& st) {
                         auto* a = std::get_if<Stmt::Assign>(&st->node);
                         return a && a->buffer == acc &&
                                std::get_if<Expr::Const>(&a->value->node) != nullptr;
                       },
                       "zero loop"),
            instr_name(lib, InstrKind::zero, prec));
  s.replace(loop_where(s, tt,
                       [&](const Stmt::Ptr& st) {
                         return std::holds_alternative<Stmt::Reduce>(st->node);
                       },
                       "scale FMA loop"),
            instr_name(lib, InstrKind::fma_broadcast, prec));
  // copy-in of the source and copy-back into the destination
  s.replace(loop_where(s, ld + "_i0", [&](const Stmt::Ptr& st) { return assigns_to(st, ld); },
                       "pass load loop"),
            instr_name(lib, InstrKind::load, prec));
  s.replace(loop_where(s, acc + "_i0", [&](const Stmt::Ptr& st) { return assigns_to(st, d.dst); },
                       "pass store loop"),
            instr_name(lib, InstrKind::store, prec));
  s.set_memory(Cursor(acc + " : _", 1), space.name);
  s.set_memory(Cursor(ld + " : _", 1), space.name);
}

// Vectorizes the plain copy `DST[..] = SRC[..]` (the write-back pass).
inline void vectorize_copy_pass(Scheduler& s, const ScalePass& d) {
  const TargetLibrary& lib = s.lib();
  const MemSpace& space = reg_space(lib);
  int vl = space.lanes;
  Precision prec = space.lane_precision;
  std::string t = d.axis + "t", tt = d.axis + "tt";
  std::string ld = d.prefix + "_ld";

  s.divide_loop(Cursor("for " + d.axis + " in _: _", 1), vl, t, tt);
  s.stage_mem(loop_where(s, tt, [&](const Stmt::Ptr& st) { return assigns_to(st, d.dst); },
                         "copy pass loop"),
              range_window(d.src, d, vl, t), ld);
  s.replace(loop_where(s, ld + "_i0", [&](const Stmt::Ptr& st) { return assigns_to(st, ld); },
                       "copy pass load"),
            instr_name(lib, InstrKind::load, prec));
  s.replace(loop_where(s, tt, [&](const Stmt::Ptr& st) { return assigns_to(st, d.dst); },
                       "copy pass store"),
            instr_name(lib, InstrKind::store, prec));
  s.set_memory(Cursor(ld + " : _", 1), space.name);
}

// ---------------------------------------------------------------------------
// main-nest builders

struct MainNames {
  std::string out;  // C (unit) or C_b (generic)
  std::string b;    // B (unit) or B_a (generic)
};

// Stages C into a register tile across the k loop. On entry the main nest is
// k { <split j/i loops> }; the k loop is first sunk innermost so the staged
// window is loop-invariant across it, then restored after the tile loads and
// stores have been fissioned out to the top.
inline void stage_c_tile(Scheduler& s, const MainNames& n, const std::string& window,
                         const std::vector<std::pair<AffineExpr, AffineExpr>>& expansions,
                         int spatial_depth) {
  for (int i = 0; i < spatial_depth; ++i) s.reorder_loops(Cursor("for k in _: _", 1));
  s.stage_mem(Cursor("for k in _: _", 1), window, "C_reg");
  for (const auto& [dim, idx] : expansions) s.expand_dim(Cursor("C_reg : _", 1), dim, idx);
  s.lift_alloc(Cursor("C_reg : _", 1), spatial_depth);
  s.fission(Cursor("C_reg[_] = _", 1), /*after=*/true, spatial_depth);
  s.fission(assign_where(s, n.out,
                         [&](const Stmt::Ptr& st) { return reads_buffer(st, "C_reg"); },
                         "C tile store"),
            /*after=*/false, spatial_depth);
  for (int i = 0; i < spatial_depth; ++i) s.reorder_loops(parent_of_loop(s, "k"));
}

struct OperandStage {
  std::string buffer;     // A or B/B_a
  std::string window;     // staged element, e.g. A[k, 4 * it + itt]
  std::string reg;        // A_reg / B_reg
  AffineExpr lane_dim;    // innermost expansion (vector length)
  std::string lane_var;   // loop var of the lane dimension
  AffineExpr outer_dim;   // second expansion
  AffineExpr outer_index;
  int fission_levels;     // spatial loops between the load and the k loop
};

inline void stage_operand(Scheduler& s, const MainNames&, const OperandStage& d) {
  s.stage_mem(Cursor("C_reg[_] += _", 1), d.window, d.reg);
  s.expand_dim(Cursor(d.reg + " : _", 1), d.lane_dim, aff(d.lane_var));
  s.expand_dim(Cursor(d.reg + " : _", 1), d.outer_dim, d.outer_index);
  s.lift_alloc(Cursor(d.reg + " : _", 1), d.fission_levels + 1);
  s.fission(Cursor(d.reg + "[_] = _", 1), /*after=*/true, d.fission_levels);
}

}  // namespace recipes

// ---------------------------------------------------------------------------
// the schedule builders

// Packed-A kernels. With a lane FMA and VL | NR this is the canonical
// recipe; otherwise B elements are broadcast and the elementwise FMA is used.
inline Scheduler schedule_packed(const KernelSpec& spec) {
  using namespace recipes;
  validate_spec(spec);
  if (!spec.packed_a)
    fail(ErrKind::ValidationError, "schedule_packed needs a packed-A spec");
  const TargetLibrary& lib = get_target(spec.target);
  const MemSpace& space = reg_space(lib);
  const int vl = space.lanes;
  const int mr = spec.mr, nr = spec.nr;
  const Precision prec = spec.precision;
  const bool lane_path = lib.find_kind(InstrKind::fma_lane, prec) != nullptr && nr % vl == 0;
  const MainNames names{spec.generic_alpha_beta ? "C_b" : "C",
                        spec.generic_alpha_beta ? "B_a" : "B"};
  const std::string vld = instr_name(lib, InstrKind::load, prec);
  const std::string vst = instr_name(lib, InstrKind::store, prec);

  Scheduler s(base_proc(spec), lib);
  s.phase("v1");
  s.rename(kernel_symbol(spec));
  s.partial_eval({{"M_R", mr}, {"N_R", nr}});

  s.phase("v2");
  s.divide_loop(Cursor("for i in _: _", 1), vl, "it", "itt");
  if (lane_path) s.divide_loop(Cursor("for j in _: _", 1), vl, "jt", "jtt");
  if (spec.generic_alpha_beta) {
    // the scale and write-back passes split the same way
    vectorize_scale_pass(s, ScalePass{"C_b", "C", "beta", "ic", 1, "jc", "cb", 2});
    if (nr % vl == 0) vectorize_scale_pass(s, ScalePass{"B_a", "B", "alpha", "jb", 1, "kb", "ba", 2});
    vectorize_copy_pass(s, ScalePass{"C", "C_b", "", "iw", 1, "jw", "wb", 2});
  }

  s.phase("v3");
  const int spatial = lane_path ? 4 : 3;  // loops around the register tile
  if (lane_path) {
    stage_c_tile(s, names,
                 names.out + "[" + affine_to_string(aff("jt", vl) + aff("jtt")) + ", " +
                     affine_to_string(aff("it", vl) + aff("itt")) + "]",
                 {{aff(vl), aff("itt")},
                  {aff(mr / vl), aff("it")},
                  {aff(nr), aff("jt", vl) + aff("jtt")}},
                 spatial);
  } else {
    stage_c_tile(s, names,
                 names.out + "[j, " + affine_to_string(aff("it", vl) + aff("itt")) + "]",
                 {{aff(vl), aff("itt")}, {aff(mr / vl), aff("it")}, {aff(nr), aff("j")}},
                 spatial);
  }
  s.replace(loop_where(s, "itt", [&](const Stmt::Ptr& st) { return assigns_to(st, "C_reg"); },
                       "C load loop"),
            vld);
  s.replace(loop_where(s, "itt", [&](const Stmt::Ptr& st) { return assigns_to(st, names.out); },
                       "C store loop"),
            vst);
  s.set_memory(Cursor("C_reg : _", 1), space.name);

  s.phase("v4");
  stage_operand(s, names,
                OperandStage{"A",
                             "A[k, " + affine_to_string(aff("it", vl) + aff("itt")) + "]",
                             "A_reg", aff(vl), "itt", aff(mr / vl), aff("it"), spatial});
  s.replace(loop_where(s, "itt", [&](const Stmt::Ptr& st) { return assigns_to(st, "A_reg"); },
                       "A load loop"),
            vld);
  s.set_memory(Cursor("A_reg : _", 1), space.name);
  if (lane_path) {
    stage_operand(s, names,
                  OperandStage{names.b,
                               names.b + "[k, " + affine_to_string(aff("jt", vl) + aff("jtt")) +
                                   "]",
                               "B_reg", aff(vl), "jtt", aff(nr / vl), aff("jt"), spatial});
    s.replace(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "B_reg"); },
                         "B load loop"),
              vld);
  } else {
    // broadcast B: expand the staged element over the lane axis itt
    stage_operand(s, names,
                  OperandStage{names.b, names.b + "[k, j]", "B_reg", aff(vl), "itt", aff(nr),
                               aff("j"), spatial});
    s.replace(loop_where(s, "itt", [&](const Stmt::Ptr& st) { return assigns_to(st, "B_reg"); },
                         "B dup loop"),
              instr_name(lib, InstrKind::dup, prec));
  }
  s.set_memory(Cursor("B_reg : _", 1), space.name);

  s.phase("v5");
  auto is_main_reduce = [&](const Stmt::Ptr& st) {
    return std::holds_alternative<Stmt::Reduce>(st->node) &&
           std::get<Stmt::Reduce>(st->node).buffer == "C_reg";
  };
  if (lane_path) {
    // make the B lane index the innermost sequence: swap jtt with it
    s.reorder_loops(loop_where(s, "jtt", is_main_reduce, "compute jtt loop"));
    s.replace(loop_where(s, "itt", is_main_reduce, "compute lane loop"),
              instr_name(lib, InstrKind::fma_lane, prec));
  } else {
    s.replace(loop_where(s, "itt", is_main_reduce, "compute lane loop"),
              instr_name(lib, InstrKind::fma_broadcast, prec));
  }
  const std::string fma = instr_name(
      lib, lane_path ? InstrKind::fma_lane : InstrKind::fma_broadcast, prec);

  s.phase("v6");
  auto unroll_nest = [&](std::vector<std::string> vars, const std::string& instr,
                         const std::string& buf) {
    for (const auto& v : vars) {
      s.unroll_loop(loop_where(
          s, v, [&](const Stmt::Ptr& st) { return calls_with_window(st, instr, buf); },
          "unroll " + v + " around " + instr));
    }
  };
  // operand loads first (the paper's unrolling step), then the compute tile
  // and the C loads/stores so text-level instruction counts match the tile
  unroll_nest({"it"}, vld, "A_reg");
  if (lane_path)
    unroll_nest({"jt"}, vld, "B_reg");
  else
    unroll_nest({"j"}, instr_name(lib, InstrKind::dup, prec), "B_reg");
  if (lane_path) {
    unroll_nest({"jtt", "it", "jt"}, fma, "C_reg");
    unroll_nest({"it", "jtt", "jt"}, vld, "C_reg");
    unroll_nest({"it", "jtt", "jt"}, vst, "C_reg");
  } else {
    unroll_nest({"it", "j"}, fma, "C_reg");
    unroll_nest({"it", "j"}, vld, "C_reg");
    unroll_nest({"it", "j"}, vst, "C_reg");
  }
  return s;
}

// Unpacked-A kernels: the i loop stays whole, A is broadcast per row. Only
// single-row kernels vectorize; wider ones stay scalar.
inline Scheduler schedule_broadcast(const KernelSpec& spec) {
  using namespace recipes;
  validate_spec(spec);
  const TargetLibrary& lib = get_target(spec.target);
  const MemSpace& space = reg_space(lib);
  const int vl = space.lanes;
  const int mr = spec.mr, nr = spec.nr;
  const Precision prec = spec.precision;
  const MainNames names{spec.generic_alpha_beta ? "C_b" : "C",
                        spec.generic_alpha_beta ? "B_a" : "B"};
  const std::string vld = instr_name(lib, InstrKind::load, prec);
  const std::string vst = instr_name(lib, InstrKind::store, prec);
  const std::string dup = instr_name(lib, InstrKind::dup, prec);

  Scheduler s(base_proc(spec), lib);
  s.phase("v1");
  s.rename(kernel_symbol(spec));
  s.partial_eval({{"M_R", mr}, {"N_R", nr}});

  if (mr != 1 || nr % vl != 0) {
    // only single-row tiles with a vector-multiple width vectorize on the
    // broadcast path; everything else stays scalar (plain emitted loops)
    for (const char* ph : {"v2", "v3", "v4", "v5", "v6"}) s.phase(ph);
    return s;
  }

  s.phase("v2");
  s.divide_loop(Cursor("for j in _: _", 1), vl, "jt", "jtt");
  if (spec.generic_alpha_beta) {
    // with a single row, C_b and C vectorize along j
    s.reorder_loops(Cursor("for jc in _: _", 1));
    vectorize_scale_pass(s, ScalePass{"C_b", "C", "beta", "jc", 0, "ic", "cb", 2});
    vectorize_scale_pass(s, ScalePass{"B_a", "B", "alpha", "jb", 1, "kb", "ba", 2});
    s.reorder_loops(Cursor("for jw in _: _", 1));
    vectorize_copy_pass(s, ScalePass{"C", "C_b", "", "jw", 0, "iw", "wb", 2});
  }

  s.phase("v3");
  stage_c_tile(s, names,
               names.out + "[" + affine_to_string(aff("jt", vl) + aff("jtt")) + ", i]",
               {{aff(vl), aff("jtt")}, {aff(mr), aff("i")}, {aff(nr / vl), aff("jt")}}, 3);
  // the C rows are contiguous along j only because MR == 1; bring jtt inward
  s.reorder_loops(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "C_reg"); },
                             "C load nest"));
  s.replace(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "C_reg"); },
                       "C load loop"),
            vld);
  s.reorder_loops(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, names.out); },
                             "C store nest"));
  s.replace(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, names.out); },
                       "C store loop"),
            vst);
  s.set_memory(Cursor("C_reg : _", 1), space.name);

  s.phase("v4");
  // A broadcast: one register per row, all lanes equal
  stage_operand(s, names,
                OperandStage{"A", "A[k, i]", "A_reg", aff(vl), "jtt", aff(mr), aff("i"), 3});
  s.reorder_loops(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "A_reg"); },
                             "A dup nest"));
  s.replace(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "A_reg"); },
                       "A dup loop"),
            dup);
  s.set_memory(Cursor("A_reg : _", 1), space.name);
  stage_operand(s, names,
                OperandStage{names.b,
                             names.b + "[k, " + affine_to_string(aff("jt", vl) + aff("jtt")) + "]",
                             "B_reg", aff(vl), "jtt", aff(nr / vl), aff("jt"), 3});
  s.replace(loop_where(s, "jtt", [&](const Stmt::Ptr& st) { return assigns_to(st, "B_reg"); },
                       "B load loop"),
            vld);
  s.set_memory(Cursor("B_reg : _", 1), space.name);

  s.phase("v5");
  auto is_main_reduce = [&](const Stmt::Ptr& st) {
    return std::holds_alternative<Stmt::Reduce>(st->node) &&
           std::get<Stmt::Reduce>(st->node).buffer == "C_reg";
  };
  s.reorder_loops(loop_where(s, "jtt", is_main_reduce, "compute jtt loop"));
  const std::string fma = instr_name(lib, InstrKind::fma_broadcast, prec);
  s.replace(loop_where(s, "jtt", is_main_reduce, "compute lane loop"), fma);

  s.phase("v6");
  auto unroll_nest = [&](std::vector<std::string> vars, const std::string& instr,
                         const std::string& buf) {
    for (const auto& v : vars)
      s.unroll_loop(loop_where(
          s, v, [&](const Stmt::Ptr& st) { return calls_with_window(st, instr, buf); },
          "unroll " + v + " around " + instr));
  };
  unroll_nest({"i"}, dup, "A_reg");
  unroll_nest({"jt"}, vld, "B_reg");
  unroll_nest({"i", "jt"}, fma, "C_reg");
  unroll_nest({"i", "jt"}, vld, "C_reg");
  unroll_nest({"i", "jt"}, vst, "C_reg");
  return s;
}

inline Scheduler schedule_kernel(const KernelSpec& spec) {
  return spec.packed_a ? schedule_packed(spec) : schedule_broadcast(spec);
}

// ---------------------------------------------------------------------------
// structural counts and presets

struct KernelCounts {
  int k_loads = 0;   // vector loads per k iteration (A and B)
  int k_dups = 0;    // broadcasts per k iteration
  int k_fmas = 0;    // FMA calls per k iteration
  int c_loads = 0;   // C tile loads outside the k loop
  int c_stores = 0;  // C tile stores outside the k loop
};

// Counts instruction calls by position relative to the main k loop.
inline KernelCounts count_kernel_calls(const Proc& p, const TargetLibrary& lib) {
  KernelCounts out;
  StmtPath kpath;
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath& path) {
    if (recipes::is_loop(s, "k")) {
      kpath = path;
      return false;
    }
    return true;
  });
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath& path) {
    auto* call = std::get_if<Stmt::InstrCall>(&s->node);
    if (!call) return true;
    const InstrDef* def = lib.find_instr(call->instr);
    bool inside_k = path.size() > kpath.size() &&
                    std::equal(kpath.begin(), kpath.end(), path.begin());
    if (inside_k) {
      if (def->kind == InstrKind::load) ++out.k_loads;
      if (def->kind == InstrKind::dup) ++out.k_dups;
      if (def->kind == InstrKind::fma_lane || def->kind == InstrKind::fma_broadcast)
        ++out.k_fmas;
    } else {
      // only count the C tile traffic, not the alpha/beta passes
      bool touches_c_reg = false;
      for (const auto& op : call->operands)
        if (op.window.buffer == "C_reg") touches_c_reg = true;
      if (touches_c_reg && def->kind == InstrKind::load) ++out.c_loads;
      if (touches_c_reg && def->kind == InstrKind::store) ++out.c_stores;
    }
    return true;
  });
  return out;
}

// Distinct live vector registers: the product of every register allocation's
// dims except the lane dimension.
inline long long register_count(const Proc& p) {
  long long total = 0;
  walk_stmts(p, [&](const Stmt::Ptr& s, const StmtPath&) {
    if (auto* al = std::get_if<Stmt::Alloc>(&s->node)) {
      if (al->decl.memspace.kind == MemSpace::vector_register) {
        long long regs = 1;
        for (size_t d = 0; d + 1 < al->decl.dims.size(); ++d) {
          if (!al->decl.dims[d].is_constant())
            fail(ErrKind::NonConstRegisterDim, "register dims must be constant");
          regs *= al->decl.dims[d].constant;
        }
        total += regs;
      }
    }
    return true;
  });
  return total;
}

// Named kernel families. The paper family covers the edge cases the shape
// workloads need.
inline std::vector<std::pair<int, int>> preset_members(const std::string& name) {
  if (name == "paper-8x12") return {{8, 12}};
  if (name == "paper-family")
    return {{8, 12}, {8, 4}, {4, 4}, {4, 8}, {4, 12}, {1, 8}, {1, 12}};
  if (name == "vgg-family") return {{8, 12}, {8, 4}, {4, 12}, {4, 4}};
  if (name == "full-family") {
    // closed under arbitrary edges: single-column tiles complete the grid
    std::vector<std::pair<int, int>> out;
    for (int mr : {8, 4, 1})
      for (int nr : {12, 8, 4, 1}) out.push_back({mr, nr});
    return out;
  }
  fail(ErrKind::ValidationError, "unknown preset '" + name + "'");
}

inline KernelSpec spec_for(int mr, int nr, Precision prec = Precision::f32,
                           const std::string& target = "neon_f32", bool generic = false) {
  KernelSpec s;
  s.mr = mr;
  s.nr = nr;
  s.precision = prec;
  s.target = target;
  int vl = recipes::reg_space(get_target(target)).lanes;
  s.packed_a = mr % vl == 0;
  s.generic_alpha_beta = generic;
  return s;
}

// ---------------------------------------------------------------------------
// family generation: schedule and emit every spec, collecting per-spec
// failures instead of aborting the batch.

struct GeneratedKernel {
  KernelSpec spec;
  Proc proc;
  ScheduleScript script;
  std::vector<std::pair<std::string, Proc>> phases;
  EmittedUnit unit;
};

struct FamilyResult {
  std::vector<GeneratedKernel> kernels;
  std::map<std::string, std::string> errors;  // symbol -> message

  bool ok() const { return errors.empty(); }
};

inline FamilyResult generate_family(const std::vector<KernelSpec>& specs) {
  FamilyResult out;
  for (const auto& spec : specs) {
    std::string symbol = kernel_symbol(spec);
    try {
      Scheduler s = schedule_kernel(spec);
      GeneratedKernel g;
      g.spec = spec;
      g.proc = s.proc();
      g.script = s.script();
      g.phases = s.phase_procs();
      g.unit = emit(g.proc, s.lib());
      out.kernels.push_back(std::move(g));
    } catch (const Error& e) {
      out.errors[symbol] = e.what();
    }
  }
  return out;
}

}  // namespace ukgen
