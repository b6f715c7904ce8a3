#include <doctest.h>

#include "helpers.hpp"
#include "ukgen/interp.hpp"
#include "ukgen/script.hpp"

using namespace ukgen;
using namespace testutil;

namespace {

const TargetLibrary& neon() { return get_target("neon_f32"); }

Proc ukernel_8x12() { return partial_eval(naive_ukernel(), {{"M_R", 8}, {"N_R", 12}}); }

void check_equivalent(const Proc& a, const Proc& b, int trials = 10) {
  EquivReport rep = equivalent(a, b, trials, ValueMode::integer_exact, neon());
  CHECK_MESSAGE(rep.equivalent, rep.to_line());
}

}  // namespace

TEST_CASE("rename changes only the name") {
  Proc p = naive_ukernel();
  Proc q = rename_proc(p, "ukernel_8x12");
  CHECK(q.name == "ukernel_8x12");
  CHECK(proc_equal_modulo_name(p, q));
  Proc r = rename_proc(q, "other");
  CHECK(r.name == "other");
  check_equivalent(p, r, 4);
}

TEST_CASE("partial_eval freezes size parameters") {
  Proc p = naive_ukernel();
  Proc q = partial_eval(p, {{"M_R", 8}, {"N_R", 12}});
  CHECK(q.size_params == std::vector<std::string>{"K_R"});
  const Stmt::Loop& k = std::get<Stmt::Loop>(q.body[0]->node);
  const Stmt::Loop& j = std::get<Stmt::Loop>(k.body[0]->node);
  CHECK(j.bound == AffineExpr::cst(12));
  CHECK(proc_equal(partial_eval(p, {}), p));
  CHECK_THROWS_AS(partial_eval(p, {{"Z", 3}}), Error);
  CHECK_THROWS_AS(partial_eval(p, {{"M_R", 0}}), Error);

  // run(partial_eval(p, v), b) == run(p, b + v), bitwise
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> val(-2, 2);
  Bindings b;
  b.sizes = {{"K_R", 5}};
  auto fill = [&](std::vector<long long> dims) {
    ConcreteBuffer buf = ConcreteBuffer::zeros(dims);
    for (auto& x : buf.data) x = float(val(rng));
    return buf;
  };
  b.buffers["C"] = fill({12, 8});
  b.buffers["A"] = fill({5, 8});
  b.buffers["B"] = fill({5, 12});
  Bindings bfull = b;
  bfull.sizes["M_R"] = 8;
  bfull.sizes["N_R"] = 12;
  CHECK(run(q, b, neon()).buffers.at("C").data == run(p, bfull, neon()).buffers.at("C").data);
}

TEST_CASE("divide_loop performs perfect splits") {
  Proc p = ukernel_8x12();
  Proc q = divide_loop(p, Cursor("for i in _: _", 1), 4, "it", "itt");
  // for i in 0..8 -> for it in 0..2 { for itt in 0..4 }
  StmtPath it_path = resolve_cursor(q, Cursor("for it in _: _"));
  const Stmt::Loop& it = std::get<Stmt::Loop>(stmt_at(q, it_path)->node);
  CHECK(it.bound == AffineExpr::cst(2));
  const Stmt::Loop& itt = std::get<Stmt::Loop>(it.body[0]->node);
  CHECK(itt.bound == AffineExpr::cst(4));
  const Stmt::Reduce& red = std::get<Stmt::Reduce>(itt.body[0]->node);
  CHECK(red.index[1] == AffineExpr::sym("it", 4) + AffineExpr::sym("itt"));
  check_equivalent(p, q);

  Proc r = divide_loop(p, Cursor("for j in _: _", 1), 12, "jt", "jtt");
  CHECK(std::get<Stmt::Loop>(stmt_at(r, resolve_cursor(r, Cursor("for jt in _: _")))->node)
            .bound == AffineExpr::cst(1));

  CHECK_THROWS_AS(divide_loop(p, Cursor("for j in _: _", 1), 5, "a", "b"), Error);
  try {
    divide_loop(p, Cursor("for j in _: _", 1), 5, "a", "b");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NonDivisible);
  }
  // non-constant bound
  try {
    divide_loop(p, Cursor("for k in _: _", 1), 4, "a", "b");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NonConstantBound);
  }
}

TEST_CASE("reorder_loops swaps a perfect nest and is an involution") {
  Proc p = ukernel_8x12();
  Proc q = reorder_loops(p, Cursor("for j in _: _", 1));
  // order was k, j, i; now k, i, j
  const Stmt::Loop& k = std::get<Stmt::Loop>(q.body[0]->node);
  const Stmt::Loop& i = std::get<Stmt::Loop>(k.body[0]->node);
  CHECK(i.var == "i");
  CHECK(std::get<Stmt::Loop>(i.body[0]->node).var == "j");
  check_equivalent(p, q);
  Proc r = reorder_loops(q, Cursor("for i in _: _", 1));
  CHECK(proc_equal(r, p));

  // not perfectly nested: the i loop's body is the reduce, not a loop
  try {
    reorder_loops(p, Cursor("for i in _: _", 1));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NotPerfectlyNested);
  }
}

TEST_CASE("reorder_loops refuses colliding assignments") {
  // for a in 0..4: for b in 0..4: X[a] = Y[b]  -- same cell written across b
  Proc p;
  p.name = "collide";
  p.args = {dram_buf("X", {aff(4)}, false), dram_buf("Y", {aff(4)}, true)};
  p.body = {Stmt::loop(
      "a", aff(4),
      {Stmt::loop("b", aff(4),
                  {Stmt::assign("X", {aff("a")}, Expr::read("Y", {aff("b")}))})})};
  REQUIRE(well_formed(p).empty());
  try {
    reorder_loops(p, Cursor("for a in _: _", 1));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::DependenceViolation);
  }
}

TEST_CASE("stage_mem stages a full window across the k loop") {
  Proc p = ukernel_8x12();
  Proc q = stage_mem(p, Cursor("for k in _: _", 1), "C[0:12, 0:8]", "C_reg");
  // body: alloc, copy-in nest, k loop, copy-back nest
  REQUIRE(q.body.size() == 4);
  const auto& al = std::get<Stmt::Alloc>(q.body[0]->node);
  CHECK(al.decl.name == "C_reg");
  CHECK(al.decl.dims == std::vector<AffineExpr>{aff(12), aff(8)});
  CHECK(std::holds_alternative<Stmt::Loop>(q.body[1]->node));
  // the reduction now targets C_reg
  CHECK(find_all(q, "C_reg[_] += _").size() == 1);
  CHECK(find_all(q, "C[_] += _").empty());
  check_equivalent(p, q);
}

TEST_CASE("stage_mem of a read-only window emits no copy-back") {
  Proc p = ukernel_8x12();
  // stage the B row used by one k iteration across the j loop
  Proc q = stage_mem(p, Cursor("for j in _: _", 1), "B[k, 0:12]", "B_row");
  const Stmt::Loop& k = std::get<Stmt::Loop>(q.body[0]->node);
  REQUIRE(k.body.size() == 3);  // alloc, copy-in, j loop; no copy-back
  CHECK(std::holds_alternative<Stmt::Alloc>(k.body[0]->node));
  CHECK(find_all(q, "B_row[_] = _").size() == 1);
  check_equivalent(p, q);
}

TEST_CASE("stage_mem rejects escaping accesses") {
  Proc p = ukernel_8x12();
  try {
    stage_mem(p, Cursor("for k in _: _", 1), "C[0:12, 0:4]", "C_reg");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::WindowEscapes);
  }
}

TEST_CASE("point staging plus expand_dim rebuilds the register tile") {
  Proc p = ukernel_8x12();
  p = divide_loop(p, Cursor("for i in _: _", 1), 4, "it", "itt");
  p = divide_loop(p, Cursor("for j in _: _", 1), 4, "jt", "jtt");
  Proc q = stage_mem(p, Cursor("C[_] += _", 1), "C[4 * jt + jtt, 4 * it + itt]", "C_reg");
  // scalar staging: load, reduce, store inside the innermost loop
  CHECK(find_all(q, "C_reg += _").size() == 1);
  check_equivalent(p, q, 6);

  Proc r = expand_dim(q, Cursor("C_reg : _", 1), aff(4), aff("itt"));
  r = expand_dim(r, Cursor("C_reg : _", 1), aff(2), aff("it"));
  r = expand_dim(r, Cursor("C_reg : _", 1), aff(12), aff("jt", 4) + aff("jtt"));
  const auto& al = std::get<Stmt::Alloc>(
      stmt_at(r, resolve_cursor(r, Cursor("C_reg : _", 1)))->node);
  CHECK(al.decl.dims == std::vector<AffineExpr>{aff(12), aff(2), aff(4)});
  check_equivalent(p, r, 6);

  // an index that can exceed the new dimension is rejected
  try {
    expand_dim(q, Cursor("C_reg : _", 1), aff(3), aff("itt"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::IndexOutOfRange);
  }
  // and only allocations can be expanded
  try {
    expand_dim(q, Cursor("C[_] = _", 1), aff(2), aff(0));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() != ErrKind::IndexOutOfRange);
  }
}

TEST_CASE("expand_dim by one indexed by zero keeps semantics") {
  Proc p = ukernel_8x12();
  Proc q = stage_mem(p, Cursor("C[_] += _", 1), "C[j, i]", "acc");
  Proc r = expand_dim(q, Cursor("acc : _", 1), aff(1), aff(0));
  const auto& al = std::get<Stmt::Alloc>(
      stmt_at(r, resolve_cursor(r, Cursor("acc : _", 1)))->node);
  CHECK(al.decl.dims.size() == 1);
  check_equivalent(p, r, 6);
}

TEST_CASE("lift_alloc hoists through the requested levels") {
  Proc p = ukernel_8x12();
  Proc q = stage_mem(p, Cursor("C[_] += _", 1), "C[j, i]", "acc");
  CHECK(proc_equal(lift_alloc(q, Cursor("acc : _", 1), 0), q));
  Proc r = lift_alloc(q, Cursor("acc : _", 1), 3);
  CHECK(std::holds_alternative<Stmt::Alloc>(r.body[0]->node));
  check_equivalent(p, r, 6);
  try {
    lift_alloc(q, Cursor("acc : _", 1), 4);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::TooManyLevels);
  }
}

TEST_CASE("fission splits private iterations and hoists invariant halves") {
  // stage the A operand; its load is invariant in j, so the j level hoists
  Proc p = ukernel_8x12();
  Proc q = stage_mem(p, Cursor("C[_] += _", 1), "A[k, i]", "a_s");
  q = expand_dim(q, Cursor("a_s : _", 1), aff(8), aff("i"));
  q = lift_alloc(q, Cursor("a_s : _", 1), 3);

  // private split through i: the load separates inside j
  Proc r = fission(q, Cursor("a_s[_] = _", 1), /*after=*/true, 1);
  check_equivalent(p, r, 6);
  CHECK(find_all(r, "for i in _: _").size() == 2);

  // hoisting through j drops the loop around the j-invariant load nest
  Proc s = fission(r, Cursor("for i in _: _", 1), /*after=*/true, 1);
  check_equivalent(p, s, 6);
  const Stmt::Loop& k = std::get<Stmt::Loop>(s.body[1]->node);
  REQUIRE(k.body.size() == 2);
  CHECK(std::get<Stmt::Loop>(k.body[0]->node).var == "i");  // load nest, no j loop
  CHECK(std::get<Stmt::Loop>(k.body[1]->node).var == "j");  // compute nest
}

TEST_CASE("fission refuses an order-changing split") {
  // for i: { X[0] = Y[i]; Z[i] = X[0] }  -- X[0] differs per iteration
  Proc p;
  p.name = "seqdep";
  p.args = {dram_buf("X", {aff(1)}, false), dram_buf("Y", {aff(4)}, true),
            dram_buf("Z", {aff(4)}, false)};
  p.body = {Stmt::loop("i", aff(4),
                       {Stmt::assign("X", {aff(0)}, Expr::read("Y", {aff("i")})),
                        Stmt::assign("Z", {aff("i")}, Expr::read("X", {aff(0)}))})};
  REQUIRE(well_formed(p).empty());
  try {
    fission(p, Cursor("X[_] = _", 1), true, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::DependenceViolation);
  }
}

TEST_CASE("fission splits independent writes to disjoint buffers") {
  Proc p;
  p.name = "indep";
  p.args = {dram_buf("X", {aff(4)}, false), dram_buf("Y", {aff(4)}, false)};
  p.body = {Stmt::loop("i", aff(4),
                       {Stmt::assign("X", {aff("i")}, Expr::cst(Rational(1))),
                        Stmt::assign("Y", {aff("i")}, Expr::cst(Rational(2)))})};
  Proc q = fission(p, Cursor("X[_] = _", 1), true, 1);
  CHECK(q.body.size() == 2);
  check_equivalent(p, q, 3);
}

TEST_CASE("bind_expr stages a sub-expression through a temporary") {
  Proc p;
  p.name = "scale";
  p.args = {dram_buf("out", {aff(4)}, false), dram_buf("in", {aff(4)}, true),
            dram_buf("beta", {}, true)};
  p.body = {Stmt::loop("i", aff(4),
                       {Stmt::assign("out", {aff("i")},
                                     Expr::binary('*', Expr::read("beta", {}),
                                                  Expr::read("in", {aff("i")})))})};
  Proc q = bind_expr(p, "beta", 1, "beta_s");
  CHECK(find_all(q, "beta_s = _").size() == 1);
  CHECK(find_all(q, "beta_s : _").size() == 1);
  check_equivalent(p, q, 4);

  Proc r = bind_expr(p, "beta * in[_]", 1, "t");
  CHECK(find_all(r, "t = _").size() == 1);
  check_equivalent(p, r, 4);

  // constants bind too
  Proc c = p;
  c.body = {Stmt::loop("i", aff(4), {Stmt::assign("out", {aff("i")}, Expr::cst(Rational(7)))})};
  Proc cq = bind_expr(c, "7", 1, "seven");
  check_equivalent(c, cq, 2);

  CHECK_THROWS_AS(bind_expr(p, "alpha", 1, "x"), Error);
}

TEST_CASE("assign_to_reduce splits an assignment") {
  Proc p;
  p.name = "a2r";
  p.args = {dram_buf("out", {aff(4)}, false), dram_buf("in", {aff(4)}, true)};
  p.body = {Stmt::loop("i", aff(4),
                       {Stmt::assign("out", {aff("i")}, Expr::read("in", {aff("i")}))})};
  Proc q = assign_to_reduce(p, Cursor("out[_] = _", 1));
  CHECK(find_all(q, "out[_] = _").size() == 1);   // the zero fill
  CHECK(find_all(q, "out[_] += _").size() == 1);  // the accumulation
  check_equivalent(p, q, 4);
}

TEST_CASE("replace matches a load loop and rejects the store direction") {
  // R[0:4] <- A[4:8] staged as a copy loop
  Proc p;
  p.name = "ld";
  p.args = {dram_buf("A", {aff(8)}, true), dram_buf("out", {aff(4)}, false)};
  BufferDecl reg;
  reg.name = "R";
  reg.dims = {aff(4)};
  p.body = {Stmt::alloc(reg),
            Stmt::loop("l4", aff(4),
                       {Stmt::assign("R", {aff("l4")}, Expr::read("A", {aff("l4") + aff(4)}))}),
            Stmt::loop("l5", aff(4),
                       {Stmt::assign("out", {aff("l5")}, Expr::read("R", {aff("l5")}))})};
  REQUIRE(well_formed(p).empty());

  Proc q = replace(p, Cursor("for l4 in _: _", 1), neon(), "neon_vld_4xf32");
  const auto& call = std::get<Stmt::InstrCall>(q.body[1]->node);
  CHECK(call.instr == "neon_vld_4xf32");
  CHECK(call.operands[0].window.buffer == "R");
  CHECK(call.operands[1].window.buffer == "A");
  CHECK(call.operands[1].window.dims[0].base == aff(4));
  CHECK(call.operands[1].window.dims[0].extent == 4);
  check_equivalent(p, q, 4);

  // the store instruction cannot match a load body: its register operand
  // would have to be the fixed argument A
  try {
    replace(p, Cursor("for l4 in _: _", 1), neon(), "neon_vst_4xf32");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::PatternMismatch);
  }
  // the second loop is a store
  Proc r = replace(q, Cursor("for l5 in _: _", 1), neon(), "neon_vst_4xf32");
  check_equivalent(p, r, 4);
}

TEST_CASE("replace binds the lane-indexed FMA") {
  // register operands must be local allocations, so stage args first
  Proc p;
  p.name = "fma";
  p.args = {dram_buf("out", {aff(4)}, false), dram_buf("ain", {aff(4)}, true),
            dram_buf("bin", {aff(4)}, true)};
  auto alloc4 = [](const char* n) {
    BufferDecl d;
    d.name = n;
    d.dims = {AffineExpr::cst(4)};
    return d;
  };
  auto copy = [](const char* dst, const char* src, const char* v) {
    return Stmt::loop(v, aff(4),
                      {Stmt::assign(dst, {aff(v)}, Expr::read(src, {aff(v)}))});
  };
  p.body = {
      Stmt::alloc(alloc4("a")),
      Stmt::alloc(alloc4("b")),
      Stmt::alloc(alloc4("acc")),
      copy("a", "ain", "c0"),
      copy("b", "bin", "c1"),
      Stmt::loop("l0", aff(4), {Stmt::assign("acc", {aff("l0")}, Expr::cst(Rational(0)))}),
      Stmt::loop("jtt", aff(4),
                 {Stmt::loop("l1", aff(4),
                             {Stmt::reduce("acc", {aff("l1")},
                                           Expr::binary('*', Expr::read("a", {aff("l1")}),
                                                        Expr::read("b", {aff("jtt")})))})}),
      copy("out", "acc", "c2"),
  };
  REQUIRE(well_formed(p).empty());
  Proc q = replace(p, Cursor("for l1 in _: _", 1), neon(), "neon_vfmla_4xf32_4xf32");
  StmtPath call_path = resolve_cursor(q, Cursor("neon_vfmla_4xf32_4xf32(_)", 1));
  const auto& call = std::get<Stmt::InstrCall>(stmt_at(q, call_path)->node);
  REQUIRE(call.lane_args.size() == 1);
  CHECK(call.lane_args[0].second == aff("jtt"));
  CHECK(call.operands[2].window.dims[0].extent == 4);  // b spans its lane dim
  check_equivalent(p, q, 6);

  // replacing the zero fill with the zero instruction also works
  Proc z = replace(q, Cursor("for l0 in _: _", 1), neon(), "neon_vzero_4xf32");
  check_equivalent(p, z, 4);
}

TEST_CASE("set_memory enforces the lane rule and upgrades placement") {
  Proc p = ukernel_8x12();
  p = divide_loop(p, Cursor("for i in _: _", 1), 4, "it", "itt");
  p = divide_loop(p, Cursor("for j in _: _", 1), 4, "jt", "jtt");
  p = stage_mem(p, Cursor("C[_] += _", 1), "C[4 * jt + jtt, 4 * it + itt]", "C_reg");
  p = expand_dim(p, Cursor("C_reg : _", 1), aff(4), aff("itt"));
  p = expand_dim(p, Cursor("C_reg : _", 1), aff(2), aff("it"));
  p = expand_dim(p, Cursor("C_reg : _", 1), aff(12), aff("jt", 4) + aff("jtt"));
  Proc q = set_memory(p, Cursor("C_reg : _", 1), *neon().find_space("Neon"), neon());
  const auto& al = std::get<Stmt::Alloc>(
      stmt_at(q, resolve_cursor(q, Cursor("C_reg : _", 1)))->node);
  CHECK(al.decl.memspace.name == "Neon");
  check_equivalent(ukernel_8x12(), q, 4);

  // innermost dimension 3 violates the lane rule
  Proc bad = ukernel_8x12();
  bad = stage_mem(bad, Cursor("C[_] += _", 1), "C[j, i]", "r3");
  bad = expand_dim(bad, Cursor("r3 : _", 1), aff(3), aff(0));
  try {
    set_memory(bad, Cursor("r3 : _", 1), *neon().find_space("Neon"), neon());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::LaneRuleViolation);
  }
}

TEST_CASE("set_precision switches an allocation to f16 under Neon8f") {
  const TargetLibrary& lib = get_target("neon_f16");
  Proc p;
  p.name = "prec";
  p.args = {dram_buf("x", {aff(8)}, false)};
  BufferDecl reg;
  reg.name = "A_reg";
  reg.dims = {aff(2), aff(8)};
  p.body = {Stmt::alloc(reg),
            Stmt::loop("i", aff(8),
                       {Stmt::assign("A_reg", {aff(0), aff("i")}, Expr::cst(Rational(1))),
                        Stmt::assign("x", {aff("i")}, Expr::read("A_reg", {aff(0), aff("i")}))})};
  REQUIRE(well_formed(p).empty());
  Proc q = set_precision(p, Cursor("A_reg : _", 1), Precision::f16, lib);
  Proc r = set_memory(q, Cursor("A_reg : _", 1), *lib.find_space("Neon8f"), lib);
  const auto& al = std::get<Stmt::Alloc>(
      stmt_at(r, resolve_cursor(r, Cursor("A_reg : _", 1)))->node);
  CHECK(al.decl.precision == Precision::f16);
  CHECK(al.decl.memspace.name == "Neon8f");
  // arguments can change precision too
  Proc s = set_precision(p, Cursor("x : _", 1), Precision::f16, lib);
  CHECK(s.args[0].precision == Precision::f16);
}

TEST_CASE("unroll_loop repeats the body with substituted constants") {
  Proc p = ukernel_8x12();
  p = divide_loop(p, Cursor("for i in _: _", 1), 4, "it", "itt");
  Proc q = unroll_loop(p, Cursor("for it in _: _", 1));
  CHECK(find_all(q, "for it in _: _").empty());
  CHECK(find_all(q, "for itt in _: _").size() == 2);
  check_equivalent(p, q, 4);

  // bound-1 loops unroll to the bare body
  Proc r = divide_loop(ukernel_8x12(), Cursor("for j in _: _", 1), 12, "jt", "jtt");
  Proc s = unroll_loop(r, Cursor("for jt in _: _", 1));
  CHECK(find_all(s, "for jt in _: _").empty());
  check_equivalent(r, s, 4);

  try {
    unroll_loop(p, Cursor("for k in _: _", 1));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NonConstantBound);
  }
}

TEST_CASE("schedules record and replay deterministically") {
  Scheduler s(naive_ukernel(), neon());
  s.phase("v1");
  s.rename("tile");
  s.partial_eval({{"M_R", 8}, {"N_R", 12}});
  s.phase("v2");
  s.divide_loop(Cursor("for i in _: _", 1), 4, "it", "itt");
  s.divide_loop(Cursor("for j in _: _", 1), 4, "jt", "jtt");
  s.phase("v3");
  s.stage_mem(Cursor("C[_] += _", 1), "C[4 * jt + jtt, 4 * it + itt]", "C_reg");
  s.expand_dim(Cursor("C_reg : _", 1), AffineExpr::cst(4), AffineExpr::sym("itt"));
  s.lift_alloc(Cursor("C_reg : _", 1), 4);

  std::string text = s.script().serialize();
  Scheduler replay = replay_script(naive_ukernel(), neon(), text);
  CHECK(proc_equal(replay.proc(), s.proc()));
  CHECK(replay.script().serialize() == text);
  auto phases = replay.phase_procs();
  REQUIRE(phases.size() == 3);
  CHECK(phases[0].first == "v1");
  CHECK(phases[0].second.name == "tile");

  // failures carry the step index
  std::string bad = text + "reorder_loops \"for itt in _: _\" 1\n";
  try {
    replay_script(naive_ukernel(), neon(), bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step 11") != std::string::npos);
  }
}
