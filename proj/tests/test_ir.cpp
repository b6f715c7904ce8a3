#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "ukgen/cursor.hpp"
#include "ukgen/f16.hpp"
#include "ukgen/parser.hpp"
#include "ukgen/printer.hpp"
#include "ukgen/wellformed.hpp"

using namespace ukgen;
using namespace testutil;

TEST_CASE("affine arithmetic and substitution") {
  AffineExpr e = aff("it", 4) + aff("itt") + aff(3);
  CHECK(affine_to_string(e) == "4 * it + itt + 3");
  CHECK(e.coeff_of("it") == 4);
  CHECK(e.substituted("it", aff(2)).constant == 11);
  CHECK(!e.substituted("itt", aff("x", 2) + aff(1)).references("itt"));
  CHECK((e - e).is_constant());
  AffineExpr z = aff("a") - aff("a");
  CHECK(z == aff(0));
}

TEST_CASE("affine interval check matches brute force on random forms") {
  // Conservativeness: whenever the checker accepts, no admissible assignment
  // may go out of bounds. Empirically exercised over small ranges.
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> coeff(-2, 2);
  std::uniform_int_distribution<long long> cst(-3, 3);
  for (int trial = 0; trial < 500; ++trial) {
    AffineExpr idx = aff("i", coeff(rng)) + aff("j", coeff(rng)) + aff(cst(rng));
    bool dim_is_param = trial % 2 == 0;
    AffineExpr dim = dim_is_param ? aff("N") : aff(4);
    SymEnv env;
    env["N"] = SymRange{SymRange::size_param, {}};
    env["i"] = SymRange{SymRange::loop, dim};       // i in [0, dim)
    env["j"] = SymRange{SymRange::loop, aff(2)};    // j in [0, 2)
    bool accepted = provably_in_range(idx, dim, env);
    bool violated = false;
    for (long long n = 1; n <= 5 && !violated; ++n) {
      long long d = dim_is_param ? n : 4;
      for (long long i = 0; i < d && !violated; ++i)
        for (long long j = 0; j < 2 && !violated; ++j) {
          long long v = idx.coeff_of("i") * i + idx.coeff_of("j") * j + idx.constant;
          violated = v < 0 || v >= d;
        }
      if (!dim_is_param) break;
    }
    if (accepted) CHECK(!violated);
  }
}

TEST_CASE("f16 storage rounding is nearest-even") {
  CHECK(f16_round(0.0f) == 0.0f);
  CHECK(f16_round(1.0f) == 1.0f);
  CHECK(f16_round(-2.0f) == -2.0f);
  CHECK(f16_round(2048.0f) == 2048.0f);
  CHECK(f16_round(2049.0f) == 2048.0f);  // tie, rounds to even
  CHECK(f16_round(2051.0f) == 2052.0f);  // tie, rounds to even
  CHECK(f16_round(65504.0f) == 65504.0f);
  CHECK(std::isinf(f16_round(65520.0f)));
  CHECK(f16_round(0.1f) == doctest::Approx(0.1f).epsilon(1e-3));
  // every integer in the exactness band survives the round trip
  for (int v = -2048; v <= 2048; ++v) CHECK(f16_round(static_cast<float>(v)) == v);
}

TEST_CASE("well_formed accepts the naive kernel") {
  CHECK(well_formed(naive_ukernel()).empty());
}

TEST_CASE("well_formed flags an off-by-one access") {
  Proc p = naive_ukernel();
  // rewrite A[k, i] into A[k, i + 1]
  Stmt::Ptr update = Stmt::reduce(
      "C", {aff("j"), aff("i")},
      Expr::binary('*', Expr::read("A", {aff("k"), aff("i") + aff(1)}),
                   Expr::read("B", {aff("k"), aff("j")})));
  p.body = {Stmt::loop("k", aff("K_R"),
                       {Stmt::loop("j", aff("N_R"), {Stmt::loop("i", aff("M_R"), {update})})})};
  auto ds = well_formed(p);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].message.find("'A'") != std::string::npos);
}

TEST_CASE("well_formed enforces the vector-register lane rule") {
  Proc p;
  p.name = "lanes";
  MemSpace neon{"Neon", MemSpace::vector_register, 4, Precision::f32, "float32x4_t"};
  BufferDecl bad;
  bad.name = "r";
  bad.dims = {aff(3)};
  bad.memspace = neon;
  p.body = {Stmt::alloc(bad)};
  auto ds = well_formed(p);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].message.find("lanes") != std::string::npos);
}

TEST_CASE("well_formed flags writes through read-only arguments") {
  Proc p = naive_ukernel();
  p.body.push_back(Stmt::assign("A", {aff(0), aff(0)}, Expr::cst(Rational(1))));
  auto ds = well_formed(p);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].message.find("read-only") != std::string::npos);
}

TEST_CASE("cursor resolution on the naive kernel") {
  Proc p = naive_ukernel();
  StmtPath k = resolve_cursor(p, Cursor("for k in _: _", 1));
  CHECK(k == StmtPath{0});
  StmtPath i = resolve_cursor(p, Cursor("for i in _: _"));
  CHECK(i == StmtPath{0, 0, 0});
  CHECK_THROWS_WITH_AS(resolve_cursor(p, Cursor("for z in _: _", 1)), doctest::Contains("for z"),
                       Error);
  CHECK_THROWS_AS(resolve_cursor(p, Cursor("for _ in _: _")), Error);  // ambiguous
  try {
    resolve_cursor(p, Cursor("for _ in _: _"));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::AmbiguousMatch);
  }
  StmtPath r = resolve_cursor(p, Cursor("C[_] += _"));
  CHECK(r == StmtPath{0, 0, 0, 0});
}

TEST_CASE("pretty print / parse round trip") {
  Proc p = naive_ukernel();
  std::string text = pretty_print(p);
  CHECK(text.find("for k in seq(0, K_R):") != std::string::npos);
  CHECK(text.find("C[j, i] += A[k, i] * B[k, j]") != std::string::npos);
  Proc back = IrParser().parse_proc(text);
  CHECK(proc_equal(p, back));
  // cursor resolution is stable across the round trip
  CHECK(resolve_cursor(p, Cursor("C[_] += _")) == resolve_cursor(back, Cursor("C[_] += _")));
}

TEST_CASE("empty-body proc prints header only") {
  Proc p;
  p.name = "empty";
  std::string text = pretty_print(p);
  CHECK(text == "proc empty():\n");
  CHECK(proc_equal(p, IrParser().parse_proc(text)));
}

TEST_CASE("parser reports positions") {
  try {
    IrParser().parse_proc("proc p():\n  for i in seq(1, 4):\n    x = 0\n");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("statement edits rebuild the tree persistently") {
  Proc p = naive_ukernel();
  StmtPath path = resolve_cursor(p, Cursor("C[_] += _"));
  Proc q = with_replaced(p, path, {});
  CHECK(well_formed(q).empty());
  CHECK(find_all(q, "C[_] += _").empty());
  CHECK(!find_all(p, "C[_] += _").empty());  // original untouched
  Proc r = with_inserted(p, path, {Stmt::assign("C", {aff("j"), aff("i")}, Expr::cst(0))},
                         /*before=*/true);
  CHECK(find_all(r, "C[_] = _").size() == 1);
  CHECK(resolve_cursor(r, Cursor("C[_] += _")) == StmtPath{0, 0, 0, 1});
}
