#include <doctest.h>

#include "helpers.hpp"
#include "ukgen/recipes.hpp"

using namespace ukgen;
using namespace testutil;

namespace {

// Independent oracle over the transposed layouts.
void oracle(int mr, int nr, int k, const std::vector<float>& a, const std::vector<float>& b,
            std::vector<float>& c, float alpha, float beta) {
  for (int j = 0; j < nr; ++j)
    for (int i = 0; i < mr; ++i) {
      float acc = beta * c[size_t(j * mr + i)];
      for (int p = 0; p < k; ++p)
        acc += a[size_t(p * mr + i)] * (alpha * b[size_t(p * nr + j)]);
      c[size_t(j * mr + i)] = acc;
    }
}

Bindings random_bindings(const Proc& p, int kval, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> val(-2, 2);
  Bindings b;
  for (const auto& sp : p.size_params) b.sizes[sp] = kval;
  std::map<std::string, long long> env = b.sizes;
  for (const auto& a : p.args) {
    std::vector<long long> dims;
    for (const auto& d : a.dims) {
      long long v = d.constant;
      for (const auto& [sym, c] : d.terms) v += env.at(sym) * c;
      dims.push_back(v);
    }
    ConcreteBuffer buf = ConcreteBuffer::zeros(dims, a.precision);
    for (auto& x : buf.data) x = float(val(rng));
    b.buffers[a.name] = std::move(buf);
  }
  return b;
}

void check_against_oracle(const Proc& p, int mr, int nr, int kval, bool generic,
                          const TargetLibrary& lib, uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  Bindings b = random_bindings(p, kval, rng);
  float alpha = 1.0f, beta = 1.0f;
  if (generic) {
    alpha = b.buffers.at("alpha").data[0];
    beta = b.buffers.at("beta").data[0];
  }
  std::vector<float> expect = b.buffers.at("C").data;
  oracle(mr, nr, kval, b.buffers.at("A").data, b.buffers.at("B").data, expect, alpha, beta);
  Bindings out = run(p, b, lib);
  CHECK_MESSAGE(out.buffers.at("C").data == expect,
                "kernel disagrees with the oracle for ", mr, "x", nr, " k=", kval);
}

}  // namespace

TEST_CASE("base procs compute the update and print the expected shape") {
  KernelSpec unit = spec_for(8, 12);
  Proc p = base_proc(unit);
  CHECK(pretty_print(p).find("C[j, i] += A[k, i] * B[k, j]") != std::string::npos);
  // 2x3x1: C += A*B elementwise outer product
  check_against_oracle(partial_eval(p, {{"M_R", 2}, {"N_R", 3}}), 2, 3, 1, false,
                       get_target("neon_f32"));

  KernelSpec gen = unit;
  gen.generic_alpha_beta = true;
  Proc g = base_proc(gen);
  CHECK(well_formed(g).empty());
  // beta = 0 makes the output independent of the incoming C
  Proc g23 = partial_eval(g, {{"M_R", 2}, {"N_R", 3}});
  std::mt19937_64 rng(5);
  Bindings b = random_bindings(g23, 4, rng);
  b.buffers["alpha"] = ConcreteBuffer::scalar(2.0f);
  b.buffers["beta"] = ConcreteBuffer::scalar(0.0f);
  Bindings b2 = b;
  for (auto& v : b2.buffers["C"].data) v = 999.0f;
  CHECK(run(g23, b, get_target("neon_f32")).buffers.at("C").data ==
        run(g23, b2, get_target("neon_f32")).buffers.at("C").data);
}

TEST_CASE("the 8x12 schedule reproduces the narrative checkpoints") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  auto phases = s.phase_procs();
  REQUIRE(phases.size() == 6);

  // v2: four split loops nested inside k
  {
    const Proc& v2 = phases[1].second;
    StmtPath k = resolve_cursor(v2, Cursor("for k in _: _", 1));
    const Stmt::Loop& kl = std::get<Stmt::Loop>(stmt_at(v2, k)->node);
    const Stmt::Loop& jt = std::get<Stmt::Loop>(kl.body[0]->node);
    const Stmt::Loop& jtt = std::get<Stmt::Loop>(jt.body[0]->node);
    const Stmt::Loop& it = std::get<Stmt::Loop>(jtt.body[0]->node);
    const Stmt::Loop& itt = std::get<Stmt::Loop>(it.body[0]->node);
    CHECK(jt.var == "jt");
    CHECK(jtt.var == "jtt");
    CHECK(it.var == "it");
    CHECK(itt.var == "itt");
  }
  // v3: C_reg is f32[12, 2, 4], loads before the k loop, stores after
  {
    const Proc& v3 = phases[2].second;
    const auto& al =
        std::get<Stmt::Alloc>(stmt_at(v3, resolve_cursor(v3, Cursor("C_reg : _", 1)))->node);
    CHECK(al.decl.dims ==
          std::vector<AffineExpr>{AffineExpr::cst(12), AffineExpr::cst(2), AffineExpr::cst(4)});
    CHECK(al.decl.memspace.name == "Neon");
    REQUIRE(v3.body.size() == 4);  // alloc, load nest, k loop, store nest
    CHECK(std::get<Stmt::Loop>(v3.body[2]->node).var == "k");
    KernelCounts counts = count_kernel_calls(v3, s.lib());
    CHECK(counts.c_loads == 1);  // rolled nests at this stage
    CHECK(counts.c_stores == 1);
  }
  // v5: the compute loop is a lane FMA
  {
    const Proc& v5 = phases[4].second;
    CHECK(!find_all(v5, "neon_vfmla_4xf32_4xf32(_)").empty());
  }
  // v6: unrolled loads and FMAs at the paper's counts
  {
    const Proc& v6 = phases[5].second;
    KernelCounts counts = count_kernel_calls(v6, s.lib());
    CHECK(counts.k_loads == 5);   // 2 for A, 3 for B
    CHECK(counts.k_fmas == 24);   // (8/4) * 12
    CHECK(counts.c_loads == 24);  // 12 * 2
    CHECK(counts.c_stores == 24);
    CHECK(register_count(v6) == 29);  // 24 C + 2 A + 3 B
  }
}

TEST_CASE("the full 8x12 chain is interpreter-equivalent step by step") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  ChainResult r = check_schedule_chain(s, 6);
  CHECK_MESSAGE(r.ok, r.detail);
  check_against_oracle(s.proc(), 8, 12, 512, false, s.lib(), 23);
}

TEST_CASE("scheduled kernels match the oracle across the family") {
  for (auto [mr, nr] : preset_members("paper-family")) {
    KernelSpec spec = spec_for(mr, nr);
    Scheduler s = schedule_kernel(spec);
    check_against_oracle(s.proc(), mr, nr, 16, false, s.lib(), uint64_t(mr * 100 + nr));
    ChainResult r = check_schedule_chain(s, 3);
    CHECK_MESSAGE(r.ok, "family ", mr, "x", nr, ": ", r.detail);
  }
}

TEST_CASE("per-k structural counts follow the tile formulas") {
  const TargetLibrary& lib = get_target("neon_f32");
  {
    Scheduler s = schedule_packed(spec_for(4, 4));
    KernelCounts c = count_kernel_calls(s.proc(), lib);
    CHECK(c.k_loads == 2);  // 1 A load + 1 B load
    CHECK(c.k_fmas == 4);
  }
  {
    Scheduler s = schedule_broadcast(spec_for(1, 8));
    KernelCounts c = count_kernel_calls(s.proc(), lib);
    CHECK(c.k_dups == 1);   // one broadcast of A per row
    CHECK(c.k_loads == 2);  // two B loads
    CHECK(c.k_fmas == 2);   // broadcast FMAs
    CHECK(c.c_loads == 2);
    CHECK(c.c_stores == 2);
  }
  {
    Scheduler s = schedule_broadcast(spec_for(1, 12));
    check_against_oracle(s.proc(), 1, 12, 24, false, lib, 7);
  }
}

TEST_CASE("generic alpha/beta kernels schedule and stay equivalent") {
  KernelSpec spec = spec_for(8, 12, Precision::f32, "neon_f32", /*generic=*/true);
  Scheduler s = schedule_packed(spec);
  ChainResult r = check_schedule_chain(s, 4);
  CHECK_MESSAGE(r.ok, r.detail);
  check_against_oracle(s.proc(), 8, 12, 32, true, s.lib(), 31);
  // alpha and beta are broadcast once at the top
  CHECK(!find_all(s.proc(), "cb_s : _").empty());
  CHECK(!find_all(s.proc(), "ba_s : _").empty());

  KernelSpec b = spec_for(1, 8, Precision::f32, "neon_f32", /*generic=*/true);
  Scheduler sb = schedule_broadcast(b);
  ChainResult rb = check_schedule_chain(sb, 4);
  CHECK_MESSAGE(rb.ok, rb.detail);
  check_against_oracle(sb.proc(), 1, 8, 16, true, sb.lib(), 37);
}

TEST_CASE("the same recipe retargets to 512-bit vectors") {
  KernelSpec spec = spec_for(16, 12, Precision::f32, "avx512_f32");
  CHECK(spec.packed_a);
  Scheduler s = schedule_packed(spec);
  // every replacement names an avx512 instruction
  int replaces = 0;
  for (const auto& line : s.lines()) {
    if (line.rfind("replace ", 0) == 0) {
      ++replaces;
      CHECK(line.find("_mm512_") != std::string::npos);
    }
  }
  CHECK(replaces > 0);
  ChainResult r = check_schedule_chain(s, 3);
  CHECK_MESSAGE(r.ok, r.detail);
  check_against_oracle(s.proc(), 16, 12, 64, false, s.lib(), 41);
  KernelCounts c = count_kernel_calls(s.proc(), s.lib());
  CHECK(c.k_loads == 1);  // one 16-lane A load
  CHECK(c.k_dups == 12);  // B broadcasts
  CHECK(c.k_fmas == 12);
}

TEST_CASE("f16 kernels stage into the 8-lane space") {
  KernelSpec spec = spec_for(8, 12, Precision::f16, "neon_f16");
  Scheduler s = schedule_kernel(spec);
  bool saw_8f = false;
  walk_stmts(s.proc(), [&](const Stmt::Ptr& st, const StmtPath&) {
    if (auto* al = std::get_if<Stmt::Alloc>(&st->node))
      if (al->decl.memspace.name == "Neon8f") saw_8f = true;
    return true;
  });
  CHECK(saw_8f);
  ChainResult r = check_schedule_chain(s, 3);
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("multi-row unpacked tiles fall back to scalar code") {
  KernelSpec spec = spec_for(2, 8);
  spec.packed_a = false;
  Scheduler s = schedule_broadcast(spec);
  CHECK(find_all(s.proc(), "for j in _: _").size() == 1);  // untouched loops
  check_against_oracle(s.proc(), 2, 8, 16, false, s.lib(), 43);
}

TEST_CASE("schedules replay from their serialized scripts") {
  Scheduler s = schedule_packed(spec_for(8, 4));
  std::string text = s.script().serialize();
  Scheduler replay = replay_script(base_proc(spec_for(8, 4)), s.lib(), text);
  CHECK(proc_equal(replay.proc(), s.proc()));
}

TEST_CASE("the 8x12 script addresses the store loop as the second itt match") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  std::string text = s.script().serialize();
  CHECK(text.find("replace \"for itt in _: _\" 1 neon_vld_4xf32") != std::string::npos);
  CHECK(text.find("replace \"for itt in _: _\" 2 neon_vst_4xf32") != std::string::npos);
}

TEST_CASE("every recipe intermediate round-trips through the textual form") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  IrParser parser(s.lib().parse_options());
  for (const Proc& p : s.history()) {
    Proc back = parser.parse_proc(pretty_print(p));
    CHECK_MESSAGE(proc_equal(p, back), "round trip failed after some step:\n", pretty_print(p));
  }
  // cursor resolution is stable across the round trip on the final kernel
  const Proc& last = s.history().back();
  Proc back = parser.parse_proc(pretty_print(last));
  CHECK(resolve_cursor(last, Cursor("for k in _: _", 1)) ==
        resolve_cursor(back, Cursor("for k in _: _", 1)));
}

TEST_CASE("invalid specs are rejected with guidance") {
  KernelSpec spec = spec_for(8, 12);
  spec.mr = 7;
  spec.packed_a = true;
  try {
    validate_spec(spec);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("--no-packed-a") != std::string::npos);
  }
}
