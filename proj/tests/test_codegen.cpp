#include <doctest.h>

#include <cstdio>

#include "helpers.hpp"
#include "toolchain.hpp"
#include "ukgen/recipes.hpp"

using namespace ukgen;
using namespace testutil;

namespace {

// Text-level counting used by the acceptance gate: occurrences of a token
// before, inside, and after the emitted k loop.
struct RegionCounts {
  int before = 0, inside = 0, after = 0;
};

RegionCounts count_regions(const std::string& src, const std::string& token) {
  size_t kpos = src.find("for (int32_t k = 0");
  REQUIRE(kpos != std::string::npos);
  size_t open = src.find('{', kpos);
  int depth = 1;
  size_t close = open + 1;
  while (close < src.size() && depth > 0) {
    if (src[close] == '{') ++depth;
    if (src[close] == '}') --depth;
    ++close;
  }
  auto count = [&](size_t from, size_t to) {
    int n = 0;
    for (size_t pos = src.find(token, from); pos != std::string::npos && pos < to;
         pos = src.find(token, pos + 1))
      ++n;
    return n;
  };
  RegionCounts out;
  out.before = count(0, kpos);
  out.inside = count(kpos, close);
  out.after = count(close, src.size());
  return out;
}

}  // namespace

TEST_CASE("the emitted 8x12 kernel carries the tile's instruction counts") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  EmittedUnit unit = emit(s.proc(), s.lib());
  CHECK(unit.kernel_symbol == "gemm_ukr_8x12_f32_neon_f32");
  CHECK(unit.kernel_source.find("void gemm_ukr_8x12_f32_neon_f32(int32_t K_R, float* C, "
                                "const float* A, const float* B)") != std::string::npos);
  RegionCounts loads = count_regions(unit.kernel_source, "vld1q_f32(");
  RegionCounts fmas = count_regions(unit.kernel_source, "vfmaq_laneq_f32(");
  RegionCounts stores = count_regions(unit.kernel_source, "vst1q_f32(");
  CHECK(loads.before == 24);  // C tile loads
  CHECK(loads.inside == 5);   // 2 A + 3 B per k iteration
  CHECK(fmas.inside == 24);
  CHECK(stores.after == 24);  // C tile stores
  CHECK(stores.before == 0);
  CHECK(fmas.before + fmas.after == 0);

  // deterministic emission
  CHECK(emit(s.proc(), s.lib()).kernel_source == unit.kernel_source);
  // header declares the same signature
  CHECK(unit.header.find("void gemm_ukr_8x12_f32_neon_f32(") != std::string::npos);
}

TEST_CASE("an empty proc emits an empty function") {
  Proc p;
  p.name = "noop";
  p.size_params = {"N"};
  EmittedUnit unit = emit(p, get_target("neon_f32"));
  CHECK(unit.kernel_source.find("void noop(int32_t N) {\n}") != std::string::npos);
}

TEST_CASE("emission rejects unplaced register operands") {
  // a call whose operand was never given a register space
  Proc p;
  p.name = "bad";
  p.args = {dram_buf("A", {aff(4)}, true)};
  BufferDecl r;
  r.name = "R";
  r.dims = {aff(4)};
  Stmt::InstrCall call;
  call.instr = "neon_vld_4xf32";
  call.operands = {{"dst", Window{"R", {WindowDim{aff(0), 4, false}}}, true, false},
                   {"src", Window{"A", {WindowDim{aff(0), 4, false}}}, false, false}};
  p.body = {Stmt::alloc(r), Stmt::instr_call(call)};
  try {
    emit(p, get_target("neon_f32"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::MemSpaceMismatch);
  }
}

TEST_CASE("the f16 kernel declares 8-lane registers") {
  Scheduler s = schedule_kernel(spec_for(8, 12, Precision::f16, "neon_f16"));
  EmittedUnit unit = emit(s.proc(), s.lib());
  CHECK(unit.kernel_source.find("float16x8_t") != std::string::npos);
  CHECK(unit.kernel_source.find("float16_t") != std::string::npos);
  CHECK(unit.kernel_source.find("arm_neon.h") != std::string::npos);
}

TEST_CASE("generate_family emits every member and collects errors") {
  std::vector<KernelSpec> specs;
  for (auto [mr, nr] : preset_members("paper-family")) specs.push_back(spec_for(mr, nr));
  FamilyResult fam = generate_family(specs);
  CHECK(fam.ok());
  CHECK(fam.kernels.size() == 7);
  CHECK(generate_family({}).kernels.empty());

  KernelSpec bad = spec_for(8, 12);
  bad.precision = Precision::f16;  // lanes of neon_f32 are f32
  FamilyResult broken = generate_family({bad});
  CHECK(broken.errors.size() == 1);
}

TEST_CASE("the avx512 harness compiles, runs, and matches the interpreter"
          * doctest::skip(false)) {
  const Toolchain& tc = toolchain();
  Scheduler s = schedule_packed(spec_for(16, 12, Precision::f32, "avx512_f32"));
  HarnessShape shape{16, 12, 64, false};
  std::string harness = emit_harness(s.proc(), s.lib(), shape);
  CHECK(harness.find("uk_next") != std::string::npos);
  CHECK(harness.find("0x9E3779B97F4A7C15ull") != std::string::npos);

  if (!tc.avx512_compile || !tc.avx512_run) {
    MESSAGE("skipping harness execution: no AVX-512 toolchain or CPU");
    return;
  }
  std::string bin = compile_c(harness, "h16x12", "-mavx512f");
  REQUIRE(!bin.empty());
  CHECK(run_cmd("./" + bin) == 0);

  // cross-validation: the harness kernel output equals the interpreter's,
  // bit for bit, on the same generated inputs
  FILE* pipe = popen(("./" + bin + " --dump").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::vector<uint32_t> dumped;
  char line[64];
  while (fgets(line, sizeof line, pipe)) dumped.push_back(uint32_t(strtoul(line, nullptr, 16)));
  pclose(pipe);
  REQUIRE(dumped.size() == size_t(16 * 12));

  // regenerate the same inputs and run the interpreter
  uint64_t state = kHarnessSeed;
  auto next = [&]() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  auto draw = [&]() { return float(int(next() % 5) - 2); };
  Bindings b;
  b.sizes["K_R"] = shape.k;
  ConcreteBuffer C = ConcreteBuffer::zeros({12, 16});
  ConcreteBuffer A = ConcreteBuffer::zeros({shape.k, 16});
  ConcreteBuffer B = ConcreteBuffer::zeros({shape.k, 12});
  for (auto& v : C.data) v = draw();
  for (auto& v : A.data) v = draw();
  for (auto& v : B.data) v = draw();
  b.buffers = {{"C", C}, {"A", A}, {"B", B}};
  Bindings out = run(s.proc(), b, s.lib());
  const auto& got = out.buffers.at("C").data;
  for (size_t i = 0; i < got.size(); ++i) {
    uint32_t w;
    std::memcpy(&w, &got[i], 4);
    CHECK(w == dumped[i]);
  }
}

TEST_CASE("a corrupted kernel makes the harness fail") {
  const Toolchain& tc = toolchain();
  if (!tc.avx512_compile || !tc.avx512_run) {
    MESSAGE("skipping negative control: no AVX-512 toolchain or CPU");
    return;
  }
  Scheduler s = schedule_packed(spec_for(16, 12, Precision::f32, "avx512_f32"));
  std::string harness = emit_harness(s.proc(), s.lib(), HarnessShape{16, 12, 32, false});
  // sabotage the kernel's k loop to drop the last iteration; still compiles
  size_t pos = harness.find("k < K_R;");
  REQUIRE(pos != std::string::npos);
  harness.replace(pos, strlen("k < K_R;"), "k + 1 < K_R;");
  std::string bin = compile_c(harness, "h16x12_bad", "-mavx512f");
  REQUIRE(!bin.empty());
  CHECK(run_cmd("./" + bin) != 0);
}

TEST_CASE("neon harness generation is emission-only off ARM") {
  Scheduler s = schedule_packed(spec_for(8, 12));
  std::string harness = emit_harness(s.proc(), s.lib(), HarnessShape{8, 12, 128, false});
  CHECK(harness.find("arm_neon.h") != std::string::npos);
  const Toolchain& tc = toolchain();
  if (tc.neon) {
    std::string bin = compile_c(harness, "h8x12_neon", "");
    REQUIRE(!bin.empty());
    CHECK(run_cmd("./" + bin) == 0);
  }
}
