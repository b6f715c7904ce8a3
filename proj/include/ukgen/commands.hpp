#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ukgen/datasets.hpp"
#include "ukgen/gemm.hpp"
#include "ukgen/recipes.hpp"

namespace ukgen {

// Command implementations behind the CLI, kept independent of the argument
// parser so they are directly testable. Every command is deterministic for a
// given seed; UKF_SEED overrides the seed flag. Exit codes: 0 success,
// 1 verification or generation failure, 2 usage/configuration errors
// (reported by the CLI layer).

namespace commands {

inline uint64_t effective_seed(uint64_t flag_seed) {
  if (const char* env = std::getenv("UKF_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      fail(ErrKind::ValidationError, "UKF_SEED is not an integer");
    }
  }
  return flag_seed;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(ErrKind::ValidationError, "cannot write " + path.string());
  f << text;
}

inline Precision parse_precision_name(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f16") return Precision::f16;
  fail(ErrKind::ValidationError, "precision must be f32 or f16, got '" + s + "'");
}

}  // namespace commands

// ---------------------------------------------------------------------------
// generate: schedule one kernel, write sources, harness, script, snapshots

struct GenerateOptions {
  KernelSpec spec;
  std::string out_dir = "ukgen-out";
  long long harness_k = 512;
  bool restrict_pointers = false;
};

inline int cmd_generate(const GenerateOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    validate_spec(opts.spec);
    Scheduler s = schedule_kernel(opts.spec);
    EmittedUnit unit = emit(s.proc(), s.lib(), EmitOptions{opts.restrict_pointers});
    HarnessShape hs{opts.spec.mr, opts.spec.nr, opts.harness_k, opts.spec.generic_alpha_beta};
    std::string harness = emit_harness(s.proc(), s.lib(), hs,
                                       EmitOptions{opts.restrict_pointers});

    std::filesystem::create_directories(opts.out_dir);
    std::filesystem::path dir(opts.out_dir);
    commands::write_text(dir / (unit.kernel_symbol + ".c"), unit.kernel_source);
    commands::write_text(dir / (unit.kernel_symbol + ".h"), unit.header);
    commands::write_text(dir / (unit.kernel_symbol + "_harness.c"), harness);
    commands::write_text(dir / (unit.kernel_symbol + ".sched"), s.script().serialize());
    for (const auto& [label, proc] : s.phase_procs())
      commands::write_text(dir / (label + ".ir.txt"), pretty_print(proc));

    out << "generated " << unit.kernel_symbol << " into " << opts.out_dir << "\n";
    out << "  schedule steps: " << s.lines().size() << "\n";
    KernelCounts counts = count_kernel_calls(s.proc(), s.lib());
    out << "  per-k calls: " << counts.k_loads << " loads, " << counts.k_dups
        << " broadcasts, " << counts.k_fmas << " FMAs; C tile " << counts.c_loads
        << " loads / " << counts.c_stores << " stores\n";
    return 0;
  } catch (const Error& e) {
    err << "generate failed: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// verify: replay schedules and check every step against the interpreter

struct VerifyOptions {
  std::vector<KernelSpec> specs;      // from --spec/--preset
  std::string script_file;            // or a script to replay
  KernelSpec script_base;             // base proc parameters for --script
  int trials = 20;
  ValueMode mode = ValueMode::integer_exact;
  uint64_t seed = 0x5eed;
};

namespace commands {

// Chain check shared by verify paths: every adjacent proc pair must agree;
// size-freezing steps are compared through the binding identity.
inline bool verify_chain(const Scheduler& s, int trials, ValueMode mode, uint64_t seed,
                         std::ostream& out) {
  const auto& h = s.history();
  const TargetLibrary& lib = s.lib();
  bool all_ok = true;
  for (size_t i = 0; i + 1 < h.size(); ++i) {
    const Proc& a = h[i];
    const Proc& b = h[i + 1];
    if (a.size_params != b.size_params) continue;  // handled by the final oracle run
    EquivReport rep = equivalent(a, b, trials, mode, lib, seed + i);
    if (!rep.equivalent) {
      out << "  " << rep.to_line() << "\n";
      all_ok = false;
    }
  }
  return all_ok;
}

inline bool verify_final_oracle(const Scheduler& s, const KernelSpec& spec, uint64_t seed,
                                std::ostream& out) {
  // scheduled kernel against the naive triple loop at a representative k
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> val(-2, 2);
  long long k = 32;
  Bindings b;
  b.sizes["K_R"] = k;
  auto fill = [&](std::vector<long long> dims) {
    ConcreteBuffer buf = ConcreteBuffer::zeros(dims, spec.precision);
    for (auto& x : buf.data)
      x = spec.precision == Precision::f16 ? f16_round(float(val(rng))) : float(val(rng));
    return buf;
  };
  b.buffers["C"] = fill({spec.nr, spec.mr});
  b.buffers["A"] = fill({k, spec.mr});
  b.buffers["B"] = fill({k, spec.nr});
  float alpha = 1.0f, beta = 1.0f;
  if (spec.generic_alpha_beta) {
    alpha = 2.0f;
    beta = -1.0f;
    b.buffers["alpha"] = ConcreteBuffer::scalar(alpha, spec.precision);
    b.buffers["beta"] = ConcreteBuffer::scalar(beta, spec.precision);
  }
  std::vector<float> want = b.buffers["C"].data;
  const auto& A = b.buffers["A"].data;
  const auto& B = b.buffers["B"].data;
  for (int j = 0; j < spec.nr; ++j)
    for (int i = 0; i < spec.mr; ++i) {
      float acc = beta * want[size_t(j) * spec.mr + i];
      for (long long p = 0; p < k; ++p)
        acc += A[size_t(p) * spec.mr + i] * (alpha * B[size_t(p) * spec.nr + j]);
      want[size_t(j) * spec.mr + i] =
          spec.precision == Precision::f16 ? f16_round(acc) : acc;
    }
  Bindings got = run(s.proc(), b, s.lib());
  const auto& data = got.buffers.at("C").data;
  for (size_t i = 0; i < data.size(); ++i) {
    // f16 kernels round intermediate stores, so compare with tolerance there
    if (spec.precision == Precision::f16) {
      if (std::fabs(double(data[i]) - double(want[i])) >
          1e-2 * std::max(1.0, std::fabs(double(want[i])))) {
        out << "  oracle mismatch at " << i << ": " << data[i] << " vs " << want[i] << "\n";
        return false;
      }
    } else if (!integer_exact_equal(data[i], want[i])) {
      out << "  oracle mismatch at " << i << ": " << data[i] << " vs " << want[i] << "\n";
      return false;
    }
  }
  return true;
}

}  // namespace commands

inline int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  uint64_t seed = commands::effective_seed(opts.seed);
  bool all_ok = true;
  try {
    if (!opts.script_file.empty()) {
      std::ifstream f(opts.script_file);
      if (!f) fail(ErrKind::ValidationError, "cannot read " + opts.script_file);
      std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      const TargetLibrary& lib = get_target(opts.script_base.target);
      Scheduler s = replay_script(base_proc(opts.script_base), lib, text);
      bool ok = commands::verify_chain(s, opts.trials, opts.mode, seed, out);
      out << "script " << opts.script_file << ": " << s.lines().size() << " steps, "
          << (ok ? "pass" : "FAIL") << "\n";
      return ok ? 0 : 1;
    }
    for (const KernelSpec& spec : opts.specs) {
      Scheduler s = schedule_kernel(spec);
      bool chain = commands::verify_chain(s, opts.trials, opts.mode, seed, out);
      bool oracle = commands::verify_final_oracle(s, spec, seed ^ 0xabcd, out);
      bool ok = chain && oracle;
      all_ok = all_ok && ok;
      out << kernel_symbol(spec) << ": " << s.lines().size() << " steps, trials="
          << opts.trials << ", " << (ok ? "pass" : "FAIL") << "\n";
    }
  } catch (const Error& e) {
    err << "verify failed: " << e.what() << "\n";
    return 1;
  }
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// shapes: run the layer workloads through the driver against the oracle

struct ShapesOptions {
  std::string model = "resnet50";  // resnet50 | vgg16 | square
  std::string family = "paper-family";
  std::string csv_path;
  bool full = false;    // lift the desk-scale caps
  int max_layers = 0;   // 0 = all; smaller values for quick smoke runs
  int trials = 1;
  uint64_t seed = 0x5eed;
  std::string target = "neon_f32";
};

inline const char* kShapesCsvHeader =
    "model,layer_id,m,n,k,k_used,kernel_mr,kernel_nr,kernel_calls,verdict,max_abs_err,"
    "trials,seed,wall_ms,note";

inline int cmd_shapes(const ShapesOptions& opts, std::ostream& out, std::ostream& err) {
  uint64_t seed = commands::effective_seed(opts.seed);
  try {
    std::vector<LayerShape> layers;
    if (opts.model == "square") {
      int id = 1;
      for (long long s : square_sizes()) layers.push_back({id++, s, s, s});
    } else {
      layers = model_layers(opts.model);
    }
    if (opts.max_layers > 0 && layers.size() > size_t(opts.max_layers))
      layers.resize(size_t(opts.max_layers));
    KernelFamily family = KernelFamily::preset(opts.family, opts.target);
    CacheParams params = select_cache_params(carmel_cache(), 8, 12, Precision::f32);

    std::ostringstream csv;
    csv << kShapesCsvHeader << "\n";
    bool all_ok = true;
    for (const auto& layer : layers) {
      GemmShape shape{layer.m, layer.n, layer.k, 1.0f, 1.0f};
      std::string note;
      long long k_cap = opts.full ? 0 : 512;
      if (!opts.full && opts.model == "square" && (shape.m > 1024 || shape.n > 1024)) {
        // desk scale: large square problems shrink m and n as well
        shape.m = std::min<long long>(shape.m, 1024);
        shape.n = std::min<long long>(shape.n, 1024);
        note = "m/n capped at 1024; ";
      }
      ShapeRunResult res;
      bool ok = true;
      for (int t = 0; t < opts.trials; ++t) {
        res = verify_shape(shape, family, params, seed + uint64_t(layer.id * 131 + t), k_cap);
        ok = ok && res.ok;
      }
      all_ok = all_ok && ok;
      res.note = note + res.note;
      out << opts.model << " layer " << layer.id << " (" << layer.m << "x" << layer.n << "x"
          << layer.k << "): " << (ok ? "pass" : "FAIL") << " k_used=" << res.k_used
          << " kernels=" << res.stats.kernels_used().size() << " wall="
          << int(res.wall_ms) << "ms"
          << (res.note.empty() ? "" : " (" + res.note + ")") << "\n";
      for (const auto& [key, calls] : res.stats.per_kernel) {
        csv << opts.model << "," << layer.id << "," << layer.m << "," << layer.n << ","
            << layer.k << "," << res.k_used << "," << key.first << "," << key.second << ","
            << calls << "," << (ok ? "pass" : "fail") << "," << res.max_abs_err << ","
            << opts.trials << "," << seed << "," << res.wall_ms << "," << res.note << "\n";
      }
    }
    if (!opts.csv_path.empty()) {
      commands::write_text(opts.csv_path, csv.str());
      out << "wrote " << opts.csv_path << "\n";
    }
    return all_ok ? 0 : 1;
  } catch (const Error& e) {
    err << "shapes failed: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// model: print cache parameters for a descriptor

struct ModelOptions {
  std::string cache = "carmel";  // preset name or a descriptor file
  int mr = 8;
  int nr = 12;
  Precision precision = Precision::f32;
};

namespace commands {

// descriptor file: three lines "l1|l2|l3 <capacity_bytes> <fraction>"
inline CacheDescriptor parse_cache_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrKind::ValidationError, "cannot read " + path);
  CacheDescriptor d;
  std::string level;
  long long cap;
  double frac;
  int seen = 0;
  while (f >> level >> cap >> frac) {
    CacheLevel lv{cap, frac};
    if (level == "l1")
      d.l1 = lv;
    else if (level == "l2")
      d.l2 = lv;
    else if (level == "l3")
      d.l3 = lv;
    else
      fail(ErrKind::ParseError, "cache descriptor level must be l1, l2 or l3");
    ++seen;
  }
  if (seen != 3) fail(ErrKind::ParseError, "cache descriptor needs l1, l2 and l3 lines");
  return d;
}

}  // namespace commands

inline int cmd_model(const ModelOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    CacheDescriptor d =
        opts.cache == "carmel" ? carmel_cache() : commands::parse_cache_file(opts.cache);
    bool degenerate = false;
    CacheParams p = select_cache_params(d, opts.mr, opts.nr, opts.precision, &degenerate);
    out << "cache=" << opts.cache << " mr=" << opts.mr << " nr=" << opts.nr
        << " precision=" << precision_name(opts.precision) << "\n";
    out << "kc=" << p.kc << " mc=" << p.mc << " nc=" << p.nc << "\n";
    if (degenerate) out << "warning: a cache level was too small; parameters were clamped\n";
    return 0;
  } catch (const Error& e) {
    err << "model failed: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// targets: write the builtin libraries as documents (the canonical examples
// under data/targets are generated this way)

inline int cmd_targets(const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& lib : builtin_targets())
      commands::write_text(std::filesystem::path(out_dir) / (lib.name + ".target"),
                           serialize_target(lib));
    out << "wrote " << builtin_targets().size() << " target documents to " << out_dir << "\n";
    return 0;
  } catch (const Error& e) {
    err << "targets failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ukgen
