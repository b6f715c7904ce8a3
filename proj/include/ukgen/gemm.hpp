#pragma once

#include <algorithm>
#include <chrono>
#include <memory>
#include <optional>
#include <mutex>
#include <thread>

#include "ukgen/interp.hpp"
#include "ukgen/recipes.hpp"

namespace ukgen {

// Five-loop packed GEMM around the generated micro-kernels, executed at desk
// scale through the interpreter. Loop order jc(nc) -> pc(kc) -> ic(mc) ->
// jr -> ir -> micro-kernel; B blocks pack into kc x nr' column panels, A
// blocks into mr' x kc row panels, both micro-panel-major so the kernel sees
// unit strides. Beta applies on the first pc block only; a zero beta is
// handled by clearing C first so garbage never reaches the arithmetic.

struct GemmShape {
  long long m = 1, n = 1, k = 1;
  float alpha = 1.0f, beta = 1.0f;
};

struct CacheParams {
  long long mc = 0, kc = 0, nc = 0;
  int mr = 8, nr = 12;
};

struct CacheLevel {
  long long capacity = 0;   // bytes
  double occupancy = 1.0;   // fraction available to the operand it holds
};

struct CacheDescriptor {
  CacheLevel l1, l2, l3;
};

// Carmel-like preset. The occupancy fractions are calibrated so that the
// f32 8x12 kernel gets kc = 512 (see docs/verification.md).
inline CacheDescriptor carmel_cache() {
  return CacheDescriptor{{64 * 1024, 0.625}, {2 * 1024 * 1024, 0.5}, {4 * 1024 * 1024, 0.5}};
}

// kc fills the L1 fraction with one mr x kc and one kc x nr micro-panel;
// mc fills the L2 fraction with the packed A block; nc fills the L3
// fraction with the packed B block. Degenerate levels clamp to one
// micro-panel and set the flag.
inline CacheParams select_cache_params(const CacheDescriptor& cache, int mr, int nr,
                                       Precision prec, bool* degenerate = nullptr) {
  if (cache.l1.capacity <= 0 || cache.l2.capacity < cache.l1.capacity ||
      cache.l3.capacity < cache.l2.capacity)
    fail(ErrKind::DegenerateCache, "capacities must be positive and increasing");
  long long bytes = byte_width(prec);
  bool clamped = false;
  CacheParams out;
  out.mr = mr;
  out.nr = nr;
  out.kc = static_cast<long long>(cache.l1.capacity * cache.l1.occupancy) /
           (static_cast<long long>(mr + nr) * bytes);
  if (out.kc < 1) {
    out.kc = 1;
    clamped = true;
  }
  out.mc = static_cast<long long>(cache.l2.capacity * cache.l2.occupancy) / (out.kc * bytes);
  out.mc -= out.mc % mr;
  if (out.mc < mr) {
    out.mc = mr;
    clamped = true;
  }
  out.nc = static_cast<long long>(cache.l3.capacity * cache.l3.occupancy) / (out.kc * bytes);
  out.nc -= out.nc % nr;
  if (out.nc < nr) {
    out.nc = nr;
    clamped = true;
  }
  if (degenerate) *degenerate = clamped;
  return out;
}

// ---------------------------------------------------------------------------
// packing

struct PackedPanel {
  std::vector<float> data;
  std::vector<int> chunks;            // micro-panel heights (mr' or nr')
  std::vector<long long> offsets;     // flat offset of each micro-panel
  long long kc = 0;
};

// A block (mcb x kcb) from row-major A with leading dimension lda. Panel t
// holds rows [sum(chunks[0..t]), +chunks[t]); element (i, p) of panel t
// lives at offset(t) + p * chunks[t] + i.
inline PackedPanel pack_a_panels(const float* a, long long lda, long long row0, long long col0,
                                 long long kcb, const std::vector<int>& chunks) {
  PackedPanel out;
  out.chunks = chunks;
  out.kc = kcb;
  long long total = 0;
  for (int h : chunks) {
    out.offsets.push_back(total);
    total += static_cast<long long>(h) * kcb;
  }
  out.data.resize(static_cast<size_t>(total));
  long long row = 0;
  for (size_t t = 0; t < chunks.size(); ++t) {
    float* dst = out.data.data() + out.offsets[t];
    int h = chunks[t];
    for (long long p = 0; p < kcb; ++p)
      for (int i = 0; i < h; ++i)
        dst[p * h + i] = a[(row0 + row + i) * lda + (col0 + p)];
    row += h;
  }
  return out;
}

// B block (kcb x ncb) from row-major B. Panel t holds columns of width
// chunks[t]; element (p, j) lives at offset(t) + p * chunks[t] + j.
inline PackedPanel pack_b_panels(const float* b, long long ldb, long long row0, long long col0,
                                 long long kcb, const std::vector<int>& chunks) {
  PackedPanel out;
  out.chunks = chunks;
  out.kc = kcb;
  long long total = 0;
  for (int w : chunks) {
    out.offsets.push_back(total);
    total += static_cast<long long>(w) * kcb;
  }
  out.data.resize(static_cast<size_t>(total));
  long long col = 0;
  for (size_t t = 0; t < chunks.size(); ++t) {
    float* dst = out.data.data() + out.offsets[t];
    int w = chunks[t];
    for (long long p = 0; p < kcb; ++p)
      for (int j = 0; j < w; ++j)
        dst[p * w + j] = b[(row0 + p) * ldb + (col0 + col + j)];
    col += w;
  }
  return out;
}

// Uniform-width entry points matching the driver's contract.
inline PackedPanel pack_A(const float* a, long long lda, long long mcb, long long kcb, int mr) {
  if (mcb % mr != 0)
    fail(ErrKind::DimensionMismatch, "pack_A: mr must divide the block height");
  return pack_a_panels(a, lda, 0, 0, kcb, std::vector<int>(static_cast<size_t>(mcb / mr), mr));
}
inline PackedPanel pack_B(const float* b, long long ldb, long long kcb, long long ncb, int nr) {
  if (ncb % nr != 0)
    fail(ErrKind::DimensionMismatch, "pack_B: nr must divide the block width");
  return pack_b_panels(b, ldb, 0, 0, kcb, std::vector<int>(static_cast<size_t>(ncb / nr), nr));
}

// ---------------------------------------------------------------------------
// kernel family at run time

class KernelFamily {
 public:
  struct Member {
    int mr, nr;
    std::shared_ptr<Executable> unit;
    std::shared_ptr<Executable> generic;
  };

  explicit KernelFamily(const std::string& target = "neon_f32") : target_(target) {}

  void add(int mr, int nr) {
    const TargetLibrary& lib = get_target(target_);
    Member m;
    m.mr = mr;
    m.nr = nr;
    m.unit = std::make_shared<Executable>(
        schedule_kernel(spec_for(mr, nr, Precision::f32, target_, false)).proc(), lib);
    m.generic = std::make_shared<Executable>(
        schedule_kernel(spec_for(mr, nr, Precision::f32, target_, true)).proc(), lib);
    members_.push_back(std::move(m));
  }

  static KernelFamily preset(const std::string& name, const std::string& target = "neon_f32") {
    KernelFamily fam(target);
    for (auto [mr, nr] : preset_members(name)) fam.add(mr, nr);
    return fam;
  }

  const Member* find(int mr, int nr) const {
    for (const auto& m : members_)
      if (m.mr == mr && m.nr == nr) return &m;
    return nullptr;
  }
  const std::vector<Member>& members() const { return members_; }
  std::vector<int> mr_values() const {
    std::vector<int> out;
    for (const auto& m : members_)
      if (std::find(out.begin(), out.end(), m.mr) == out.end()) out.push_back(m.mr);
    std::sort(out.rbegin(), out.rend());
    return out;
  }
  std::vector<int> nr_values() const {
    std::vector<int> out;
    for (const auto& m : members_)
      if (std::find(out.begin(), out.end(), m.nr) == out.end()) out.push_back(m.nr);
    std::sort(out.rbegin(), out.rend());
    return out;
  }

 private:
  std::string target_;
  std::vector<Member> members_;
};

// ---------------------------------------------------------------------------
// edge tiling: choose one mr menu and one nr menu so that every block
// decomposes and every (mr', nr') pair the decompositions induce exists in
// the family. Greedy largest-fit would pick tiles the family cannot pair
// (e.g. an 8-wide column chunk forces 8xNR kernels for every row chunk), so
// menus are selected jointly, minimizing kernel invocations with ties
// broken toward larger nr'.

namespace tiling {

// minimal-count decomposition of `extent` into menu chunks, largest first
inline std::optional<std::vector<int>> chunks_for(long long extent,
                                                  const std::vector<int>& menu) {
  if (extent == 0) return std::vector<int>{};
  std::vector<int> best(static_cast<size_t>(extent) + 1, -1);
  std::vector<int> take(static_cast<size_t>(extent) + 1, 0);
  best[0] = 0;
  for (long long v = 1; v <= extent; ++v) {
    for (int c : menu) {
      if (c > v || best[static_cast<size_t>(v - c)] < 0) continue;
      int cand = best[static_cast<size_t>(v - c)] + 1;
      if (best[static_cast<size_t>(v)] < 0 || cand < best[static_cast<size_t>(v)] ||
          (cand == best[static_cast<size_t>(v)] && c > take[static_cast<size_t>(v)])) {
        best[static_cast<size_t>(v)] = cand;
        take[static_cast<size_t>(v)] = c;
      }
    }
  }
  if (best[static_cast<size_t>(extent)] < 0) return std::nullopt;
  std::vector<int> out;
  for (long long v = extent; v > 0; v -= take[static_cast<size_t>(v)])
    out.push_back(take[static_cast<size_t>(v)]);
  std::sort(out.rbegin(), out.rend());
  return out;
}

struct Menus {
  std::vector<int> mrs, nrs;
};

inline std::optional<Menus> choose_menus(const KernelFamily& family,
                                         const std::vector<long long>& m_blocks,
                                         const std::vector<long long>& n_blocks) {
  std::vector<int> mrs = family.mr_values();
  std::vector<int> nrs = family.nr_values();
  auto subsets = [](const std::vector<int>& v) {
    std::vector<std::vector<int>> out;
    for (unsigned mask = 1; mask < (1u << v.size()); ++mask) {
      std::vector<int> s;
      for (size_t i = 0; i < v.size(); ++i)
        if (mask & (1u << i)) s.push_back(v[i]);
      out.push_back(std::move(s));
    }
    return out;
  };
  std::optional<Menus> best;
  long long best_cost = 0;
  int best_nr = 0, best_mr = 0;
  for (const auto& M : subsets(mrs)) {
    long long m_cost = 0;
    bool m_ok = true;
    for (long long b : m_blocks) {
      auto ch = chunks_for(b, M);
      if (!ch) {
        m_ok = false;
        break;
      }
      m_cost += static_cast<long long>(ch->size());
    }
    if (!m_ok) continue;
    for (const auto& N : subsets(nrs)) {
      bool pairs_ok = true;
      for (int mr : M)
        for (int nr : N)
          if (!family.find(mr, nr)) pairs_ok = false;
      if (!pairs_ok) continue;
      long long n_cost = 0;
      bool n_ok = true;
      for (long long b : n_blocks) {
        auto ch = chunks_for(b, N);
        if (!ch) {
          n_ok = false;
          break;
        }
        n_cost += static_cast<long long>(ch->size());
      }
      if (!n_ok) continue;
      long long cost = m_cost * n_cost;
      int max_nr = *std::max_element(N.begin(), N.end());
      int max_mr = *std::max_element(M.begin(), M.end());
      if (!best || cost < best_cost ||
          (cost == best_cost && (max_nr > best_nr || (max_nr == best_nr && max_mr > best_mr)))) {
        best = Menus{M, N};
        best_cost = cost;
        best_nr = max_nr;
        best_mr = max_mr;
      }
    }
  }
  return best;
}

}  // namespace tiling

// ---------------------------------------------------------------------------
// the driver

struct GemmStats {
  long long kernel_calls = 0;
  std::map<std::pair<int, int>, long long> per_kernel;  // (mr', nr') -> invocations

  std::vector<std::pair<int, int>> kernels_used() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, _] : per_kernel) out.push_back(key);
    return out;
  }
};

inline std::vector<float> gemm(const std::vector<float>& a, const std::vector<float>& b,
                               const std::vector<float>& c, const GemmShape& shape,
                               const CacheParams& params, const KernelFamily& family,
                               GemmStats* stats = nullptr, bool parallel_jc = false) {
  const long long m = shape.m, n = shape.n, k = shape.k;
  if (a.size() != size_t(m * k) || b.size() != size_t(k * n) || c.size() != size_t(m * n))
    fail(ErrKind::ShapeMismatch, "operand sizes do not match the shape");
  std::vector<float> out = c;
  float beta0 = shape.beta;
  if (shape.beta == 0.0f) {
    std::fill(out.begin(), out.end(), 0.0f);
    beta0 = 1.0f;
  }

  std::vector<long long> m_blocks{std::min(params.mc, m)};
  if (m % params.mc != 0 && m > params.mc) m_blocks.push_back(m % params.mc);
  std::vector<long long> n_blocks{std::min(params.nc, n)};
  if (n % params.nc != 0 && n > params.nc) n_blocks.push_back(n % params.nc);
  auto menus = tiling::choose_menus(family, m_blocks, n_blocks);
  if (!menus)
    fail(ErrKind::MissingKernelForTile,
         "no combination of family kernels tiles this shape's blocks");

  std::mutex stats_mu;
  auto note_kernel = [&](int mr, int nr) {
    if (!stats) return;
    std::lock_guard<std::mutex> lock(stats_mu);
    ++stats->kernel_calls;
    ++stats->per_kernel[{mr, nr}];
  };

  auto run_jc = [&](long long jc) {
    Executable::Workspace ws;
    std::vector<float> tile;
    long long ncb = std::min(params.nc, n - jc);
    std::vector<int> n_chunks = *tiling::chunks_for(ncb, menus->nrs);
    for (long long pc = 0; pc < k; pc += params.kc) {
      long long kcb = std::min(params.kc, k - pc);
      float beta_pass = pc == 0 ? beta0 : 1.0f;
      PackedPanel packed_b = pack_b_panels(b.data(), n, pc, jc, kcb, n_chunks);
      for (long long ic = 0; ic < m; ic += params.mc) {
        long long mcb = std::min(params.mc, m - ic);
        std::vector<int> m_chunks = *tiling::chunks_for(mcb, menus->mrs);
        PackedPanel packed_a = pack_a_panels(a.data(), k, ic, pc, kcb, m_chunks);
        long long jr = 0;
        for (size_t jt = 0; jt < n_chunks.size(); ++jt) {
          int nrc = n_chunks[jt];
          long long ir = 0;
          for (size_t it = 0; it < m_chunks.size(); ++it) {
            int mrc = m_chunks[it];
            const KernelFamily::Member* member = family.find(mrc, nrc);
            if (!member)
              fail(ErrKind::MissingKernelForTile, "no kernel for tile " + std::to_string(mrc) +
                                                      "x" + std::to_string(nrc));
            bool use_unit = shape.alpha == 1.0f && beta_pass == 1.0f;
            const Executable& exec = use_unit ? *member->unit : *member->generic;
            // gather the C tile, transposed to the kernel's [nr', mr'] layout
            tile.assign(size_t(nrc) * size_t(mrc), 0.0f);
            for (int j = 0; j < nrc; ++j)
              for (int i = 0; i < mrc; ++i)
                tile[size_t(j) * mrc + i] = out[size_t(ic + ir + i) * n + (jc + jr + j)];
            float* a_panel = packed_a.data.data() + packed_a.offsets[it];
            float* b_panel = packed_b.data.data() + packed_b.offsets[jt];
            long long sizes[1] = {kcb};
            float alpha = shape.alpha, beta_arg = beta_pass;
            if (use_unit) {
              float* args[3] = {tile.data(), a_panel, b_panel};
              exec.run_views(std::span<const long long>(sizes, 1),
                             std::span<float* const>(args, 3), ws);
            } else {
              float* args[5] = {&alpha, &beta_arg, tile.data(), a_panel, b_panel};
              exec.run_views(std::span<const long long>(sizes, 1),
                             std::span<float* const>(args, 5), ws);
            }
            for (int j = 0; j < nrc; ++j)
              for (int i = 0; i < mrc; ++i)
                out[size_t(ic + ir + i) * n + (jc + jr + j)] = tile[size_t(j) * mrc + i];
            note_kernel(mrc, nrc);
            ir += mrc;
          }
          jr += nrc;
        }
      }
    }
  };

  std::vector<long long> jcs;
  for (long long jc = 0; jc < n; jc += params.nc) jcs.push_back(jc);
  if (parallel_jc && jcs.size() > 1) {
    // jc panels write disjoint C column ranges
    std::vector<std::thread> workers;
    for (long long jc : jcs) workers.emplace_back(run_jc, jc);
    for (auto& w : workers) w.join();
  } else {
    for (long long jc : jcs) run_jc(jc);
  }
  return out;
}

// Reference triple loop used by tests and the shape harness.
inline std::vector<float> naive_gemm(const std::vector<float>& a, const std::vector<float>& b,
                                     const std::vector<float>& c, const GemmShape& shape) {
  std::vector<float> out = c;
  for (long long i = 0; i < shape.m; ++i)
    for (long long j = 0; j < shape.n; ++j) {
      float acc = shape.beta * (shape.beta == 0.0f ? 0.0f : out[size_t(i) * shape.n + j]);
      for (long long p = 0; p < shape.k; ++p)
        acc += a[size_t(i) * shape.k + p] * (shape.alpha * b[size_t(p) * shape.n + j]);
      out[size_t(i) * shape.n + j] = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// desk-scale shape verification (layer workloads)

struct ShapeRunResult {
  long long m = 0, n = 0, k = 0, k_used = 0;
  bool ok = false;
  double max_abs_err = 0.0;
  GemmStats stats;
  double wall_ms = 0.0;
  std::string note;
};

inline ShapeRunResult verify_shape(const GemmShape& full_shape, const KernelFamily& family,
                                   const CacheParams& params, uint64_t seed,
                                   long long k_cap = 512) {
  GemmShape shape = full_shape;
  ShapeRunResult res;
  res.m = full_shape.m;
  res.n = full_shape.n;
  res.k = full_shape.k;
  if (k_cap > 0 && shape.k > k_cap) {
    shape.k = k_cap;
    res.note = "k capped at " + std::to_string(k_cap);
  }
  res.k_used = shape.k;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> val(-2, 2);
  std::vector<float> a(size_t(shape.m * shape.k)), b(size_t(shape.k * shape.n)),
      c(size_t(shape.m * shape.n));
  for (auto& x : a) x = float(val(rng));
  for (auto& x : b) x = float(val(rng));
  for (auto& x : c) x = float(val(rng));

  auto t0 = std::chrono::steady_clock::now();
  std::vector<float> got = gemm(a, b, c, shape, params, family, &res.stats);
  auto t1 = std::chrono::steady_clock::now();
  res.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  std::vector<float> want = naive_gemm(a, b, c, shape);
  res.ok = true;
  for (size_t i = 0; i < got.size(); ++i) {
    if (!integer_exact_equal(got[i], want[i])) {
      res.ok = false;
      res.max_abs_err = std::max(res.max_abs_err, std::fabs(double(got[i]) - double(want[i])));
    }
  }
  return res;
}

}  // namespace ukgen
