#pragma once

// Shared construction and verification helpers for the test suites.

#include <string>
#include <vector>

#include "ukgen/interp.hpp"
#include "ukgen/ir.hpp"
#include "ukgen/script.hpp"

namespace testutil {

using namespace ukgen;

inline AffineExpr aff(long long c) { return AffineExpr::cst(c); }
inline AffineExpr aff(const std::string& s, long long coeff = 1) {
  return AffineExpr::sym(s, coeff);
}

inline BufferDecl dram_buf(std::string name, std::vector<AffineExpr> dims, bool read_only,
                           Precision prec = Precision::f32) {
  BufferDecl d;
  d.name = std::move(name);
  d.dims = std::move(dims);
  d.precision = prec;
  d.read_only = read_only;
  return d;
}

// The naive transposed-layout micro-kernel: C[j,i] += A[k,i] * B[k,j] with
// loop order k, j, i. This is the starting point of every schedule.
inline Proc naive_ukernel(Precision prec = Precision::f32) {
  Proc p;
  p.name = "ukernel";
  p.size_params = {"M_R", "N_R", "K_R"};
  p.args = {
      dram_buf("C", {aff("N_R"), aff("M_R")}, false, prec),
      dram_buf("A", {aff("K_R"), aff("M_R")}, true, prec),
      dram_buf("B", {aff("K_R"), aff("N_R")}, true, prec),
  };
  Stmt::Ptr update = Stmt::reduce(
      "C", {aff("j"), aff("i")},
      Expr::binary('*', Expr::read("A", {aff("k"), aff("i")}),
                   Expr::read("B", {aff("k"), aff("j")})));
  p.body = {Stmt::loop(
      "k", aff("K_R"),
      {Stmt::loop("j", aff("N_R"), {Stmt::loop("i", aff("M_R"), {update})})})};
  return p;
}

// Checks that every adjacent pair of procs in a recorded schedule is
// interpreter-equivalent under exact integer inputs. Steps that freeze size
// parameters are checked through the size-binding identity instead.
struct ChainResult {
  bool ok = true;
  std::string detail;
};

inline ChainResult check_schedule_chain(const Scheduler& s, int trials, uint64_t seed = 0x5eed) {
  const auto& h = s.history();
  const TargetLibrary& lib = s.lib();
  for (size_t i = 0; i + 1 < h.size(); ++i) {
    const Proc& a = h[i];
    const Proc& b = h[i + 1];
    if (a.size_params != b.size_params) {
      // a partial evaluation: removed params were frozen to constants; run
      // the specialized proc against the original with the values bound
      std::map<std::string, long long> frozen;
      for (const auto& sp : a.size_params) {
        if (std::find(b.size_params.begin(), b.size_params.end(), sp) != b.size_params.end())
          continue;
        // recover the constant from the argument dims
        for (size_t ai = 0; ai < a.args.size(); ++ai)
          for (size_t d = 0; d < a.args[ai].dims.size(); ++d)
            if (a.args[ai].dims[d] == AffineExpr::sym(sp) &&
                b.args[ai].dims[d].is_constant())
              frozen[sp] = b.args[ai].dims[d].constant;
      }
      std::mt19937_64 rng(seed + i);
      std::uniform_int_distribution<long long> size_dist(1, 6);
      std::uniform_int_distribution<int> val(-2, 2);
      for (int t = 0; t < trials; ++t) {
        Bindings bb;
        for (const auto& sp : b.size_params) bb.sizes[sp] = size_dist(rng);
        Bindings ba = bb;
        for (const auto& [k, v] : frozen) ba.sizes[k] = v;
        for (const auto& arg : b.args) {
          std::vector<long long> dims;
          for (const auto& dim : arg.dims) {
            long long x = dim.constant;
            for (const auto& [sym, c] : dim.terms) x += ba.sizes.at(sym) * c;
            dims.push_back(x);
          }
          ConcreteBuffer buf = ConcreteBuffer::zeros(dims, arg.precision);
          for (auto& v : buf.data) v = float(val(rng));
          bb.buffers[arg.name] = buf;
          ba.buffers[arg.name] = std::move(buf);
        }
        Bindings ra = run(a, ba, lib);
        Bindings rb = run(b, bb, lib);
        for (const auto& [name, bufb] : rb.buffers) {
          if (ra.buffers.at(name).data != bufb.data)
            return {false, "partial_eval step " + std::to_string(i) + " differs on " + name};
        }
      }
      continue;
    }
    EquivReport rep = equivalent(a, b, trials, ValueMode::integer_exact, lib, seed + i);
    if (!rep.equivalent)
      return {false, "step " + std::to_string(i) + " -> " + std::to_string(i + 1) + ": " +
                         rep.to_line() + "\nafter:\n" + pretty_print(b)};
  }
  return {true, ""};
}

}  // namespace testutil
