#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ukgen/errors.hpp"

namespace ukgen {

// Exact rational scalar. Only ever produced by IR constants; transforms stay
// exact and values materialize at buffer precision in the interpreter and
// the C emitter.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) fail(ErrKind::Internal, "rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
};

// Canonical affine form: sum of integer-coefficient symbol terms plus an
// integer constant. Symbols are loop variables, size parameters, or
// instruction lane parameters; which is which is resolved by context.
// Keeping indices in this form (instead of general expression trees) makes
// structural comparison insensitive to algebraically equal spellings.
struct AffineExpr {
  std::map<std::string, long long> terms;  // symbol -> nonzero coefficient
  long long constant = 0;

  AffineExpr() = default;

  static AffineExpr cst(long long c) {
    AffineExpr e;
    e.constant = c;
    return e;
  }
  static AffineExpr sym(const std::string& name, long long coeff = 1) {
    AffineExpr e;
    if (coeff != 0) e.terms[name] = coeff;
    return e;
  }

  bool is_constant() const { return terms.empty(); }
  bool references(const std::string& name) const { return terms.count(name) != 0; }
  long long coeff_of(const std::string& name) const {
    auto it = terms.find(name);
    return it == terms.end() ? 0 : it->second;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    for (const auto& [s, c] : o.terms) {
      long long v = (terms[s] += c);
      if (v == 0) terms.erase(s);
    }
    constant += o.constant;
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) {
    for (const auto& [s, c] : o.terms) {
      long long v = (terms[s] -= c);
      if (v == 0) terms.erase(s);
    }
    constant -= o.constant;
    return *this;
  }
  AffineExpr& operator*=(long long k) {
    if (k == 0) {
      terms.clear();
      constant = 0;
      return *this;
    }
    for (auto& [s, c] : terms) c *= k;
    constant *= k;
    return *this;
  }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(AffineExpr a, long long k) { return a *= k; }

  friend bool operator==(const AffineExpr& a, const AffineExpr& b) {
    return a.constant == b.constant && a.terms == b.terms;
  }
  friend bool operator!=(const AffineExpr& a, const AffineExpr& b) { return !(a == b); }
  friend bool operator<(const AffineExpr& a, const AffineExpr& b) {
    if (a.constant != b.constant) return a.constant < b.constant;
    return a.terms < b.terms;
  }

  // Substitutes `name := repl` (used by divide_loop and unroll_loop).
  AffineExpr substituted(const std::string& name, const AffineExpr& repl) const {
    auto it = terms.find(name);
    if (it == terms.end()) return *this;
    AffineExpr out = *this;
    long long c = it->second;
    out.terms.erase(name);
    out += repl * c;
    return out;
  }

  std::vector<std::string> symbols() const {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& [s, _] : terms) out.push_back(s);
    return out;
  }
};

// Range environment for the conservative interval check. A loop variable v
// ranges over [0, bound) where `bound` is affine over size parameters only;
// a size parameter ranges over [1, +inf); a lane parameter over a constant
// [0, lanes).
struct SymRange {
  enum Kind { loop, size_param, lane } kind = loop;
  AffineExpr bound;  // exclusive upper bound; unused for size_param
};

using SymEnv = std::map<std::string, SymRange>;

namespace detail {

// Eliminates loop/lane symbols, returning the extreme of `e` as an affine
// expression over size parameters only. nullopt if a symbol is unknown.
inline std::optional<AffineExpr> extremize(const AffineExpr& e, const SymEnv& env, bool want_max) {
  AffineExpr out = AffineExpr::cst(e.constant);
  for (const auto& [s, c] : e.terms) {
    auto it = env.find(s);
    if (it == env.end()) return std::nullopt;
    const SymRange& r = it->second;
    if (r.kind == SymRange::size_param) {
      out += AffineExpr::sym(s, c);
      continue;
    }
    // v in [0, bound): pick 0 or bound-1 depending on the coefficient sign
    bool take_high = (c > 0) == want_max;
    if (take_high) out += (r.bound - AffineExpr::cst(1)) * c;
    // taking v = 0 contributes nothing
  }
  return out;
}

// Minimum of an affine expression over size parameters, each >= 1.
// nullopt means unbounded below.
inline std::optional<long long> min_over_params(const AffineExpr& e) {
  long long acc = e.constant;
  for (const auto& [s, c] : e.terms) {
    (void)s;
    if (c < 0) return std::nullopt;  // a large parameter drives it down
    acc += c;                        // minimized at parameter = 1
  }
  return acc;
}

}  // namespace detail

// Conservative test for `e >= 0` for every admissible assignment: loop vars
// within their ranges and size parameters >= 1. Unknown symbols fail.
inline bool provably_nonnegative(const AffineExpr& e, const SymEnv& env) {
  auto lo = detail::extremize(e, env, /*want_max=*/false);
  if (!lo) return false;
  auto m = detail::min_over_params(*lo);
  return m && *m >= 0;
}

// Conservative test for `e <= limit - 1`, i.e. `limit - 1 - e >= 0`.
inline bool provably_below(const AffineExpr& e, const AffineExpr& limit, const SymEnv& env) {
  auto hi = detail::extremize(e, env, /*want_max=*/true);
  if (!hi) return false;
  AffineExpr slack = limit - AffineExpr::cst(1) - *hi;
  auto m = detail::min_over_params(slack);
  return m && *m >= 0;
}

// Both bounds at once: 0 <= e < limit for all admissible assignments.
inline bool provably_in_range(const AffineExpr& e, const AffineExpr& limit, const SymEnv& env) {
  return provably_nonnegative(e, env) && provably_below(e, limit, env);
}

}  // namespace ukgen
