// seqsft: finite-depth (locally constant) functions and functionals on a
// sequential shift space. Values are dense vectors over the admissible-word
// table at one (base index, depth), which makes every operation here an
// exact finite-dimensional computation.
#pragma once

#include <cmath>
#include <type_traits>

#include "seqsft/symbolic.hpp"

namespace seqsft {

template <class Scalar>
struct FiniteDepthFn {
  long base = 0;
  int depth = 1;
  WordSetPtr words;
  Vector<Scalar> values;

  std::int64_t size() const { return values.size(); }
};

using FnR = FiniteDepthFn<Real>;
using FnC = FiniteDepthFn<Complex>;

template <class Scalar>
FiniteDepthFn<Scalar> make_constant(const ValidatedSystem& sys, long j, int depth,
                                    Scalar value) {
  FiniteDepthFn<Scalar> f;
  f.base = j;
  f.depth = depth;
  f.words = sys.words(j, depth);
  f.values = Vector<Scalar>::Constant(f.words->count(), value);
  return f;
}

// Indicator of the cylinder named by an admissible word.
inline FnR indicator(const ValidatedSystem& sys, const Word& w) {
  if (!sys.is_admissible(w)) throw Inadmissible("indicator of an inadmissible word");
  FnR f = make_constant<Real>(sys, w.base, static_cast<int>(w.length()), 0.0);
  auto r = f.words->find(w.symbols.data());
  if (!r) throw Inadmissible("word not present in its word table");
  f.values[*r] = 1.0;
  return f;
}

// Raise depth without changing pointwise values.
template <class Scalar>
FiniteDepthFn<Scalar> embed(const ValidatedSystem& sys, const FiniteDepthFn<Scalar>& f,
                            int depth) {
  if (depth < f.depth) throw DepthOverflow("embed cannot lower depth");
  FiniteDepthFn<Scalar> out = f;
  while (out.depth < depth) {
    WordSetPtr finer = sys.words(out.base, out.depth + 1);
    Vector<Scalar> v(finer->count());
    for (std::int64_t i = 0; i < finer->count(); ++i)
      v[i] = out.values[finer->prefix_of[static_cast<std::size_t>(i)]];
    out.depth += 1;
    out.words = finer;
    out.values = std::move(v);
  }
  return out;
}

// Lower depth, asserting the function really is constant on refinement
// fibers (within tol).
template <class Scalar>
FiniteDepthFn<Scalar> truncate(const ValidatedSystem& sys, const FiniteDepthFn<Scalar>& f,
                               int depth, Real tol = 1e-10) {
  if (depth > f.depth) throw DepthOverflow("truncate cannot raise depth");
  if (depth < 1) throw DepthOverflow("depth must be >= 1");
  FiniteDepthFn<Scalar> out = f;
  while (out.depth > depth) {
    WordSetPtr coarser = sys.words(out.base, out.depth - 1);
    Vector<Scalar> v(coarser->count());
    Eigen::Matrix<bool, Eigen::Dynamic, 1> seen =
        Eigen::Matrix<bool, Eigen::Dynamic, 1>::Constant(coarser->count(), false);
    for (std::int64_t i = 0; i < out.words->count(); ++i) {
      std::uint32_t p = out.words->prefix_of[static_cast<std::size_t>(i)];
      if (!seen[p]) {
        v[p] = out.values[i];
        seen[p] = true;
      } else if (std::abs(out.values[i] - v[p]) > tol) {
        throw NotLocallyConstant("values differ across a refinement fiber by more than tol");
      }
    }
    out.depth -= 1;
    out.words = coarser;
    out.values = std::move(v);
  }
  return out;
}

// Value at an admissible word of length >= depth with the same base.
template <class Scalar>
Scalar evaluate(const FiniteDepthFn<Scalar>& f, const Word& w) {
  if (w.base != f.base) throw BaseMismatch("evaluate needs matching base index");
  if (w.length() < f.depth) throw DepthOverflow("word shorter than function depth");
  auto r = f.words->find(w.symbols.data());
  if (!r) throw Inadmissible("word prefix not admissible");
  return f.values[*r];
}

// (f o T_j): pull a function at base j+1 back through the shift; depth grows
// by one per step.
template <class Scalar>
FiniteDepthFn<Scalar> shift_pullback(const ValidatedSystem& sys,
                                     const FiniteDepthFn<Scalar>& f, int steps = 1) {
  if (steps < 0) throw DepthOverflow("negative pullback");
  FiniteDepthFn<Scalar> cur = f;
  for (int s = 0; s < steps; ++s) {
    FiniteDepthFn<Scalar> out;
    out.base = cur.base - 1;
    out.depth = cur.depth + 1;
    out.words = sys.words(out.base, out.depth);
    out.values.resize(out.words->count());
    for (std::int64_t i = 0; i < out.words->count(); ++i)
      out.values[i] = cur.values[out.words->suffix_of[static_cast<std::size_t>(i)]];
    cur = std::move(out);
  }
  return cur;
}

namespace detail {
template <class A, class B>
std::pair<FiniteDepthFn<A>, FiniteDepthFn<B>> align(const ValidatedSystem& sys,
                                                    const FiniteDepthFn<A>& f,
                                                    const FiniteDepthFn<B>& g) {
  if (f.base != g.base) throw BaseMismatch("operands have different base indices");
  int d = f.depth > g.depth ? f.depth : g.depth;
  return {embed(sys, f, d), embed(sys, g, d)};
}
}  // namespace detail

template <class Scalar>
FiniteDepthFn<Scalar> add(const ValidatedSystem& sys, const FiniteDepthFn<Scalar>& f,
                          const FiniteDepthFn<Scalar>& g) {
  auto [a, b] = detail::align(sys, f, g);
  a.values += b.values;
  return a;
}

template <class Scalar>
FiniteDepthFn<Scalar> sub(const ValidatedSystem& sys, const FiniteDepthFn<Scalar>& f,
                          const FiniteDepthFn<Scalar>& g) {
  auto [a, b] = detail::align(sys, f, g);
  a.values -= b.values;
  return a;
}

template <class Scalar, class S2>
FiniteDepthFn<Scalar> scale(const FiniteDepthFn<Scalar>& f, S2 c) {
  FiniteDepthFn<Scalar> out = f;
  out.values *= Scalar(c);
  return out;
}

template <class Scalar>
FiniteDepthFn<Scalar> mul(const ValidatedSystem& sys, const FiniteDepthFn<Scalar>& f,
                          const FiniteDepthFn<Scalar>& g) {
  auto [a, b] = detail::align(sys, f, g);
  a.values.array() *= b.values.array();
  return a;
}

// e^{itf} for real f: unit-modulus complex values.
inline FnC exp_scaled(const FnR& f, Real t) {
  FnC out;
  out.base = f.base;
  out.depth = f.depth;
  out.words = f.words;
  out.values =
      ((Complex(0.0, 1.0) * t) * f.values.cast<Complex>()).array().exp().matrix();
  return out;
}

template <class Scalar>
Real sup_norm(const FiniteDepthFn<Scalar>& f) {
  return f.values.size() == 0 ? 0.0 : f.values.template lpNorm<Eigen::Infinity>();
}

namespace detail {

// Max |f(w) - f(w')| over pairs whose first disagreement is exactly at
// offset k, accumulated as max_k spread_k * 2^{alpha k}. Words are
// lexicographically sorted, so same-prefix classes are contiguous and the
// recursion below visits each pair in exactly one (k, class).
template <class Scalar>
void seminorm_recurse(const WordSet& ws, const Vector<Scalar>& vals, std::int64_t lo,
                      std::int64_t hi, int k, Real alpha, Real& best) {
  if (k >= ws.depth || hi - lo < 2) return;
  Real w_k = std::pow(2.0, alpha * static_cast<Real>(k));

  // Subgroup boundaries by the symbol at offset k.
  std::vector<std::int64_t> cut;
  cut.push_back(lo);
  for (std::int64_t i = lo + 1; i < hi; ++i)
    if (ws.word(i)[k] != ws.word(i - 1)[k]) cut.push_back(i);
  cut.push_back(hi);

  if (cut.size() > 2) {
    if constexpr (std::is_same_v<Scalar, Real>) {
      // Cross-group spread: by monotonicity of max/min it is enough to
      // track the two best group maxima and minima with their groups.
      struct Ext { Real v; std::size_t g; };
      Ext max1{-1e300, 0}, max2{-1e300, 0}, min1{1e300, 0}, min2{1e300, 0};
      for (std::size_t g = 0; g + 1 < cut.size(); ++g) {
        Real gmax = -1e300, gmin = 1e300;
        for (std::int64_t i = cut[g]; i < cut[g + 1]; ++i) {
          gmax = std::max(gmax, vals[i]);
          gmin = std::min(gmin, vals[i]);
        }
        if (gmax > max1.v) { max2 = max1; max1 = {gmax, g}; }
        else if (gmax > max2.v) max2 = {gmax, g};
        if (gmin < min1.v) { min2 = min1; min1 = {gmin, g}; }
        else if (gmin < min2.v) min2 = {gmin, g};
      }
      Real spread = max1.g != min1.g ? max1.v - min1.v
                                     : std::max(max1.v - min2.v, max2.v - min1.v);
      if (spread > 0.0) best = std::max(best, spread * w_k);
    } else {
      for (std::size_t g = 0; g + 1 < cut.size(); ++g)
        for (std::int64_t i = cut[g]; i < cut[g + 1]; ++i)
          for (std::int64_t j = cut[g + 1]; j < hi; ++j)
            best = std::max(best, std::abs(vals[i] - vals[j]) * w_k);
    }
  }
  for (std::size_t g = 0; g + 1 < cut.size(); ++g)
    seminorm_recurse(ws, vals, cut[g], cut[g + 1], k + 1, alpha, best);
}

}  // namespace detail

// Exact Holder constant of the locally constant extension: max over word
// pairs of |f(w) - f(w')| / 2^{-k alpha}, k the first disagreement offset.
template <class Scalar>
Real holder_seminorm(const FiniteDepthFn<Scalar>& f, Real alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
  Real best = 0.0;
  detail::seminorm_recurse(*f.words, f.values, 0, f.words->count(), 0, alpha, best);
  return best;
}

template <class Scalar>
Real star_norm(const FiniteDepthFn<Scalar>& f, Real alpha, Real C1) {
  if (!(C1 > 0.0)) throw ConfigError("C1 must be positive");
  return std::max(sup_norm(f), holder_seminorm(f, alpha) / (2.0 * C1));
}

// A function per time index j in [0, size). Out-of-window indices follow the
// system's extension rule; rebasing reuses the stored value table, which is
// valid because the extension rule guarantees identical word tables at the
// mapped index.
struct FnSeq {
  std::vector<FnR> entries;

  long size() const { return static_cast<long>(entries.size()); }

  FnR at(const ValidatedSystem& sys, long j) const {
    if (entries.empty()) throw IndexOutOfWindow("empty function sequence");
    long n = size();
    long m = j;
    if (j < 0 || j >= n) {
      const ExtensionRule& ext = sys.spec().extension;
      if (ext.kind == ExtensionRule::kPeriodic) {
        m = j % ext.period;
        if (m < 0) m += ext.period;
        if (m >= n) throw IndexOutOfWindow("period exceeds stored sequence length");
      } else {
        m = j < 0 ? 0 : n - 1;
      }
    }
    const FnR& f = entries[static_cast<std::size_t>(m)];
    if (m == j) return f;
    FnR out = f;
    out.base = j;
    out.words = sys.words(j, f.depth);
    if (out.words->count() != f.words->count())
      throw ShapeMismatch("extension rule maps to an incompatible word table");
    return out;
  }

  int max_depth() const {
    int d = 1;
    for (const FnR& f : entries) d = f.depth > d ? f.depth : d;
    return d;
  }
};

template <class Scalar>
struct Functional {
  long base = 0;
  int depth = 1;
  WordSetPtr words;
  Vector<Scalar> weights;
};

using FunctionalR = Functional<Real>;

// Pairing <functional, fn> at the functional's depth; the function is
// embedded up. A functional cannot be refined here (that needs measure
// data), so its depth must dominate.
template <class Scalar>
Scalar pair(const ValidatedSystem& sys, const Functional<Scalar>& nu,
            const FiniteDepthFn<Scalar>& f) {
  if (nu.base != f.base) throw BaseMismatch("pairing needs matching base index");
  if (f.depth > nu.depth)
    throw DepthOverflow("functional depth below function depth; refine the functional first");
  FiniteDepthFn<Scalar> g = embed(sys, f, nu.depth);
  return nu.weights.cwiseProduct(g.values).sum();
}

}  // namespace seqsft
