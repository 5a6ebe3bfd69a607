// seqsft: exact characteristic functions from twisted-operator products,
// integer-lattice laws by inverse discrete Fourier transform, and
// tent-kernel smoothed densities for non-lattice observables.
#pragma once

#include <cstdio>
#include <limits>

#include "seqsft/spectral.hpp"

namespace seqsft {

namespace detail {

// Validates the initial density against mu_0 and lifts it to the complex
// working-depth representation the twisted products run on.
inline FnC density_as_complex(const ValidatedSystem& sys, const RpfData& rpf, const FnR& q0) {
  if (q0.base != 0) throw BadDensity("q0 must live at index 0");
  FnR rho = embed(sys, q0, rpf.working_depth);
  if (rho.values.minCoeff() < -1e-10) throw BadDensity("q0 must be nonnegative");
  if (std::abs(rpf.mu_at(0).weights.dot(rho.values) - 1.0) > 1e-9)
    throw BadDensity("q0 must integrate to 1 against mu_0");
  FnC h;
  h.base = rho.base;
  h.depth = rho.depth;
  h.words = rho.words;
  h.values = rho.values.cast<Complex>();
  return h;
}

// Phi_n(t) = mu_n(L^_{0,t}^n q0) by one twisted product.
inline Complex char_fn_value(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                             const FnC& q0c, long n, Real t) {
  int D = rpf.working_depth;
  FnC cur = q0c;
  for (long j = 0; j < n; ++j) cur = embed(sys, twisted_apply(sys, rpf, f, j, t, cur), D);
  return rpf.mu_at(n).weights.cast<Complex>().dot(cur.values);
}

}  // namespace detail

// Characteristic function of the Birkhoff sum S_n under the law q0 dmu_0.
// Exact up to fp and the measure solver's tail error: Phi_n(0) = 1,
// |Phi_n| <= 1, and Phi_n(-t) = conj(Phi_n(t)) since f and q0 are real.
inline Complex char_fn(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                       const FnR& q0, long n, Real t) {
  if (n < 0 || n > rpf.window_end)
    throw IndexOutOfWindow("n must sit inside the solved window");
  FnC h = detail::density_as_complex(sys, rpf, q0);
  return detail::char_fn_value(sys, rpf, f, h, n, t);
}

struct CharFnCurve {
  long n = 0;
  std::vector<Real> t;
  std::vector<Complex> phi;
  FnR q0;
};

// Samples Phi_n on a grid of twists; each column is an independent product,
// so the evaluation parallelizes deterministically.
inline CharFnCurve char_fn_curve(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                                 const FnR& q0, long n, const std::vector<Real>& t_grid,
                                 int threads = 0) {
  if (n < 0 || n > rpf.window_end)
    throw IndexOutOfWindow("n must sit inside the solved window");
  FnC h = detail::density_as_complex(sys, rpf, q0);
  CharFnCurve out;
  out.n = n;
  out.t = t_grid;
  out.q0 = q0;
  out.phi.resize(t_grid.size());
  parallel_for(static_cast<std::int64_t>(t_grid.size()), threads, [&](std::int64_t i) {
    out.phi[static_cast<std::size_t>(i)] =
        detail::char_fn_value(sys, rpf, f, h, n, t_grid[static_cast<std::size_t>(i)]);
  });
  return out;
}

// Law of an integer-valued Birkhoff sum on its contiguous support.
struct PmfTable {
  long n = 0;
  long long u_min = 0;  // value of mass[0]
  VectorR mass;         // mass[i] = P(S_n = u_min + i)
  Real mass_sum = 0.0;
  Real clip_residual = 0.0;  // magnitude of the most negative raw mass

  Real at(long long u) const {
    long long i = u - u_min;
    if (i < 0 || i >= static_cast<long long>(mass.size())) return 0.0;
    return mass[static_cast<Eigen::Index>(i)];
  }
  Real mean() const {
    Real m = 0.0;
    for (Eigen::Index i = 0; i < mass.size(); ++i)
      m += (static_cast<Real>(u_min) + static_cast<Real>(i)) * mass[i];
    return m;
  }
  Real variance() const {
    Real m = mean(), v = 0.0;
    for (Eigen::Index i = 0; i < mass.size(); ++i) {
      Real d = static_cast<Real>(u_min) + static_cast<Real>(i) - m;
      v += d * d * mass[i];
    }
    return v;
  }
  // P(S_n <= x).
  // Atoms within 1e-9 of the threshold count as included, so thresholds
  // computed as E + t sigma in floating point hit lattice points reliably.
  Real cdf(Real x) const {
    Real c = 0.0;
    for (Eigen::Index i = 0; i < mass.size(); ++i)
      if (static_cast<Real>(u_min) + static_cast<Real>(i) <= x + 1e-9) c += mass[i];
    return c;
  }
};

// Exact PMF of an integer-valued S_n as the inverse DFT of the characteristic
// function at the V-th roots of unity, V = 1 + sum_j (max f_j - min f_j).
// The support width equals V, so the circular inversion is alias-free. The
// direct quadratic inverse is intended for desk-scale ranges.
inline PmfTable lattice_pmf(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                            const FnR& q0, long n, int threads = 0) {
  if (n < 0 || n > rpf.window_end)
    throw IndexOutOfWindow("n must sit inside the solved window");
  FnC h = detail::density_as_complex(sys, rpf, q0);

  long long lo = 0, hi = 0;
  for (long j = 0; j < n; ++j) {
    FnR fj = f.at(sys, j);
    long long mn = std::numeric_limits<long long>::max();
    long long mx = std::numeric_limits<long long>::min();
    for (Eigen::Index i = 0; i < fj.values.size(); ++i) {
      Real r = std::round(fj.values[i]);
      if (std::abs(fj.values[i] - r) > 1e-9)
        throw NotIntegerValued("lattice PMF requires integer observable values");
      mn = std::min(mn, static_cast<long long>(r));
      mx = std::max(mx, static_cast<long long>(r));
    }
    lo += mn;
    hi += mx;
  }
  long long V = hi - lo + 1;
  if (V > (1ll << 20)) throw RangeOverflow("lattice value range exceeds 2^20");

  // Phi at the grid frequencies; conjugate symmetry halves the products.
  std::vector<Complex> phi(static_cast<std::size_t>(V));
  long long half = V / 2;
  parallel_for(half + 1, threads, [&](std::int64_t k) {
    Real t = 2.0 * kPi * static_cast<Real>(k) / static_cast<Real>(V);
    phi[static_cast<std::size_t>(k)] = detail::char_fn_value(sys, rpf, f, h, n, t);
  });
  for (long long k = half + 1; k < V; ++k)
    phi[static_cast<std::size_t>(k)] = std::conj(phi[static_cast<std::size_t>(V - k)]);

  // Root table indexed by integer phase avoids large-angle trig loss.
  std::vector<Complex> root(static_cast<std::size_t>(V));
  for (long long p = 0; p < V; ++p) {
    Real a = -2.0 * kPi * static_cast<Real>(p) / static_cast<Real>(V);
    root[static_cast<std::size_t>(p)] = Complex(std::cos(a), std::sin(a));
  }

  PmfTable out;
  out.n = n;
  out.u_min = lo;
  out.mass.resize(static_cast<Eigen::Index>(V));
  std::vector<Real> raw(static_cast<std::size_t>(V));
  parallel_for(V, threads, [&](std::int64_t m) {
    long long s = ((lo + m) % V + V) % V;
    Complex acc(0.0, 0.0);
    for (long long k = 0; k < V; ++k)
      acc += root[static_cast<std::size_t>((k * s) % V)] * phi[static_cast<std::size_t>(k)];
    raw[static_cast<std::size_t>(m)] = acc.real() / static_cast<Real>(V);
  });
  for (long long m = 0; m < V; ++m) {
    Real v = raw[static_cast<std::size_t>(m)];
    if (v < 0.0) {
      out.clip_residual = std::max(out.clip_residual, -v);
      v = 0.0;
    }
    out.mass[static_cast<Eigen::Index>(m)] = v;
  }
  if (out.clip_residual > 1e-10)
    std::fprintf(stderr, "lattice_pmf: clipped negative mass of size %.3e\n",
                 out.clip_residual);
  out.mass_sum = out.mass.sum();
  return out;
}

struct DensityTable {
  long n = 0;
  Real T0 = 8.0;
  Real step = 0.0;  // quadrature step actually used
  std::vector<Real> u;
  VectorR value;
};

// E[g_{T0}(S_n - u)] for the kernel whose Fourier transform is the unit tent
// on [-T0, T0] (so int g = 1 and g >= 0). Since f and q0 are real,
// Phi_n(-t) = conj(Phi_n(t)) and the two-sided inversion integral folds to
// twice the real part of the one-sided half, which removes the |t| kink at
// zero from the quadrature. Composite Simpson step is held below both 0.005
// and pi / (8 * (phase range)), an eighth of a period of the fastest
// oscillation, so values are nonnegative within quadrature error.
inline DensityTable smoothed_density(const ValidatedSystem& sys, const RpfData& rpf,
                                     const FnSeq& f, const FnR& q0, long n, Real T0,
                                     const std::vector<Real>& u_grid, int threads = 0) {
  if (!(T0 > 0.0)) throw ConfigError("T0 must be positive");
  if (n < 0 || n > rpf.window_end)
    throw IndexOutOfWindow("n must sit inside the solved window");
  FnC h = detail::density_as_complex(sys, rpf, q0);

  Real range = 1.0;
  for (long j = 0; j < n; ++j) range += sup_norm(f.at(sys, j));
  for (Real u : u_grid) range = std::max(range, std::abs(u));
  Real step = std::min(0.005, kPi / (8.0 * range));
  long count = static_cast<long>(std::ceil(T0 / step));
  if (count % 2 == 1) ++count;
  step = T0 / static_cast<Real>(count);

  std::vector<Complex> phi(static_cast<std::size_t>(count) + 1);
  parallel_for(count + 1, threads, [&](std::int64_t i) {
    phi[static_cast<std::size_t>(i)] =
        detail::char_fn_value(sys, rpf, f, h, n, step * static_cast<Real>(i));
  });

  DensityTable out;
  out.n = n;
  out.T0 = T0;
  out.step = step;
  out.u = u_grid;
  out.value.resize(static_cast<Eigen::Index>(u_grid.size()));
  parallel_for(static_cast<std::int64_t>(u_grid.size()), threads, [&](std::int64_t ui) {
    Real u = u_grid[static_cast<std::size_t>(ui)];
    Complex acc(0.0, 0.0);
    for (long i = 0; i <= count; ++i) {
      Real t = step * static_cast<Real>(i);
      Real w = (i == 0 || i == count) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      Complex e(std::cos(t * u), -std::sin(t * u));
      acc += w * (1.0 - t / T0) * phi[static_cast<std::size_t>(i)] * e;
    }
    out.value[static_cast<Eigen::Index>(ui)] = acc.real() * step / (3.0 * kPi);
  });
  return out;
}

}  // namespace seqsft
