// seqsft: discrepancy statistics for the limit theorems — Kolmogorov CLT
// distance, non-lattice and lattice local-limit errors, first-order
// Edgeworth error, and the generalized local-limit error for reducible
// (martingale + coboundary + lattice) observables.
#pragma once

#include <limits>
#include <string>
#include <utility>

#include "seqsft/decomp.hpp"
#include "seqsft/models.hpp"
#include "seqsft/sampler.hpp"
#include "seqsft/spectral.hpp"

namespace seqsft {

namespace detail {

inline Real normal_cdf(Real t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
inline Real normal_pdf(Real t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi); }

inline bool integer_valued(const ValidatedSystem& sys, const FnSeq& f, long n, Real tol = 1e-9) {
  for (long j = 0; j < n; ++j) {
    FnR fj = f.at(sys, j);
    for (std::int64_t i = 0; i < fj.values.size(); ++i)
      if (std::abs(fj.values[i] - std::round(fj.values[i])) > tol) return false;
  }
  return true;
}

}  // namespace detail

// Kolmogorov distance between the standardized law of S_n and the standard
// normal, on the t-grid [-5, 5] with step 0.01. Integer-valued observables
// use the exact staircase CDF from lattice_pmf; otherwise the CDF of the
// Fejer-smoothed density (T0 = 8) is integrated numerically.
inline Real clt_error(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                      const FnR& q0, long n, int threads = 0) {
  Moments mom = sum_moments(sys, rpf, f, q0, n);
  Real s = mom.sigma();
  if (s < 0.5) throw DegenerateVariance("sigma below 1/2 at n = " + std::to_string(n));

  Real worst = 0.0;
  if (detail::integer_valued(sys, f, n)) {
    PmfTable pmf = lattice_pmf(sys, rpf, f, q0, n, threads);
    for (int k = 0; k <= 1000; ++k) {
      Real t = static_cast<Real>(k - 500) * 0.01;
      worst = std::max(worst, std::abs(pmf.cdf(mom.mean + t * s) - detail::normal_cdf(t)));
    }
    return worst;
  }
  // Smoothed branch: cumulative trapezoid of the T0 = 8 density from -8
  // sigma, compared on the same [-5, 5] section.
  std::vector<Real> u;
  for (int k = 0; k <= 1300; ++k) u.push_back(mom.mean + (static_cast<Real>(k) * 0.01 - 8.0) * s);
  DensityTable dens = smoothed_density(sys, rpf, f, q0, n, 8.0, u, threads);
  Real cum = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    cum += 0.5 * (dens.value[k] + dens.value[k - 1]) * (u[k] - u[k - 1]);
    Real t = static_cast<Real>(k) * 0.01 - 8.0;
    if (t >= -5.0) worst = std::max(worst, std::abs(cum - detail::normal_cdf(t)));
  }
  return worst;
}

// sup over the u-grid (E +- 5 sigma at step sigma/50, plus 20 far-field
// points out to 10 sigma) of |sqrt(2pi) sigma E[g(S_n - u)] - gauss(u)|
// with g the unit-mass Fejer kernel of window T0.
inline Real nonlattice_llt_error(const ValidatedSystem& sys, const RpfData& rpf,
                                 const FnSeq& f, const FnR& q0, long n, Real T0,
                                 int threads = 0) {
  Moments mom = sum_moments(sys, rpf, f, q0, n);
  Real s = mom.sigma();
  if (s < 3.0) throw DegenerateVariance("sigma below 3 at n = " + std::to_string(n));

  std::vector<Real> u;
  for (int k = -250; k <= 250; ++k) u.push_back(mom.mean + static_cast<Real>(k) * s / 50.0);
  for (int m = 0; m < 10; ++m) {
    u.push_back(mom.mean - (5.5 + 0.5 * m) * s);
    u.push_back(mom.mean + (5.5 + 0.5 * m) * s);
  }
  DensityTable dens = smoothed_density(sys, rpf, f, q0, n, T0, u, threads);
  Real worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    Real z = (u[k] - mom.mean) / s;
    worst = std::max(worst,
                     std::abs(std::sqrt(2.0 * kPi) * s * dens.value[k] - std::exp(-0.5 * z * z)));
  }
  return worst;
}

// sup over lattice points of |sqrt(2pi) sigma P(S_n = u) - gauss(u)| for
// span-1 integer-valued observables. Callers with span a != 1 must rescale
// f by 1/a first; the value-gcd screen catches the common mistakes.
inline Real lattice_llt_error(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                              const FnR& q0, long n, bool declared_span_one = false,
                              int threads = 0) {
  if (!declared_span_one) {
    std::optional<Real> g = value_gcd_guess(sys, rpf, f);
    if (!g || std::abs(*g - 1.0) > 1e-6)
      throw SpanMismatch(g ? "detected span " + std::to_string(*g)
                           : "no lattice structure detected");
  }
  Moments mom = sum_moments(sys, rpf, f, q0, n);
  Real s = mom.sigma();
  if (s < 0.5) throw DegenerateVariance("sigma below 1/2 at n = " + std::to_string(n));
  PmfTable pmf = lattice_pmf(sys, rpf, f, q0, n, threads);
  Real worst = 0.0;
  for (Eigen::Index i = 0; i < pmf.mass.size(); ++i) {
    Real z = (static_cast<Real>(pmf.u_min + i) - mom.mean) / s;
    worst = std::max(worst,
                     std::abs(std::sqrt(2.0 * kPi) * s * pmf.mass[i] - std::exp(-0.5 * z * z)));
  }
  return worst;
}

// sigma_n * sup |CDF - Phi - kappa3 (t^3 - 3t) phi(t) / (6 sigma^3)|, the
// first-order Edgeworth discrepancy. For integer-valued observables the CDF
// is evaluated at mid-lattice points t = (u + 1/2 - E)/sigma, |t| <= 5,
// which removes the staircase-jump artifact; this convention is part of the
// statistic's definition here.
inline Real edgeworth_error(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                            const FnR& q0, long n, int threads = 0) {
  Moments mom = sum_moments(sys, rpf, f, q0, n);
  Real s = mom.sigma();
  if (s < 3.0) throw DegenerateVariance("sigma below 3 at n = " + std::to_string(n));
  if (!detail::integer_valued(sys, f, n))
    throw NotIntegerValued("edgeworth statistic implemented for lattice observables");

  PmfTable pmf = lattice_pmf(sys, rpf, f, q0, n, threads);
  Real scale = mom.third_central / (6.0 * s * s * s);
  Real cum = 0.0, worst = 0.0;
  for (Eigen::Index i = 0; i < pmf.mass.size(); ++i) {
    cum += pmf.mass[i];
    Real t = (static_cast<Real>(pmf.u_min + i) + 0.5 - mom.mean) / s;
    if (std::abs(t) > 5.0) continue;
    Real corr = scale * (t * t * t - 3.0 * t) * detail::normal_pdf(t);
    worst = std::max(worst, std::abs(cum - detail::normal_cdf(t) - corr));
  }
  return s * worst;
}

namespace detail {

// Characteristic function of the truncated martingale limit A_J = S_J M + g_0
// under q0 dmu_0, at the harmonics theta_m = 2 pi m / a that survive the
// Fejer window. Exhaustive over depth-(J + depth(M) - 1) cylinders when the
// word table allows it, Monte Carlo otherwise.
inline std::vector<Complex> mart_limit_char(const ValidatedSystem& sys, const RpfData& rpf,
                                            const ReducibleFixture& fx, const FnR& q0, long J,
                                            const std::vector<Real>& theta,
                                            std::int64_t mc_samples) {
  int dM = fx.martingale.max_depth();
  FnR g0 = fx.g.at(sys, 0);
  int depth = std::max({static_cast<int>(J) + dM - 1, g0.depth, q0.depth, 1});

  std::vector<FnR> mj;
  for (long j = 0; j < J; ++j) mj.push_back(fx.martingale.at(sys, j));
  auto eval_a = [&](const std::uint8_t* p) {
    Real a = 0.0;
    for (long j = 0; j < J; ++j) {
      auto r = mj[static_cast<std::size_t>(j)].words->find(p + j);
      if (!r) throw Inadmissible("martingale word lookup failed");
      a += mj[static_cast<std::size_t>(j)].values[*r];
    }
    auto rg = g0.words->find(p);
    auto rq = q0.words->find(p);
    if (!rg || !rq) throw Inadmissible("prefix lookup failed");
    return std::pair<Real, Real>(a + g0.values[*rg], q0.values[*rq]);
  };

  std::vector<Complex> out(theta.size(), Complex(0.0, 0.0));
  bool exhaustive = depth <= sys.spec().max_word_length && mc_samples <= 0;
  if (exhaustive) {
    auto ws = sys.words(0, depth);
    if (ws->count() > (1 << 20)) exhaustive = false;
    if (exhaustive) {
      for (std::int64_t i = 0; i < ws->count(); ++i) {
        Word w = ws->word_at(i);
        auto [a, q] = eval_a(w.symbols.data());
        Real mass = q * cylinder_measure(sys, rpf, w);
        for (std::size_t m = 0; m < theta.size(); ++m)
          out[m] += mass * std::exp(Complex(0.0, theta[m] * a));
      }
      return out;
    }
  }
  if (mc_samples <= 0)
    throw RangeOverflow("truncation depth needs Monte Carlo; pass mc_samples > 0");
  ForwardKernels k = forward_kernels(sys, rpf, depth);
  SampleSet paths = sample_paths(sys, k, depth, mc_samples, 0x5eed5u);
  for (std::int64_t i = 0; i < mc_samples; ++i) {
    auto [a, q] = eval_a(paths.path(i));
    for (std::size_t m = 0; m < theta.size(); ++m)
      out[m] += q * std::exp(Complex(0.0, theta[m] * a));
  }
  for (Complex& v : out) v /= static_cast<Real>(mc_samples);
  return out;
}

}  // namespace detail

// Generalized local-limit discrepancy for a reducible observable
// f_j = M_j + g_j - g_{j+1} o T_j + a Z_j:
//   sup_{u in aZ, |u-E| <= 5 sigma} | sqrt(2pi) sigma E[g(S_n - u)]
//                                     - L exp(-(u-E)^2 / (2 sigma^2)) |
// where L = a sum_k E[g(ka + A - g_n)], A = lim S_n M + g_0 truncated at the
// smallest J whose martingale-variance tail is <= 1e-6. The k-sum is
// evaluated through Poisson summation, which the Fejer window cuts to
// finitely many harmonics, and the A and g_n laws factorize because they
// live on independent coordinates. The left side reuses the exact twisted-
// product density, so no independence between the parts is assumed there.
inline Real reducible_llt_error(const ValidatedSystem& sys, const RpfData& rpf,
                                const ReducibleFixture& fx, const FnR& q0, long n,
                                Real T0 = 8.0, std::int64_t mc_samples = 0,
                                int threads = 0) {
  if (n < 1 || n > fx.count) throw IndexOutOfWindow("n outside the fixture range");
  Moments mom = sum_moments(sys, rpf, fx.f, q0, n);
  Real s = mom.sigma();
  if (s < 3.0) throw DegenerateVariance("sigma below 3 at n = " + std::to_string(n));

  // Certify the decomposition before using it.
  std::vector<Real> var;
  for (long j = 0; j < n; ++j) {
    FnR mjf = fx.martingale.at(sys, j);
    FnR zj = fx.z.at(sys, j);
    for (std::int64_t i = 0; i < zj.values.size(); ++i)
      if (std::abs(zj.values[i] - std::round(zj.values[i])) > 1e-9)
        throw DecompositionInvalid("lattice part not integer at index " + std::to_string(j));
    if (normalized_apply(sys, rpf, j, mjf).values.cwiseAbs().maxCoeff() > 1e-8)
      throw DecompositionInvalid("martingale identity fails at index " + std::to_string(j));
    FnR gj = fx.g.at(sys, j);
    FnR gnext = shift_pullback(sys, fx.g.at(sys, j + 1), 1);
    FnR recon = add(sys, mjf, sub(sys, gj, gnext));
    recon = add(sys, recon, scale(zj, fx.a));
    if (sup_norm(sub(sys, fx.f.at(sys, j), recon)) > 1e-9)
      throw DecompositionInvalid("decomposition identity fails at index " + std::to_string(j));
    var.push_back(integrate(sys, rpf, mul(sys, mjf, mjf)));
  }
  for (long j = n / 2; j + 1 < n; ++j)
    if (var[static_cast<std::size_t>(j + 1)] > 0.98 * var[static_cast<std::size_t>(j)] &&
        !(var[static_cast<std::size_t>(j)] == 0.0 && var[static_cast<std::size_t>(j + 1)] == 0.0))
      throw DecompositionInvalid("martingale variances fail the ratio test");

  // Truncation index: smallest J with variance tail <= 1e-6.
  long J = n;
  Real tail = 0.0;
  while (J > 0 && tail + var[static_cast<std::size_t>(J - 1)] <= 1e-6) {
    tail += var[static_cast<std::size_t>(J - 1)];
    --J;
  }

  // Harmonics under the Fejer window and the factorized local-law constant.
  std::vector<Real> theta;
  for (int m = 1; 2.0 * kPi * m / fx.a < T0; ++m) theta.push_back(2.0 * kPi * m / fx.a);
  Real L = 1.0;
  if (!theta.empty()) {
    std::vector<Complex> phi_a =
        detail::mart_limit_char(sys, rpf, fx, q0, J, theta, mc_samples);
    FnR gn = fx.g.at(sys, n);
    auto ws = sys.words(n, gn.depth);
    for (std::size_t m = 0; m < theta.size(); ++m) {
      Complex psi(0.0, 0.0);
      for (std::int64_t i = 0; i < ws->count(); ++i) {
        Word w = ws->word_at(i);
        psi += cylinder_measure(sys, rpf, w) *
               std::exp(Complex(0.0, -theta[m] * evaluate(gn, w)));
      }
      Real hat = std::max(0.0, 1.0 - theta[m] / T0);
      L += 2.0 * hat * (phi_a[m] * psi).real();
    }
  }

  std::vector<Real> u;
  long k_lo = static_cast<long>(std::ceil((mom.mean - 5.0 * s) / fx.a));
  long k_hi = static_cast<long>(std::floor((mom.mean + 5.0 * s) / fx.a));
  for (long k = k_lo; k <= k_hi; ++k) u.push_back(fx.a * static_cast<Real>(k));
  DensityTable dens = smoothed_density(sys, rpf, fx.f, q0, n, T0, u, threads);
  Real worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    Real z = (u[i] - mom.mean) / s;
    worst = std::max(worst, std::abs(std::sqrt(2.0 * kPi) * s * dens.value[i] -
                                     L * std::exp(-0.5 * z * z)));
  }
  return worst;
}

// "tends to zero" made falsifiable: at least three n values, and either the
// last error beats the 0.7 contraction against a 4x-smaller n, or it is
// already below the acceptance floor.
inline bool trend_to_zero(const std::vector<long>& n_grid, const std::vector<Real>& err,
                          Real eps_accept) {
  if (n_grid.size() < 3 || err.size() != n_grid.size())
    throw ConfigError("trend verdicts need at least three n values");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n grid must increase");
  if (err.back() <= eps_accept) return true;
  for (std::size_t i = n_grid.size() - 1; i-- > 0;) {
    if (4 * n_grid[i] <= n_grid.back())
      return !(err.back() > 0.7 * err[i]) && std::isfinite(err.back());
  }
  throw ConfigError("n grid spans less than a factor of 4");
}

// One row per n of every applicable error statistic; inapplicable or
// gate-failing cells hold NaN. Trend verdicts are attached when at least
// three finite cells exist.
struct LltReport {
  std::string model;
  std::vector<long> n_grid;
  std::vector<Real> t0;
  std::vector<Real> sigma;
  std::vector<Real> clt;
  std::vector<std::vector<Real>> nonlattice;  // [t0 index][n index]
  std::vector<Real> lattice;
  std::vector<Real> edgeworth;
  std::vector<Real> reducible;
  std::vector<std::pair<std::string, bool>> trends;
};

inline LltReport llt_report(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                            const FnR& q0, const std::vector<long>& n_grid,
                            const std::vector<Real>& t0_list,
                            const ReducibleFixture* fx = nullptr,
                            const std::string& model = "model", int threads = 0) {
  const Real nan = std::numeric_limits<Real>::quiet_NaN();
  LltReport rep;
  rep.model = model;
  rep.n_grid = n_grid;
  rep.t0 = t0_list;
  rep.nonlattice.assign(t0_list.size(), {});

  auto guarded = [&](auto&& op) -> Real {
    try {
      return op();
    } catch (const DegenerateVariance&) {
      return nan;
    } catch (const SpanMismatch&) {
      return nan;
    } catch (const NotIntegerValued&) {
      return nan;
    }
  };

  for (long n : n_grid) {
    rep.sigma.push_back(sum_moments(sys, rpf, f, q0, n).sigma());
    rep.clt.push_back(guarded([&] { return clt_error(sys, rpf, f, q0, n, threads); }));
    for (std::size_t i = 0; i < t0_list.size(); ++i)
      rep.nonlattice[i].push_back(
          guarded([&] { return nonlattice_llt_error(sys, rpf, f, q0, n, t0_list[i], threads); }));
    rep.lattice.push_back(
        guarded([&] { return lattice_llt_error(sys, rpf, f, q0, n, false, threads); }));
    rep.edgeworth.push_back(
        guarded([&] { return edgeworth_error(sys, rpf, f, q0, n, threads); }));
    if (fx != nullptr)
      rep.reducible.push_back(
          guarded([&] { return reducible_llt_error(sys, rpf, *fx, q0, n, 8.0, 0, threads); }));
  }

  auto add_trend = [&](const std::string& name, const std::vector<Real>& err, Real eps) {
    std::vector<long> ns;
    std::vector<Real> es;
    for (std::size_t i = 0; i < err.size(); ++i)
      if (std::isfinite(err[i])) {
        ns.push_back(n_grid[i]);
        es.push_back(err[i]);
      }
    if (ns.size() < 3) return;
    try {
      rep.trends.emplace_back(name, trend_to_zero(ns, es, eps));
    } catch (const ConfigError&) {
    }
  };
  add_trend("clt", rep.clt, 0.05);
  for (std::size_t i = 0; i < t0_list.size(); ++i)
    add_trend("nonlattice@" + std::to_string(t0_list[i]), rep.nonlattice[i], 0.1);
  add_trend("lattice", rep.lattice, 0.02);
  add_trend("reducible", rep.reducible, 0.05);
  // Edgeworth is a boundedness claim, not a decay claim.
  {
    std::vector<Real> es;
    for (Real v : rep.edgeworth)
      if (std::isfinite(v)) es.push_back(v);
    if (es.size() >= 3)
      rep.trends.emplace_back("edgeworth bounded", es.back() <= 1.25 * es.front());
  }
  return rep;
}

}  // namespace seqsft
