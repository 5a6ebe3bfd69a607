// seqsft: centering, the martingale-coboundary decomposition, exact Birkhoff
// moments via pushforward recursion, and the variance-growth classifier.
#pragma once

#include "seqsft/transfer.hpp"

namespace seqsft {

struct CenterResult {
  FnSeq centered;           // f_j - mu_j(f_j), one entry per operator index
  std::vector<Real> means;  // mu_j(f_j)
};

inline CenterResult center(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                           long count = -1) {
  long W = count >= 0 ? count : rpf.window_end;
  CenterResult out;
  for (long j = 0; j < W; ++j) {
    FnR fj = embed(sys, f.at(sys, j), rpf.working_depth);
    Real m = rpf.mu_at(j).weights.dot(fj.values);
    fj.values.array() -= m;
    out.centered.entries.push_back(std::move(fj));
    out.means.push_back(m);
  }
  return out;
}

struct DecompResult {
  std::vector<FnR> A;  // j in [0, W-1]
  std::vector<FnR> B;  // j in [0, W]
  std::vector<Real> identity_residual;
  std::vector<Real> martingale_residual;
  std::vector<Real> var_A;
  Real sup_star_A = 0.0;  // star norms at alpha = 1, C1 = 1 (finiteness report)
  Real sup_star_B = 0.0;
};

// B_j = -sum_{k=1..j} L^^k fbar_{j-k} through the running image
// P_{j+1} = L^_j(P_j + fbar_j); then A_j = fbar_j + P_j - P_{j+1} o T_j,
// which the operator annihilates exactly by construction.
inline DecompResult martingale_coboundary(const ValidatedSystem& sys, const RpfData& rpf,
                                          const FnSeq& fbar, long window) {
  long W = window;
  if (W < 1 || W > rpf.window_end)
    throw IndexOutOfWindow("decomposition window must sit inside the solved window");
  int D = rpf.working_depth;
  Real sup_f = 0.0;
  for (long j = 0; j < W; ++j) sup_f = std::max(sup_f, sup_norm(fbar.at(sys, j)));

  std::vector<FnR> P;  // P_j at depth D-1, j in [0, W]
  P.push_back(make_constant<Real>(sys, 0, std::max(1, D - 1), 0.0));
  for (long j = 0; j < W; ++j) {
    FnR fj = fbar.at(sys, j);
    if (std::abs(rpf.mu_at(j).weights.dot(embed(sys, fj, D).values)) > 1e-9)
      throw DecompositionInvalid("input sequence is not centered");
    FnR img = normalized_apply(sys, rpf, j, add(sys, embed(sys, P.back(), D), fj));
    if (sup_norm(img) > 1e6 * std::max(1.0, sup_f))
      throw NoConvergence("coboundary partial sums are not decaying");
    P.push_back(std::move(img));
  }

  DecompResult out;
  for (long j = 0; j <= W; ++j) {
    FnR Bj = embed(sys, P[static_cast<std::size_t>(j)], D);
    Bj.values = -Bj.values;
    out.B.push_back(std::move(Bj));
  }
  for (long j = 0; j < W; ++j) {
    FnR fj = embed(sys, fbar.at(sys, j), D);
    FnR Aj = add(sys, fj, embed(sys, P[static_cast<std::size_t>(j)], D));
    FnR pulled = shift_pullback(sys, P[static_cast<std::size_t>(j + 1)], 1);
    Aj = sub(sys, embed(sys, Aj, pulled.depth), pulled);
    // Identity residual: fbar_j - (A_j + B_j - B_{j+1} o T_j).
    FnR recon = add(sys, Aj, embed(sys, out.B[static_cast<std::size_t>(j)], Aj.depth));
    recon = sub(sys, recon, shift_pullback(sys, out.B[static_cast<std::size_t>(j + 1)], 1));
    out.identity_residual.push_back(sup_norm(sub(sys, embed(sys, fj, recon.depth), recon)));
    // Martingale residual: sup |L^_j A_j|.
    out.martingale_residual.push_back(sup_norm(normalized_apply(sys, rpf, j, Aj)));
    // var_A under kappa_0 with q0 = 1: the pushforward of 1 is 1, so the
    // law of A_j o T_0^j is just mu_j.
    FnR A2 = mul(sys, Aj, Aj);
    Real m1 = integrate(sys, rpf, Aj);
    Real m2 = integrate(sys, rpf, A2);
    out.var_A.push_back(m2 - m1 * m1);
    out.sup_star_A = std::max(out.sup_star_A, star_norm(Aj, 1.0, 1.0));
    out.A.push_back(std::move(Aj));
  }
  for (const FnR& Bj : out.B)
    out.sup_star_B = std::max(out.sup_star_B, star_norm(Bj, 1.0, 1.0));
  return out;
}

struct Moments {
  Real mean = 0.0;
  Real variance = 0.0;
  Real third_central = 0.0;

  Real sigma() const { return std::sqrt(std::max(variance, 0.0)); }
};

// Exact moments of S_n under q0 dmu_0 by the depth-invariant pushforward
// recursion u^{(r)}_{j+1} = L^_j(sum_s binom(r,s) f_j^{r-s} u^{(s)}_j).
// The r >= 2 passes run on per-step-centered observables (f_j minus the
// exact mean increment), which evaluates the same central moments without
// the cancellation the raw-moment recombination would suffer.
inline Moments sum_moments(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                           const FnR& q0, long n) {
  if (q0.base != 0) throw BadDensity("q0 must live at index 0");
  int D = rpf.working_depth;
  FnR rho = embed(sys, q0, D);
  if (rho.values.minCoeff() < -1e-10) throw BadDensity("q0 must be nonnegative");
  if (std::abs(rpf.mu_at(0).weights.dot(rho.values) - 1.0) > 1e-9)
    throw BadDensity("q0 must integrate to 1 against mu_0");

  // Pass 1: mean increments e_j = int f_j rho_j dmu_j.
  std::vector<Real> e;
  e.reserve(static_cast<std::size_t>(n));
  FnR rho_j = rho;
  for (long j = 0; j < n; ++j) {
    FnR fj = embed(sys, f.at(sys, j), D);
    e.push_back(rpf.mu_at(j).weights.dot(mul(sys, fj, rho_j).values));
    rho_j = embed(sys, normalized_apply(sys, rpf, j, rho_j), D);
  }

  // Pass 2: centered recursion for r = 0..3.
  FnR u0 = rho;
  FnR u1 = make_constant<Real>(sys, 0, D, 0.0);
  FnR u2 = u1, u3 = u1;
  for (long j = 0; j < n; ++j) {
    FnR fj = embed(sys, f.at(sys, j), D);
    fj.values.array() -= e[static_cast<std::size_t>(j)];
    FnR f2 = mul(sys, fj, fj);
    FnR f3 = mul(sys, f2, fj);
    FnR t1 = add(sys, mul(sys, fj, u0), u1);
    FnR t2 = add(sys, add(sys, mul(sys, f2, u0), scale(mul(sys, fj, u1), 2.0)), u2);
    FnR t3 = add(sys, add(sys, mul(sys, f3, u0), scale(mul(sys, f2, u1), 3.0)),
                 add(sys, scale(mul(sys, fj, u2), 3.0), u3));
    u0 = embed(sys, normalized_apply(sys, rpf, j, u0), D);
    u1 = embed(sys, normalized_apply(sys, rpf, j, t1), D);
    u2 = embed(sys, normalized_apply(sys, rpf, j, t2), D);
    u3 = embed(sys, normalized_apply(sys, rpf, j, t3), D);
  }
  Moments m;
  for (Real v : e) m.mean += v;
  m.variance = rpf.mu_at(n).weights.dot(u2.values);
  m.third_central = rpf.mu_at(n).weights.dot(u3.values);
  return m;
}

enum class VarianceClass { Growing, Bounded, Indeterminate };

struct VarianceEvidence {
  VarianceClass verdict = VarianceClass::Indeterminate;
  std::vector<long> n_grid;
  std::vector<Real> sigma;        // per n
  std::vector<Real> var_A_partial;  // partial sums of var_A_j
  Real slope = 0.0;               // linear fit of sigma_n^2 against n
  Real r_squared = 0.0;
  bool tail_converges = false;
};

inline VarianceEvidence classify_variance(const ValidatedSystem& sys, const RpfData& rpf,
                                          const FnSeq& f, const std::vector<long>& n_grid) {
  if (n_grid.empty()) throw ConfigError("variance classification needs a nonempty grid");
  long n_max = 0;
  for (long n : n_grid) n_max = std::max(n_max, n);
  VarianceEvidence ev;
  ev.n_grid = n_grid;

  FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
  for (long n : n_grid) ev.sigma.push_back(sum_moments(sys, rpf, f, q0, n).sigma());

  CenterResult cc = center(sys, rpf, f, n_max);
  DecompResult dec = martingale_coboundary(sys, rpf, cc.centered, n_max);
  Real acc = 0.0;
  for (Real v : dec.var_A) {
    acc += std::max(v, 0.0);
    ev.var_A_partial.push_back(acc);
  }

  // Ratio test on quarter blocks of var_A.
  std::size_t J = dec.var_A.size();
  if (J >= 8) {
    Real last = 0.0, prev = 0.0;
    for (std::size_t j = 3 * J / 4; j < J; ++j) last += std::max(dec.var_A[j], 0.0);
    for (std::size_t j = J / 2; j < 3 * J / 4; ++j) prev += std::max(dec.var_A[j], 0.0);
    ev.tail_converges = last <= 0.5 * prev + 1e-12;
  }

  // Least-squares line through (n, sigma_n^2).
  std::size_t m = n_grid.size();
  if (m >= 2) {
    Real sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      Real x = static_cast<Real>(n_grid[i]);
      Real y = ev.sigma[i] * ev.sigma[i];
      sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
    }
    Real den = m * sxx - sx * sx;
    if (den > 0) {
      ev.slope = (m * sxy - sx * sy) / den;
      Real ybar = sy / m;
      Real ss_tot = syy - m * ybar * ybar;
      Real intercept = ybar - ev.slope * sx / m;
      Real ss_res = 0;
      for (std::size_t i = 0; i < m; ++i) {
        Real x = static_cast<Real>(n_grid[i]);
        Real y = ev.sigma[i] * ev.sigma[i];
        Real d = y - (ev.slope * x + intercept);
        ss_res += d * d;
      }
      ev.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
  }

  Real sigma_max = 0.0;
  for (Real s : ev.sigma) sigma_max = std::max(sigma_max, s);
  bool sigma_grows = sigma_max > 10.0 && ev.slope > 0.0 && ev.r_squared >= 0.9;
  bool sigma_bounded = sigma_max <= 10.0;
  if (sigma_grows)
    ev.verdict = VarianceClass::Growing;
  else if (ev.tail_converges && sigma_bounded)
    ev.verdict = VarianceClass::Bounded;
  else
    ev.verdict = VarianceClass::Indeterminate;
  return ev;
}

}  // namespace seqsft
