// seqsft: twisted transfer operators, twisted-norm curves, resonance scanning
// with lattice-span estimation, and temporal-distance diagnostics.
#pragma once

#include <optional>

#include "seqsft/decomp.hpp"

namespace seqsft {

inline constexpr Real kTwistCap = 1024.0;

// L^_{j,t} h = L^_j(e^{itf_j} h). Strictly reduces depth, so the working
// space is invariant once the image is embedded back up.
inline FnC twisted_apply(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                         long j, Real t, const FnC& h) {
  if (std::abs(t) > kTwistCap) throw ConfigError("twist parameter beyond cap");
  if (h.base != j) throw BaseMismatch("function base must equal operator index");
  int D = rpf.working_depth;
  const TransferPlan& p = rpf.plan_at(j);
  FnC src = embed(sys, h, D);
  FnR fj = embed(sys, f.at(sys, j), D);
  FnC out;
  out.base = j + 1;
  out.depth = D - 1;
  out.words = p.dst;
  out.values = p.apply_twisted(src.values, exp_scaled(fj, t).values);
  // Modulus bound |L^_{j,t} h| <= L^_j |h| pointwise.
  VectorR bound = p.apply(VectorR(src.values.cwiseAbs()));
  for (std::int64_t i = 0; i < out.values.size(); ++i)
    if (std::abs(out.values[i]) > bound[i] + 1e-12)
      throw Error("twisted image exceeded its modulus bound");
  return out;
}

struct LyConstants {
  Real C1 = 1.0;
  Real theta1 = 0.5;
};

// Operational contraction constants for the twisted family: C1 is twice the
// worst one-step quotient G(L^_t h) / (|h|_inf + G(h)) over a seeded sample,
// theta1 the worst fitted per-step rate of the seminorm tail.
inline LyConstants calibrate_ly(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                                Real t_cap = 16.0, std::uint64_t seed = 90210u) {
  int D = rpf.working_depth;
  long N = rpf.window_end;
  std::vector<Real> twists = {0.0, 0.31 * t_cap, -0.67 * t_cap, t_cap};
  CounterRng trng{seed, 3u};
  for (int i = 0; i < 4; ++i) twists.push_back((2.0 * trng.uniform(i) - 1.0) * t_cap);

  std::vector<FnC> sample;
  for (int s = 0; s < 12; ++s) {
    FnC h = make_constant<Complex>(sys, 0, D, Complex(0.0, 0.0));
    CounterRng rng{seed, 100u + static_cast<std::uint64_t>(s)};
    for (std::int64_t i = 0; i < h.values.size(); ++i) {
      Real a = 2.0 * rng.uniform(static_cast<std::uint64_t>(2 * i)) - 1.0;
      Real b = 2.0 * rng.uniform(static_cast<std::uint64_t>(2 * i + 1)) - 1.0;
      h.values[i] = Complex(a, b);
    }
    sample.push_back(std::move(h));
  }

  LyConstants out;
  Real worst1 = 0.0;
  for (Real t : twists)
    for (const FnC& h : sample) {
      FnC img = embed(sys, twisted_apply(sys, rpf, f, 0, t, h), D);
      Real den = sup_norm(h) + holder_seminorm(h, 1.0);
      if (den > 0) worst1 = std::max(worst1, holder_seminorm(img, 1.0) / den);
    }
  out.C1 = std::max(1.0, 2.0 * worst1);

  Real theta = 0.25;
  for (long k : {2l, 4l, 8l, 16l}) {
    if (k > N) break;
    Real qk = 0.0;
    for (Real t : twists)
      for (const FnC& h : sample) {
        FnC cur = h;
        for (long j = 0; j < k; ++j)
          cur = embed(sys, twisted_apply(sys, rpf, f, j, t, cur), D);
        Real g0 = holder_seminorm(h, 1.0);
        if (g0 <= 0) continue;
        Real excess = holder_seminorm(cur, 1.0) - out.C1 * sup_norm(h);
        if (excess > 0) qk = std::max(qk, excess / (out.C1 * g0));
      }
    if (qk > 0) theta = std::max(theta, std::pow(qk, 1.0 / static_cast<Real>(k)));
  }
  out.theta1 = std::min(theta, 0.995);
  return out;
}

struct EnvelopeFit {
  Real log_c2 = 0.0;  // intercept of log rho against sigma_n^2 t^2
  Real c2 = 0.0;      // decay rate (positive when Gaussian-like)
  Real r_squared = 0.0;
  long count = 0;

  bool usable() const { return c2 > 0.0 && r_squared >= 0.5 && count >= 8; }
  Real value(Real sigma, Real t) const {
    return std::exp(log_c2 - c2 * sigma * sigma * t * t);
  }
};

struct NormCurve {
  std::vector<Real> t_grid;
  std::vector<long> n_grid;
  MatrixR rho;    // n_grid.size() x t_grid.size(), probe-maximized star norms
  MatrixR lower;  // star_norm of the twisted image of 1: certified lower bound
  std::vector<Real> sigma;                 // sigma_n per n_grid entry, q0 = 1
  std::vector<Real> integral;              // trapezoid of rho(., n) over the grid
  std::vector<Real> sigma_times_integral;  // decay check: should shrink with n
  EnvelopeFit envelope;
  LyConstants ly;
};

namespace detail {

inline std::vector<FnC> make_probes(const ValidatedSystem& sys, int D, int probe_count,
                                    std::uint64_t seed) {
  std::vector<FnC> probes;
  probes.push_back(make_constant<Complex>(sys, 0, D, Complex(1.0, 0.0)));
  int ind_depth = std::min(D, 3);
  auto ind_words = sys.words(0, ind_depth);
  for (std::int64_t i = 0; i < ind_words->count(); ++i) {
    FnR ind = indicator(sys, ind_words->word_at(i));
    FnC p = make_constant<Complex>(sys, 0, D, Complex(0.0, 0.0));
    p.values = embed(sys, ind, D).values.cast<Complex>();
    probes.push_back(std::move(p));
  }
  for (int s = 0; s < probe_count; ++s) {
    FnC p = make_constant<Complex>(sys, 0, D, Complex(0.0, 0.0));
    CounterRng rng{seed, static_cast<std::uint64_t>(s)};
    for (std::int64_t i = 0; i < p.values.size(); ++i) {
      Real phase = 2.0 * kPi * rng.uniform(static_cast<std::uint64_t>(i));
      p.values[i] = std::polar(1.0, phase);
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

// Probe-maximized star-norm ratio of the n-step twisted product at one t.
inline Real rho_single(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                       Real t, long n, const std::vector<FnC>& probes,
                       const std::vector<Real>& probe_star, Real C1) {
  int D = rpf.working_depth;
  std::vector<VectorC> mult;
  for (long j = 0; j < n; ++j)
    mult.push_back(exp_scaled(embed(sys, f.at(sys, j), D), t).values);
  Real best = 0.0;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    FnC cur = probes[pi];
    for (long j = 0; j < n; ++j) {
      const TransferPlan& plan = rpf.plan_at(j);
      FnC img;
      img.base = j + 1;
      img.depth = D - 1;
      img.words = plan.dst;
      img.values =
          plan.apply_twisted(embed(sys, cur, D).values, mult[static_cast<std::size_t>(j)]);
      cur = std::move(img);
    }
    if (probe_star[pi] > 0) best = std::max(best, star_norm(cur, 1.0, C1) / probe_star[pi]);
  }
  return best;
}

}  // namespace detail

// rho(t, n) = max over the probe set of star(L^_{0,t}^n p) / star(p); probes
// are 1, all shallow cylinder indicators, and seeded random phase functions.
inline NormCurve norm_curve(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                            const std::vector<Real>& t_grid, const std::vector<long>& n_grid,
                            int probe_count = 4, std::uint64_t seed = 1020u, int threads = 0) {
  if (t_grid.empty() || n_grid.empty()) throw ConfigError("empty norm-curve grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("t grid must be increasing");
  long n_max = 0;
  for (long n : n_grid) n_max = std::max(n_max, n);
  int D = rpf.working_depth;

  NormCurve out;
  out.t_grid = t_grid;
  out.n_grid = n_grid;
  out.ly = calibrate_ly(sys, rpf, f, std::max(std::abs(t_grid.front()),
                                              std::abs(t_grid.back())));
  Real C1 = out.ly.C1;

  FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
  for (long n : n_grid) out.sigma.push_back(sum_moments(sys, rpf, f, q0, n).sigma());

  // Probe set, fixed before any scheduling so cells are order-independent.
  std::vector<FnC> probes = detail::make_probes(sys, D, probe_count, seed);
  std::vector<Real> probe_star;
  for (const FnC& p : probes) probe_star.push_back(star_norm(p, 1.0, C1));

  out.rho = MatrixR::Zero(static_cast<Eigen::Index>(n_grid.size()),
                          static_cast<Eigen::Index>(t_grid.size()));
  out.lower = out.rho;

  parallel_for(static_cast<std::int64_t>(t_grid.size()), threads, [&](std::int64_t ti) {
    Real t = t_grid[static_cast<std::size_t>(ti)];
    // Per-step multipliers are shared across probes.
    std::vector<VectorC> mult;
    for (long j = 0; j < n_max; ++j)
      mult.push_back(exp_scaled(embed(sys, f.at(sys, j), D), t).values);
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      FnC cur = probes[pi];
      std::size_t gi = 0;
      for (long n = 1; n <= n_max && gi < n_grid.size(); ++n) {
        const TransferPlan& plan = rpf.plan_at(n - 1);
        FnC img;
        img.base = n;
        img.depth = D - 1;
        img.words = plan.dst;
        img.values = plan.apply_twisted(embed(sys, cur, D).values,
                                        mult[static_cast<std::size_t>(n - 1)]);
        cur = std::move(img);
        while (gi < n_grid.size() && n_grid[gi] == n) {
          Real s = star_norm(cur, 1.0, C1);
          Real ratio = probe_star[pi] > 0 ? s / probe_star[pi] : 0.0;
          auto r = static_cast<Eigen::Index>(gi);
          auto c = static_cast<Eigen::Index>(ti);
          out.rho(r, c) = std::max(out.rho(r, c), ratio);
          if (pi == 0) out.lower(r, c) = s;
          ++gi;
        }
      }
    }
  });

  for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
    Real acc = 0.0;
    for (std::size_t i = 1; i < t_grid.size(); ++i)
      acc += 0.5 * (t_grid[i] - t_grid[i - 1]) *
             (out.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(i)) +
              out.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(i - 1)));
    out.integral.push_back(acc);
    out.sigma_times_integral.push_back(out.sigma[ni] * acc);
  }

  // Pooled small-t fit: log rho against sigma_n^2 t^2 where the twist is
  // weak (sigma_n |t| <= 3) and the norm has not underflowed.
  Real sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  long cnt = 0;
  for (std::size_t ni = 0; ni < n_grid.size(); ++ni)
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      Real x = out.sigma[ni] * out.sigma[ni] * t_grid[i] * t_grid[i];
      Real r = out.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(i));
      if (x > 9.0 || r <= 1e-290) continue;
      Real y = std::log(r);
      sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
      ++cnt;
    }
  if (cnt >= 2) {
    Real den = cnt * sxx - sx * sx;
    if (den > 0) {
      Real slope = (cnt * sxy - sx * sy) / den;
      out.envelope.c2 = -slope;
      out.envelope.log_c2 = (sy - slope * sx) / cnt;
      Real ybar = sy / cnt;
      Real ss_tot = syy - cnt * ybar * ybar;
      Real ss_res = 0;
      // Second pass for the residual sum.
      for (std::size_t ni = 0; ni < n_grid.size(); ++ni)
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
          Real x = out.sigma[ni] * out.sigma[ni] * t_grid[i] * t_grid[i];
          Real r = out.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(i));
          if (x > 9.0 || r <= 1e-290) continue;
          Real d = std::log(r) - (slope * x + out.envelope.log_c2);
          ss_res += d * d;
        }
      out.envelope.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
      out.envelope.count = cnt;
    }
  }
  return out;
}

enum class LatticeClass { IrreducibleNonlattice, Lattice, VarianceBounded, Indeterminate };

struct LatticeReport {
  std::vector<Real> t_grid;
  long n_max = 0;
  NormCurve curve;
  std::vector<Real> resonant_t;   // peaks that persist when the product deepens
  std::vector<Real> transient_t;  // flagged peaks that decayed under screening
  std::optional<Real> span_a;
  LatticeClass classification = LatticeClass::Indeterminate;
  Real threshold = 0.2;
  Real grid_spacing = 0.0;
  Real max_offres_norm = 0.0;  // top-n norm away from peak windows and the small-t envelope
  VarianceEvidence variance;
};

// Tolerance Euclid on the observable's value differences. A positive result
// is a candidate lattice span; collapse below the floor means the values
// generate a dense group and no lattice candidate exists.
inline std::optional<Real> value_gcd_guess(const ValidatedSystem& sys, const RpfData& rpf,
                                           const FnSeq& f, Real tol = 1e-9,
                                           Real floor = 1e-6) {
  int D = rpf.working_depth;
  long pool = std::min<long>(4, rpf.window_end);
  Real g = 0.0;
  for (long j = 0; j < pool; ++j) {
    FnR fj = embed(sys, f.at(sys, j), D);
    Real base = fj.values[0];
    for (std::int64_t i = 1; i < fj.values.size(); ++i) {
      Real b = std::abs(fj.values[i] - base);
      while (b > tol) {
        Real r = std::fmod(g, b);
        g = b;
        b = r;
      }
    }
  }
  if (g < floor) return std::nullopt;
  return g;
}

// Scan [delta, T] for twisted-norm resonances and classify the observable's
// lattice structure. Resonances are flagged only where the norm beats both
// the absolute threshold and 3x the fitted small-t Gaussian envelope, and
// does not decay across the top half of the n grid.
inline LatticeReport resonance_scan(const ValidatedSystem& sys, const RpfData& rpf,
                                    const FnSeq& f, Real delta, Real T, long n_max,
                                    Real threshold = 0.2, Real spacing = 0.01,
                                    int probe_count = 4, int threads = 0) {
  if (!(delta > 0) || !(T > delta)) throw ConfigError("need 0 < delta < T");
  if (spacing > 0.01 + 1e-15) throw GridTooCoarse("resonance grid spacing must be <= 0.01");
  if (n_max < 8 || n_max > rpf.window_end)
    throw IndexOutOfWindow("n_max must sit inside the solved window");

  LatticeReport rep;
  rep.n_max = n_max;
  rep.threshold = threshold;

  long steps = static_cast<long>(std::ceil((T - delta) / spacing));
  rep.grid_spacing = (T - delta) / static_cast<Real>(steps);
  for (long i = 0; i <= steps; ++i)
    rep.t_grid.push_back(delta + rep.grid_spacing * static_cast<Real>(i));

  std::vector<long> var_grid;
  for (long n : {n_max / 8, n_max / 4, n_max / 2, 3 * n_max / 4, n_max})
    if (n >= 2 && (var_grid.empty() || n > var_grid.back())) var_grid.push_back(n);
  rep.variance = classify_variance(sys, rpf, f, var_grid);
  if (rep.variance.verdict == VarianceClass::Bounded) {
    rep.classification = LatticeClass::VarianceBounded;
    return rep;
  }

  std::vector<long> n_grid;
  for (long k = 1; k <= 8; ++k) {
    long n = n_max * k / 8;
    if (n >= 1 && (n_grid.empty() || n > n_grid.back())) n_grid.push_back(n);
  }
  rep.curve = norm_curve(sys, rpf, f, rep.t_grid, n_grid, probe_count, 1020u, threads);

  std::size_t last = n_grid.size() - 1;
  std::size_t half = n_grid.size() / 2;
  Real sigma_top = rep.curve.sigma[last];
  auto rho_at = [&](std::size_t ni, std::size_t ti) {
    return rep.curve.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(ti));
  };
  auto envelope3 = [&](Real t) {
    return rep.curve.envelope.usable() ? 3.0 * rep.curve.envelope.value(sigma_top, t) : 0.0;
  };

  // Grid points above both the threshold and the fitted envelope, grouped
  // into contiguous runs; each run contributes one candidate peak at its
  // argmax.
  std::vector<bool> above(rep.t_grid.size(), false);
  for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti)
    above[ti] = rho_at(last, ti) > std::max(threshold, envelope3(rep.t_grid[ti]));

  std::vector<std::size_t> run_lo, run_hi, peak_idx;
  for (std::size_t ti = 0; ti < above.size();) {
    if (!above[ti]) {
      ++ti;
      continue;
    }
    std::size_t start = ti;
    while (ti < above.size() && above[ti]) ++ti;
    std::size_t best = start;
    for (std::size_t k = start; k < ti; ++k)
      if (rho_at(last, k) > rho_at(last, best)) best = k;
    run_lo.push_back(start);
    run_hi.push_back(ti);
    peak_idx.push_back(best);
  }

  // Persistence screening: a genuine resonance neither decays across the top
  // half of the n-grid nor when the product is extended well past n_max; a
  // finite-n near-coincidence does.
  long n_ext = std::min(rpf.window_end, 8 * n_max);
  std::vector<FnC> probes = detail::make_probes(sys, rpf.working_depth, probe_count, 1020u);
  std::vector<Real> probe_star;
  for (const FnC& p : probes) probe_star.push_back(star_norm(p, 1.0, rep.curve.ly.C1));
  std::vector<bool> persistent(peak_idx.size(), true);
  for (std::size_t k = 0; k < peak_idx.size(); ++k) {
    Real head = rho_at(half, peak_idx[k]);
    for (std::size_t ni = half; ni <= last; ++ni)
      if (rho_at(ni, peak_idx[k]) < 0.5 * head) persistent[k] = false;
    if (persistent[k] && n_ext > n_max) {
      Real r_now = rho_at(last, peak_idx[k]);
      Real r_deep = detail::rho_single(sys, rpf, f, rep.t_grid[peak_idx[k]], n_ext, probes,
                                       probe_star, rep.curve.ly.C1);
      persistent[k] = r_deep >= 0.5 * r_now;
    }
  }

  // Peak location refined by a parabola through the top three samples when
  // curvature allows.
  for (std::size_t k = 0; k < peak_idx.size(); ++k) {
    std::size_t pi_ = peak_idx[k];
    Real t_star = rep.t_grid[pi_];
    if (pi_ > 0 && pi_ + 1 < rep.t_grid.size()) {
      Real ym = rho_at(last, pi_ - 1), y0 = rho_at(last, pi_), yp = rho_at(last, pi_ + 1);
      Real den = ym - 2.0 * y0 + yp;
      if (den < -1e-12) {
        Real shift = 0.5 * (ym - yp) / den;
        if (std::abs(shift) <= 1.0) t_star += shift * rep.grid_spacing;
      }
    }
    (persistent[k] ? rep.resonant_t : rep.transient_t).push_back(t_star);
  }

  // Largest screened norm away from the persistent runs and outside the
  // region the envelope explains. Remaining points still large at n_max are
  // re-measured at the extended horizon, so finite-n shoulders report their
  // asymptotic size instead of a transient one.
  std::vector<bool> keep_out(rep.t_grid.size(), false);
  for (std::size_t k = 0; k < peak_idx.size(); ++k)
    if (persistent[k])
      for (std::size_t ti = run_lo[k]; ti < run_hi[k]; ++ti) keep_out[ti] = true;
  for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti) {
    if (keep_out[ti]) continue;
    if (envelope3(rep.t_grid[ti]) >= threshold) continue;
    Real r = rho_at(last, ti);
    if (r > 0.25 * threshold && n_ext > n_max)
      r = detail::rho_single(sys, rpf, f, rep.t_grid[ti], n_ext, probes, probe_star,
                             rep.curve.ly.C1);
    rep.max_offres_norm = std::max(rep.max_offres_norm, r);
  }

  if (rep.resonant_t.empty()) {
    std::optional<Real> g = value_gcd_guess(sys, rpf, f);
    if (!g.has_value() || T >= 3.0 * 2.0 * kPi / *g)
      rep.classification = LatticeClass::IrreducibleNonlattice;
    else
      rep.classification = LatticeClass::Indeterminate;  // scanned range too short
    return rep;
  }

  Real t1 = rep.resonant_t.front();
  bool arithmetic = t1 > 0;
  for (Real tk : rep.resonant_t) {
    Real k = std::round(tk / t1);
    if (k < 1 || std::abs(tk - k * t1) > rep.grid_spacing + 1e-12) arithmetic = false;
  }
  if (arithmetic) {
    rep.span_a = 2.0 * kPi / t1;
    rep.classification = LatticeClass::Lattice;
  } else {
    rep.classification = LatticeClass::Indeterminate;
  }
  return rep;
}

// Dense matrix of the twisted operator on the working-depth coordinates
// (image embedded back up to depth D_w). Exact norm work is only offered at
// small dimension.
inline MatrixC operator_matrix(const ValidatedSystem& sys, const RpfData& rpf, const FnSeq& f,
                               long j, Real t) {
  int D = rpf.working_depth;
  auto src_words = sys.words(j, D);
  auto dst_words = sys.words(j + 1, D);
  if (src_words->count() > 256 || dst_words->count() > 256)
    throw RangeOverflow("exact operator matrices are limited to dimension 256");
  MatrixC M(dst_words->count(), src_words->count());
  for (std::int64_t c = 0; c < src_words->count(); ++c) {
    FnC basis = make_constant<Complex>(sys, j, D, Complex(0.0, 0.0));
    basis.values[c] = Complex(1.0, 0.0);
    FnC img = embed(sys, twisted_apply(sys, rpf, f, j, t, basis), D);
    M.col(c) = img.values;
  }
  return M;
}

// Exact sup-norm operator norm of a dense matrix: max absolute row sum.
inline Real operator_sup_norm(const MatrixC& M) {
  Real best = 0.0;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Real acc = 0.0;
    for (Eigen::Index c = 0; c < M.cols(); ++c) acc += std::abs(M(r, c));
    best = std::max(best, acc);
  }
  return best;
}

struct TemporalDistanceQuery {
  long j = 0;
  long k = 0;
  long m = 0;
  Word y1, y2;          // length k at base j
  Word w1, w2, v1, v2;  // length m at base j + k
  Word x1, x2;          // tails at base j + k + m, length >= working depth
};

namespace detail {

inline Word concat3(const Word& a, const Word& b, const Word& c) {
  Word out;
  out.base = a.base;
  out.symbols = a.symbols;
  out.symbols.insert(out.symbols.end(), b.symbols.begin(), b.symbols.end());
  out.symbols.insert(out.symbols.end(), c.symbols.begin(), c.symbols.end());
  return out;
}

inline Real birkhoff_on_word(const ValidatedSystem& sys, const FnSeq& f, const Word& w,
                             long len) {
  Real acc = 0.0;
  for (long i = 0; i < len; ++i) {
    FnR fi = f.at(sys, w.base + i);
    if (static_cast<long>(w.symbols.size()) - i < fi.depth)
      throw Inadmissible("tail too short to resolve every summand");
    Word sub;
    sub.base = w.base + i;
    sub.symbols.assign(w.symbols.begin() + i, w.symbols.end());
    acc += evaluate(fi, sub);
  }
  return acc;
}

}  // namespace detail

// Alternating four-orbit Birkhoff sum: the first and third orbits share the
// y1 block, the second and fourth share y2, and the tails swap, so any
// cocycle of the named structure cancels and only the genuine obstruction
// survives.
inline Real temporal_distance(const ValidatedSystem& sys, const FnSeq& f,
                              const TemporalDistanceQuery& q) {
  long ell = q.k + q.m;
  if (static_cast<long>(q.y1.symbols.size()) != q.k ||
      static_cast<long>(q.y2.symbols.size()) != q.k)
    throw Inadmissible("y blocks must have length k");
  for (const Word* w : {&q.w1, &q.w2, &q.v1, &q.v2})
    if (static_cast<long>(w->symbols.size()) != q.m)
      throw Inadmissible("gap blocks must have length m");
  Word A = detail::concat3(q.y1, q.w1, q.x1);
  Word B = detail::concat3(q.y2, q.v1, q.x2);
  Word C = detail::concat3(q.y1, q.w2, q.x2);
  Word D_ = detail::concat3(q.y2, q.v2, q.x1);
  A.base = B.base = C.base = D_.base = q.j;
  for (const Word* w : {&A, &B, &C, &D_})
    if (!sys.is_admissible(*w)) throw Inadmissible("query orbit leaves the shift space");
  return detail::birkhoff_on_word(sys, f, A, ell) + detail::birkhoff_on_word(sys, f, B, ell) -
         detail::birkhoff_on_word(sys, f, C, ell) - detail::birkhoff_on_word(sys, f, D_, ell);
}

// Worst distance from the samples to the lattice (2 pi / t) Z.
inline Real lattice_residual(const std::vector<Real>& delta_samples, Real t) {
  if (t == 0.0) throw ConfigError("lattice residual needs t != 0");
  Real period = 2.0 * kPi / std::abs(t);
  Real worst = 0.0;
  for (Real d : delta_samples) {
    Real r = std::fmod(std::abs(d), period);
    worst = std::max(worst, std::min(r, period - r));
  }
  return worst;
}

}  // namespace seqsft
