// seqsft: transfer operators and sequential Ruelle-Perron-Frobenius data.
// Operators are stored as source-sorted row maps over the admissible-word
// tables; a depth-D function maps to a depth-(D-1) function exactly, so the
// working-depth space is invariant and everything here is exact linear
// algebra up to the iteration tails reported in the diagnostics.
#pragma once

#include <cmath>
#include <numeric>

#include "seqsft/funcspace.hpp"

namespace seqsft {

// One operator index j at source depth D: image value at target word v
// (base j+1, depth D-1) is sum over edges a -> v_0 of weight(a.v) * f(a.v).
struct TransferPlan {
  long j = 0;
  int src_depth = 2;
  WordSetPtr src;  // words(j, D)
  WordSetPtr dst;  // words(j+1, D-1)
  std::vector<std::int64_t> offsets;
  std::vector<std::int32_t> src_idx;
  VectorR weight;

  template <class Scalar>
  Vector<Scalar> apply(const Vector<Scalar>& f) const {
    Vector<Scalar> out = Vector<Scalar>::Zero(dst->count());
    for (std::int64_t t = 0; t < dst->count(); ++t) {
      Scalar acc{};
      for (std::int64_t k = offsets[static_cast<std::size_t>(t)];
           k < offsets[static_cast<std::size_t>(t) + 1]; ++k)
        acc += weight[k] * f[src_idx[static_cast<std::size_t>(k)]];
      out[t] = acc;
    }
    return out;
  }

  // Image of f under the operator twisted by a per-source multiplier
  // (usually e^{itf_j} on the source words).
  VectorC apply_twisted(const VectorC& f, const VectorC& multiplier) const {
    VectorC out = VectorC::Zero(dst->count());
    for (std::int64_t t = 0; t < dst->count(); ++t) {
      Complex acc{};
      for (std::int64_t k = offsets[static_cast<std::size_t>(t)];
           k < offsets[static_cast<std::size_t>(t) + 1]; ++k) {
        std::int32_t s = src_idx[static_cast<std::size_t>(k)];
        acc += weight[k] * multiplier[s] * f[s];
      }
      out[t] = acc;
    }
    return out;
  }

  // Adjoint action on weight vectors over the target words.
  VectorR apply_adjoint(const VectorR& w) const {
    VectorR out = VectorR::Zero(src->count());
    for (std::int64_t t = 0; t < dst->count(); ++t)
      for (std::int64_t k = offsets[static_cast<std::size_t>(t)];
           k < offsets[static_cast<std::size_t>(t) + 1]; ++k)
        out[src_idx[static_cast<std::size_t>(k)]] += weight[k] * w[t];
    return out;
  }
};

// Build the plan for index j at depth D from a potential (depth <= D):
// weight at source word w is e^{potential(w)}; target is w's suffix.
inline TransferPlan build_plan(const ValidatedSystem& sys, const FnR& potential, long j,
                               int depth) {
  if (potential.base != j) throw BaseMismatch("potential base must equal operator index");
  if (potential.depth > depth) throw DepthOverflow("potential deeper than plan depth");
  TransferPlan plan;
  plan.j = j;
  plan.src_depth = depth;
  plan.src = sys.words(j, depth);
  plan.dst = sys.words(j + 1, depth - 1);
  FnR pot = embed(sys, potential, depth);

  std::int64_t n_src = plan.src->count();
  std::int64_t n_dst = plan.dst->count();
  std::vector<std::int64_t> count(static_cast<std::size_t>(n_dst) + 1, 0);
  for (std::int64_t i = 0; i < n_src; ++i)
    ++count[plan.src->suffix_of[static_cast<std::size_t>(i)] + 1];
  std::partial_sum(count.begin(), count.end(), count.begin());
  plan.offsets = count;
  plan.src_idx.resize(static_cast<std::size_t>(n_src));
  plan.weight.resize(n_src);
  std::vector<std::int64_t> cursor(plan.offsets.begin(), plan.offsets.end() - 1);
  for (std::int64_t i = 0; i < n_src; ++i) {
    std::int64_t t = plan.src->suffix_of[static_cast<std::size_t>(i)];
    std::int64_t slot = cursor[static_cast<std::size_t>(t)]++;
    plan.src_idx[static_cast<std::size_t>(slot)] = static_cast<std::int32_t>(i);
    plan.weight[slot] = std::exp(pot.values[i]);
  }
  return plan;
}

// Raw transfer operator L_j f at the natural image depth
// max(f.depth, phi_j.depth, 2) - 1.
inline FnR raw_apply(const ValidatedSystem& sys, const FnSeq& phi, long j, const FnR& f) {
  if (f.base != j) throw BaseMismatch("function base must equal operator index");
  FnR phi_j = phi.at(sys, j);
  int depth = std::max({f.depth, phi_j.depth, 2});
  TransferPlan plan = build_plan(sys, phi_j, j, depth);
  FnR src = embed(sys, f, depth);
  FnR out;
  out.base = j + 1;
  out.depth = depth - 1;
  out.words = plan.dst;
  out.values = plan.apply(src.values);
  return out;
}

struct RpfData {
  long window_end = 0;   // N: h, nu, mu cover [0, N]; lambda, g, plans cover [0, N-1]
  int working_depth = 2;
  int burn_in = 0;
  Real contraction = 0.0;  // measured per-step coupling ratio, 0 for exact data
  Real tail_error = 0.0;
  std::vector<Real> lambda;
  std::vector<FnR> h;             // depth D_w, structurally depth D_w - 1
  std::vector<FunctionalR> nu;    // depth D_w, nu_j(1) = 1, nu_j(h_j) = 1
  std::vector<FnR> g;             // normalized potential, depth D_w
  std::vector<TransferPlan> plan; // normalized operators, weights e^{g_j}
  std::vector<FunctionalR> mu;    // mu_j = h_j d nu_j, probability weights

  const TransferPlan& plan_at(long j) const {
    if (j < 0 || j >= static_cast<long>(plan.size()))
      throw IndexOutOfWindow("operator index " + std::to_string(j) +
                             " outside solved window");
    return plan[static_cast<std::size_t>(j)];
  }
  const FnR& h_at(long j) const {
    if (j < 0 || j >= static_cast<long>(h.size()))
      throw IndexOutOfWindow("h index outside solved window");
    return h[static_cast<std::size_t>(j)];
  }
  const FnR& g_at(long j) const {
    if (j < 0 || j >= static_cast<long>(g.size()))
      throw IndexOutOfWindow("g index outside solved window");
    return g[static_cast<std::size_t>(j)];
  }
  const FunctionalR& nu_at(long j) const {
    if (j < 0 || j >= static_cast<long>(nu.size()))
      throw IndexOutOfWindow("nu index outside solved window");
    return nu[static_cast<std::size_t>(j)];
  }
  const FunctionalR& mu_at(long j) const {
    if (j < 0 || j >= static_cast<long>(mu.size()))
      throw IndexOutOfWindow("mu index outside solved window");
    return mu[static_cast<std::size_t>(j)];
  }
  Real lambda_at(long j) const {
    if (j < 0 || j >= static_cast<long>(lambda.size()))
      throw IndexOutOfWindow("lambda index outside solved window");
    return lambda[static_cast<std::size_t>(j)];
  }
};

namespace detail {

// Finish RpfData construction from solved h (depth D_w - 1 structurally),
// nu weights, and lambda: normalize, build g with exact per-target
// renormalization so the normalized operator fixes 1, then build plans and
// cylinder masses.
inline void finalize_rpf(const ValidatedSystem& sys, const FnSeq& phi, RpfData& rpf) {
  long N = rpf.window_end;
  int D = rpf.working_depth;
  rpf.g.clear();
  rpf.plan.clear();
  rpf.mu.clear();
  for (long j = 0; j < N; ++j) {
    const FnR& hj = rpf.h[static_cast<std::size_t>(j)];
    const FnR& hj1 = rpf.h[static_cast<std::size_t>(j + 1)];
    FnR ln_h = hj;
    ln_h.values = hj.values.array().log().matrix();
    FnR hj1_shallow = truncate(sys, hj1, D - 1, 1e-6);
    FnR ln_h_next = shift_pullback(sys, hj1_shallow, 1);
    ln_h_next.values = ln_h_next.values.array().log().matrix();
    FnR gj = embed(sys, phi.at(sys, j), D);
    gj.values += ln_h.values - ln_h_next.values;
    gj.values.array() -= std::log(rpf.lambda[static_cast<std::size_t>(j)]);

    // Exact row normalization: sum over preimage symbols of e^{g_j} must be
    // 1 at every target word. The correction absorbs the iteration tail.
    TransferPlan raw = build_plan(sys, gj, j, D);
    for (std::int64_t t = 0; t < raw.dst->count(); ++t) {
      Real row = 0.0;
      for (std::int64_t k = raw.offsets[static_cast<std::size_t>(t)];
           k < raw.offsets[static_cast<std::size_t>(t) + 1]; ++k)
        row += raw.weight[k];
      if (!(row > 0.0)) throw NoConvergence("normalized row sum vanished");
      Real corr = std::log(row);
      for (std::int64_t k = raw.offsets[static_cast<std::size_t>(t)];
           k < raw.offsets[static_cast<std::size_t>(t) + 1]; ++k) {
        raw.weight[k] /= row;
        gj.values[raw.src_idx[static_cast<std::size_t>(k)]] -= corr;
      }
    }
    rpf.g.push_back(std::move(gj));
    rpf.plan.push_back(std::move(raw));
  }
  for (long j = 0; j <= N; ++j) {
    const FnR& hj = rpf.h[static_cast<std::size_t>(j)];
    const FunctionalR& nuj = rpf.nu[static_cast<std::size_t>(j)];
    FunctionalR m;
    m.base = nuj.base;
    m.depth = nuj.depth;
    m.words = nuj.words;
    m.weights = nuj.weights.cwiseProduct(hj.values);
    Real total = m.weights.sum();
    if (!(total > 0.0)) throw NoConvergence("cylinder masses vanished");
    m.weights /= total;
    rpf.mu.push_back(std::move(m));
  }
}

}  // namespace detail

// Forward/backward RPF iteration. The contraction diagnostic couples two
// distinct positive seeds through the same window and measures the sup
// distance of mean-normalized iterates; burn-in K is the first step where
// that distance falls below 0.1 * tol (capped at K_cap).
inline RpfData rpf_solve(const ValidatedSystem& sys, const FnSeq& phi, Real tol = 1e-10,
                         int working_depth = 0, int K_cap = 200,
                         std::uint64_t probe_seed = 20250814u) {
  long N = sys.window_end();
  int D = working_depth > 0 ? working_depth : phi.max_depth();
  if (D < 2) D = 2;

  auto plan_raw = [&](long j) { return build_plan(sys, phi.at(sys, j), j, D); };
  auto normalize_mean = [](VectorR& v) {
    Real m = v.mean();
    if (!(m > 0.0)) throw NoConvergence("forward iterate lost positivity");
    v /= m;
  };

  // Coupling probe along [-K_cap, 0].
  CounterRng rng{probe_seed, 1u};
  VectorR v = VectorR::Ones(sys.words(-K_cap, D)->count());
  VectorR w(v.size());
  for (std::int64_t i = 0; i < w.size(); ++i)
    w[i] = 0.5 + rng.uniform(static_cast<std::uint64_t>(i));
  normalize_mean(w);
  int K = -1;
  Real d_prev = (v - w).lpNorm<Eigen::Infinity>();
  Real tail = d_prev;
  std::vector<Real> ratios;
  for (int s = 1; s <= K_cap; ++s) {
    long j = -K_cap + s - 1;
    TransferPlan p = plan_raw(j);
    VectorR v1 = p.apply(v), w1 = p.apply(w);
    normalize_mean(v1);
    normalize_mean(w1);
    // Re-embed images at depth D to keep the iteration in one space.
    WordSetPtr finer = sys.words(j + 1, D);
    VectorR ve(finer->count()), we(finer->count());
    for (std::int64_t i = 0; i < finer->count(); ++i) {
      ve[i] = v1[finer->prefix_of[static_cast<std::size_t>(i)]];
      we[i] = w1[finer->prefix_of[static_cast<std::size_t>(i)]];
    }
    v = std::move(ve);
    w = std::move(we);
    Real d = (v - w).lpNorm<Eigen::Infinity>();
    if (d_prev > 1e-13 && d > 1e-15 && d_prev < 1e-2) ratios.push_back(d / d_prev);
    d_prev = d;
    if (K < 0 && d <= 0.1 * tol) {
      K = s;
      tail = d;
    }
  }
  if (K < 0) {
    if (d_prev <= tol) {
      K = K_cap;
      tail = d_prev;
    } else {
      throw NoConvergence("coupling distance " + std::to_string(d_prev) +
                          " above tol after " + std::to_string(K_cap) + " steps");
    }
  }
  if (K < 1) K = 1;
  Real delta_hat = 0.0;
  if (!ratios.empty()) {
    Real log_sum = 0.0;
    for (Real r : ratios) log_sum += std::log(r);
    delta_hat = std::exp(log_sum / static_cast<Real>(ratios.size()));
  }
  if (delta_hat >= 0.999 && tail > tol)
    throw NoConvergence("no geometric contraction: measured ratio " +
                        std::to_string(delta_hat));

  RpfData rpf;
  rpf.window_end = N;
  rpf.working_depth = D;
  rpf.burn_in = K;
  rpf.contraction = delta_hat;
  rpf.tail_error = tail;

  // Forward pass: h_j for j in [0, N].
  std::vector<TransferPlan> plans;  // raw plans for [-K, N+K-1], indexed by j+K
  plans.reserve(static_cast<std::size_t>(N + 2 * K));
  for (long j = -K; j < N + K; ++j) plans.push_back(plan_raw(j));
  VectorR cur = VectorR::Ones(sys.words(-static_cast<long>(K), D)->count());
  std::vector<VectorR> h_shallow(static_cast<std::size_t>(N + 1));  // depth D-1 values
  for (long j = -K; j < N; ++j) {
    VectorR img = plans[static_cast<std::size_t>(j + K)].apply(cur);
    normalize_mean(img);
    if (j + 1 >= 0) h_shallow[static_cast<std::size_t>(j + 1)] = img;
    WordSetPtr finer = sys.words(j + 1, D);
    VectorR e(finer->count());
    for (std::int64_t i = 0; i < finer->count(); ++i)
      e[i] = img[finer->prefix_of[static_cast<std::size_t>(i)]];
    cur = std::move(e);
  }

  // Backward adjoint pass: nu_j for j in [0, N].
  long top = N + K;
  VectorR omega = VectorR::Ones(sys.words(top, D)->count());
  omega /= static_cast<Real>(omega.size());
  std::vector<VectorR> nu_w(static_cast<std::size_t>(N + 1));
  for (long j = top - 1; j >= 0; --j) {
    // omega lives on words(j+1, D); the plan's adjoint expects weights on
    // its target table words(j+1, D-1), so coarsen by summing fibers.
    WordSetPtr fine = sys.words(j + 1, D);
    WordSetPtr coarse = sys.words(j + 1, D - 1);
    VectorR wc = VectorR::Zero(coarse->count());
    for (std::int64_t i = 0; i < fine->count(); ++i)
      wc[fine->prefix_of[static_cast<std::size_t>(i)]] += omega[i];
    VectorR prev = plans[static_cast<std::size_t>(j + K)].apply_adjoint(wc);
    Real total = prev.sum();
    if (!(total > 0.0)) throw NoConvergence("backward iterate lost positivity");
    prev /= total;
    if (j <= N) nu_w[static_cast<std::size_t>(j)] = prev;
    omega = std::move(prev);
  }

  for (long j = 0; j <= N; ++j) {
    WordSetPtr ws = sys.words(j, D);
    FnR hj;
    hj.base = j;
    hj.depth = D - 1;
    hj.words = sys.words(j, D - 1);
    hj.values = h_shallow[static_cast<std::size_t>(j)];
    if (hj.values.minCoeff() <= 0.0) throw NoConvergence("h lost positivity");
    FnR hj_full = embed(sys, hj, D);
    FunctionalR nuj;
    nuj.base = j;
    nuj.depth = D;
    nuj.words = ws;
    nuj.weights = nu_w[static_cast<std::size_t>(j)];
    Real mass = nuj.weights.dot(hj_full.values);
    if (!(mass > 0.0)) throw NoConvergence("nu(h) vanished");
    hj_full.values /= mass;
    rpf.h.push_back(std::move(hj_full));
    rpf.nu.push_back(std::move(nuj));
  }
  for (long j = 0; j < N; ++j) {
    const FnR& hj = rpf.h[static_cast<std::size_t>(j)];
    const FnR& hj1 = rpf.h[static_cast<std::size_t>(j + 1)];
    VectorR img = plans[static_cast<std::size_t>(j + K)].apply(hj.values);
    // lambda_j: mean of (L_j h_j) / h_{j+1} over depth-(D-1) target words.
    FnR hj1_shallow = truncate(sys, hj1, D - 1, 1e-6);
    rpf.lambda.push_back((img.array() / hj1_shallow.values.array()).mean());
  }
  detail::finalize_rpf(sys, phi, rpf);
  return rpf;
}

// Assemble RpfData from exactly known components (no iteration): lambda_j,
// h_j (depth <= D_w - 1), nu_j weights at depth D_w. Used by model
// constructors whose triplets are available in closed form.
inline RpfData make_rpf_exact(const ValidatedSystem& sys, const FnSeq& phi,
                              const std::vector<Real>& lambda, const std::vector<FnR>& h,
                              const std::vector<FunctionalR>& nu, int working_depth) {
  long N = sys.window_end();
  if (static_cast<long>(lambda.size()) != N || static_cast<long>(h.size()) != N + 1 ||
      static_cast<long>(nu.size()) != N + 1)
    throw ShapeMismatch("exact rpf components must cover the window");
  RpfData rpf;
  rpf.window_end = N;
  rpf.working_depth = working_depth;
  rpf.burn_in = 0;
  rpf.contraction = 0.0;
  rpf.tail_error = 0.0;
  rpf.lambda = lambda;
  for (long j = 0; j <= N; ++j) {
    FnR hj = embed(sys, h[static_cast<std::size_t>(j)], working_depth);
    FunctionalR nuj = nu[static_cast<std::size_t>(j)];
    if (nuj.depth != working_depth)
      throw ShapeMismatch("nu depth must equal the working depth");
    Real total = nuj.weights.sum();
    nuj.weights /= total;
    Real mass = nuj.weights.dot(hj.values);
    hj.values /= mass;
    rpf.h.push_back(std::move(hj));
    rpf.nu.push_back(std::move(nuj));
  }
  detail::finalize_rpf(sys, phi, rpf);
  return rpf;
}

// Normalized operator application at the natural image depth.
inline FnR normalized_apply(const ValidatedSystem& sys, const RpfData& rpf, long j,
                            const FnR& f) {
  if (f.base != j) throw BaseMismatch("function base must equal operator index");
  if (f.depth <= rpf.working_depth) {
    const TransferPlan& p = rpf.plan_at(j);
    FnR src = embed(sys, f, rpf.working_depth);
    FnR out;
    out.base = j + 1;
    out.depth = rpf.working_depth - 1;
    out.words = p.dst;
    out.values = p.apply(src.values);
    return out;
  }
  // Deep input (long cylinder indicators): one-off plan from g_j at the
  // input's depth; the image depth drops by one.
  TransferPlan p = build_plan(sys, rpf.g_at(j), j, f.depth);
  FnR out;
  out.base = j + 1;
  out.depth = f.depth - 1;
  out.words = p.dst;
  out.values = p.apply(f.values);
  return out;
}

inline FnC normalized_apply(const ValidatedSystem& sys, const RpfData& rpf, long j,
                            const FnC& f) {
  const TransferPlan& p = rpf.plan_at(j);
  FnC src = embed(sys, f, rpf.working_depth);
  FnC out;
  out.base = j + 1;
  out.depth = rpf.working_depth - 1;
  out.words = p.dst;
  out.values = p.apply(src.values);
  return out;
}

// mu_j([w]) for a word of any admissible length. Depths <= D_w marginalize
// the mass table; deeper cylinders refine exactly through
// mu_j([a.v]) = e^{g_j(a.v)} mu_{j+1}([v]).
inline Real cylinder_measure(const ValidatedSystem& sys, const RpfData& rpf, const Word& w) {
  if (!sys.is_admissible(w)) return 0.0;
  int D = rpf.working_depth;
  if (w.length() > D) {
    Word head;
    head.base = w.base;
    head.symbols.assign(w.symbols.begin(), w.symbols.begin() + D);
    Real g_val = evaluate(rpf.g_at(w.base), head);
    Word tail;
    tail.base = w.base + 1;
    tail.symbols.assign(w.symbols.begin() + 1, w.symbols.end());
    return std::exp(g_val) * cylinder_measure(sys, rpf, tail);
  }
  const FunctionalR& m = rpf.mu_at(w.base);
  Real total = 0.0;
  for (std::int64_t i = 0; i < m.words->count(); ++i) {
    if (std::memcmp(m.words->word(i), w.symbols.data(),
                    static_cast<std::size_t>(w.length())) == 0)
      total += m.weights[i];
  }
  return total;
}

// mu_j([w]) per the iterate-until-constant contract: push the indicator of
// [w] through normalized operators until the image is constant; the
// constant is the measure.
inline Real gibbs_cylinder(const ValidatedSystem& sys, const RpfData& rpf, const Word& w,
                           int max_extra = 400) {
  if (!sys.is_admissible(w)) return 0.0;
  FnR cur = indicator(sys, w);
  if (cur.depth < rpf.working_depth) cur = embed(sys, cur, rpf.working_depth);
  Real tol = std::max(1e-11, 10.0 * rpf.tail_error);
  long steps = w.length() + max_extra;
  for (long s = 0; s < steps; ++s) {
    cur = normalized_apply(sys, rpf, w.base + s, cur);
    if (cur.depth < rpf.working_depth) cur = embed(sys, cur, rpf.working_depth);
    Real spread = cur.values.maxCoeff() - cur.values.minCoeff();
    if (s >= w.length() && spread <= tol * std::max(1.0, std::abs(cur.values.mean())))
      return cur.values.mean();
  }
  throw NoConvergence("cylinder iterate did not flatten inside the window");
}

// Diagnostic Gibbs ratio mu_j([w]) * lambda_{j,n} * e^{-S_{j,n} phi(w)}; the
// Birkhoff sum is evaluated on the lexicographically least admissible
// extension of w.
inline Real gibbs_sandwich_ratio(const ValidatedSystem& sys, const RpfData& rpf,
                                 const FnSeq& phi, const Word& w) {
  long n = w.length();
  int pad = 0;
  for (long s = 0; s < n; ++s)
    pad = std::max(pad, phi.at(sys, w.base + s).depth);
  Word x = w;
  while (x.length() < n + pad - 1) {
    long j = x.base + x.length() - 1;
    int d_next = sys.alphabet_size(j + 1);
    int pick = -1;
    for (int b = 0; b < d_next; ++b)
      if (sys.edge(j, x.symbols.back(), b)) { pick = b; break; }
    if (pick < 0) throw Inadmissible("dead end while extending word");
    x.symbols.push_back(static_cast<std::uint8_t>(pick));
  }
  Real birkhoff = 0.0, log_lambda = 0.0;
  for (long s = 0; s < n; ++s) {
    Word shifted;
    shifted.base = w.base + s;
    shifted.symbols.assign(x.symbols.begin() + s, x.symbols.end());
    birkhoff += evaluate(phi.at(sys, w.base + s), shifted);
    log_lambda += std::log(rpf.lambda_at(w.base + s));
  }
  Real mass = cylinder_measure(sys, rpf, w);
  return mass * std::exp(log_lambda - birkhoff);
}

// |int (f o T_j) q dmu_j - int f (L^_j q) dmu_{j+1}| by exact cylinder sums.
inline Real duality_residual(const ValidatedSystem& sys, const RpfData& rpf, long j,
                             const FnR& f_next, const FnR& q_here) {
  if (f_next.base != j + 1 || q_here.base != j)
    throw BaseMismatch("duality integrands at wrong base indices");
  FnR lhs_fn = mul(sys, shift_pullback(sys, f_next, 1), q_here);
  Real lhs = 0.0;
  for (std::int64_t i = 0; i < lhs_fn.words->count(); ++i)
    lhs += lhs_fn.values[i] * cylinder_measure(sys, rpf, lhs_fn.words->word_at(i));
  FnR rq = normalized_apply(sys, rpf, j, q_here);
  FnR rhs_fn = mul(sys, f_next, rq);
  Real rhs = 0.0;
  for (std::int64_t i = 0; i < rhs_fn.words->count(); ++i)
    rhs += rhs_fn.values[i] * cylinder_measure(sys, rpf, rhs_fn.words->word_at(i));
  return std::abs(lhs - rhs);
}

// Integral of f against mu_j by exact cylinder sums at f's depth.
inline Real integrate(const ValidatedSystem& sys, const RpfData& rpf, const FnR& f) {
  if (f.depth <= rpf.working_depth) {
    const FunctionalR& m = rpf.mu_at(f.base);
    FnR g_ = embed(sys, f, rpf.working_depth);
    return m.weights.dot(g_.values);
  }
  Real total = 0.0;
  for (std::int64_t i = 0; i < f.words->count(); ++i)
    total += f.values[i] * cylinder_measure(sys, rpf, f.words->word_at(i));
  return total;
}

}  // namespace seqsft
