// seqsft: model constructors — sequential Markov chains, piecewise-linear
// Markov interval maps, positive matrix cocycles, exact reduction of
// two-sided finite-depth observables to one-sided form, and the named zoo
// the command-line driver dispatches on.
#pragma once

#include <Eigen/LU>

#include <optional>
#include <string>

#include "seqsft/transfer.hpp"

namespace seqsft {

namespace detail {

inline FnR first_symbol_fn(const ValidatedSystem& sys, long j) {
  FnR f = make_constant<Real>(sys, j, 1, 0.0);
  for (std::int64_t i = 0; i < f.words->count(); ++i)
    f.values[i] = static_cast<Real>(f.words->word(i)[0]);
  return f;
}

inline ValidatedSystem full_two_shift(long window) {
  SystemSpec spec;
  spec.window_end = window;
  spec.alphabet_sizes.assign(static_cast<std::size_t>(window) + 1, 2);
  spec.adjacency.assign(static_cast<std::size_t>(window), AdjacencyMatrix::Ones(2, 2));
  spec.extension = ExtensionRule::periodic(1);
  return validate(spec);
}

}  // namespace detail

// Sequential Perron-Frobenius data for a positive matrix product
// Xi_{j,n} = B_{j+n-1} ... B_j, normalized so that nu_j . h_j = 1 and
// nu_j . 1 = 1. The forward pass enforces B_j h_j = lambda_j h_{j+1}
// exactly; edge effects are burned off by cyclic iteration, whose
// contraction in the Hilbert metric is geometric for positive entries.
struct CocycleData {
  std::vector<MatrixR> b;
  std::vector<VectorR> h;    // h[j] for j in [0, size]
  std::vector<VectorR> nu;   // nu[j] as a column vector, nu[j].sum() = 1
  std::vector<Real> lambda;  // lambda[j] for j in [0, size)
  Real identity_gap = 0.0;   // max_n |ln ||Xi_{0,n}|| - sum_{j<n} ln lambda_j|

  long size() const { return static_cast<long>(b.size()); }
  Real log_lambda(long j) const { return std::log(lambda[static_cast<std::size_t>(j)]); }
};

inline CocycleData positive_matrix_cocycle(const std::vector<MatrixR>& b) {
  if (b.empty()) throw ConfigError("cocycle needs at least one matrix");
  Eigen::Index d = b.front().rows();
  for (const MatrixR& m : b) {
    if (m.rows() != d || m.cols() != d)
      throw ConfigError("cocycle matrices must share one square shape");
    if (m.minCoeff() <= 0.0) throw NotPositive("cocycle matrices must be entrywise positive");
  }
  long W = static_cast<long>(b.size());
  const long kBurn = 64;
  auto at = [&](long k) -> const MatrixR& {
    return b[static_cast<std::size_t>(((k % W) + W) % W)];
  };

  CocycleData out;
  out.b = b;
  out.nu.resize(static_cast<std::size_t>(W) + 1);
  out.h.resize(static_cast<std::size_t>(W) + 1);
  out.lambda.resize(static_cast<std::size_t>(W));

  // Backward pass: nu_j proportional to nu_{j+1} B_j, normalized to sum 1.
  for (long j = 0; j <= W; ++j) {
    VectorR v = VectorR::Ones(d) / static_cast<Real>(d);
    for (long k = j + kBurn; k > j; --k) {
      v = at(k - 1).transpose() * v;
      v /= v.sum();
    }
    out.nu[static_cast<std::size_t>(j)] = v;
  }

  // Forward pass: h_0 from a cyclic burn-in, then exact one-step updates.
  VectorR w = VectorR::Ones(d) / static_cast<Real>(d);
  for (long k = -kBurn; k < 0; ++k) {
    w = at(k) * w;
    w /= w.sum();
  }
  w /= out.nu[0].dot(w);
  out.h[0] = w;
  for (long j = 0; j < W; ++j) {
    VectorR next = b[static_cast<std::size_t>(j)] * out.h[static_cast<std::size_t>(j)];
    Real lam = out.nu[static_cast<std::size_t>(j) + 1].dot(next);
    out.lambda[static_cast<std::size_t>(j)] = lam;
    out.h[static_cast<std::size_t>(j) + 1] = next / lam;
  }

  // ln ||Xi_{0,n}|| = sum_{j<n} ln lambda_j + O(1), gap tracked on the
  // lambda-normalized product.
  MatrixR R = MatrixR::Identity(d, d);
  for (long n = 1; n <= W; ++n) {
    R = (b[static_cast<std::size_t>(n - 1)] * R) / out.lambda[static_cast<std::size_t>(n - 1)];
    Real nrm = R.cwiseAbs().rowwise().sum().maxCoeff();
    out.identity_gap = std::max(out.identity_gap, std::abs(std::log(nrm)));
  }
  return out;
}

// Distance of the normalized product Xi_{0,n} / lambda_{0,n} to the rank-one
// limit nu_0 (x) h_n, in the row-sum operator norm, for n = 1..n_max.
inline std::vector<Real> cocycle_decay(const CocycleData& c, long n_max) {
  if (n_max < 1 || n_max > c.size())
    throw IndexOutOfWindow("decay horizon outside the cocycle window");
  Eigen::Index d = c.b.front().rows();
  std::vector<Real> out;
  MatrixR R = MatrixR::Identity(d, d);
  for (long n = 1; n <= n_max; ++n) {
    R = (c.b[static_cast<std::size_t>(n - 1)] * R) / c.lambda[static_cast<std::size_t>(n - 1)];
    MatrixR target = c.h[static_cast<std::size_t>(n)] * c.nu[0].transpose();
    out.push_back((R - target).cwiseAbs().rowwise().sum().maxCoeff());
  }
  return out;
}

// One branch of a piecewise-linear Markov map: a cell of the given length
// mapped affinely onto [image_lo, image_hi].
struct PwBranch {
  Real length = 0.0;
  Real image_lo = 0.0;
  Real image_hi = 1.0;
};

// Exact one-sided reduction of two-sided finite-depth observables:
// psi_j = u_j - u_{j+1} (after the shift) + phi_j, where phi_j depends on
// coordinates >= j only. u carries the past-dependence, phi the one-sided
// remainder; both are finite sums, so the identity is exact on words.
struct SinaiReduction {
  int past_depth = 0;
  int future_depth = 0;
  long j_begin = 0;                          // index of u.front() and phi.front()
  std::vector<FnR> u;                        // u_j at base j - P, depth 2P + F
  std::vector<FnR> phi;                      // phi_j at base j, depth P + F + 1
  std::vector<std::uint8_t> reference_past;  // one period, aligned to absolute index
};

namespace detail {

// Lexicographically least periodic word (period <= 4) that is admissible at
// every index and feeds every live symbol at every junction.
inline std::vector<std::uint8_t> default_reference_past(const ValidatedSystem& sys) {
  long W = sys.spec().window_end;
  for (int q = 1; q <= 4; ++q) {
    std::vector<std::uint8_t> cand(static_cast<std::size_t>(q), 0);
    while (true) {
      bool ok = true;
      for (long c = 0; ok && c <= W; ++c)
        if (cand[static_cast<std::size_t>(c % q)] >= sys.alphabet_size(c)) ok = false;
      for (long c = 0; ok && c < W; ++c)
        if (!sys.edge(c, cand[static_cast<std::size_t>(c % q)],
                      cand[static_cast<std::size_t>((c + 1) % q)]))
          ok = false;
      for (long j = 1; ok && j <= W; ++j) {
        auto ws = sys.words(j, 1);
        for (std::int64_t i = 0; ok && i < ws->count(); ++i)
          if (!sys.edge(j - 1, cand[static_cast<std::size_t>((j - 1) % q)], ws->word(i)[0]))
            ok = false;
      }
      if (ok) return cand;
      int pos = q - 1;
      while (pos >= 0) {
        if (++cand[static_cast<std::size_t>(pos)] <
            static_cast<std::uint8_t>(sys.alphabet_size(pos)))
          break;
        cand[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
  throw IncompatibleReferencePast("no admissible periodic reference past of period <= 4");
}

// Word with coordinates [lo, lo + len) copied out of w, where the first
// `replaced` absolute coordinates of w were overwritten by the reference
// past. Admissibility of the result is the junction-compatibility demand.
inline Word past_modified_subword(const ValidatedSystem& sys, const Word& w, long replaced,
                                  long offset, long len,
                                  const std::vector<std::uint8_t>& past) {
  Word out;
  out.base = w.base + offset;
  out.symbols.reserve(static_cast<std::size_t>(len));
  long q = static_cast<long>(past.size());
  for (long c = offset; c < offset + len; ++c) {
    long abs_idx = w.base + c;
    if (c < replaced)
      out.symbols.push_back(past[static_cast<std::size_t>(((abs_idx % q) + q) % q)]);
    else
      out.symbols.push_back(w.symbols[static_cast<std::size_t>(c)]);
  }
  if (!sys.is_admissible(out))
    throw IncompatibleReferencePast("reference past incompatible at index " +
                                    std::to_string(out.base));
  return out;
}

}  // namespace detail

// psi[i] must be the two-sided observable at time j = past_depth + i, stored
// at base j - past_depth with depth past_depth + future_depth + 1. Outputs
// u_j for j in [P, count] and phi_j for j in [P, count - 1].
inline SinaiReduction sinai_reduce(const ValidatedSystem& sys, const std::vector<FnR>& psi,
                                   int past_depth, int future_depth,
                                   std::vector<std::uint8_t> reference_past = {}) {
  long count = static_cast<long>(psi.size());
  int P = past_depth, F = future_depth;
  if (P < 0 || F < 0 || count < 1) throw ConfigError("reduction needs P, F >= 0 and inputs");
  for (long i = 0; i < count; ++i) {
    if (psi[static_cast<std::size_t>(i)].base != i ||
        psi[static_cast<std::size_t>(i)].depth != P + F + 1)
      throw ShapeMismatch("psi[i] must sit at base i with depth P + F + 1");
  }

  SinaiReduction out;
  out.past_depth = P;
  out.future_depth = F;
  out.j_begin = P;

  if (P == 0) {
    // Already one-sided: u = 0, phi = psi.
    for (long j = 0; j <= count; ++j)
      out.u.push_back(make_constant<Real>(sys, j, 1, 0.0));
    out.phi = psi;
    return out;
  }
  if (count < P + 1) throw ConfigError("need at least P + 1 observables");

  if (reference_past.empty()) reference_past = detail::default_reference_past(sys);
  out.reference_past = reference_past;
  auto psi_at = [&](long j) -> const FnR& { return psi[static_cast<std::size_t>(j - P)]; };

  // u_j(x) = sum_{k<P} [psi_{j+k}(x) - psi_{j+k}(x with coords < j replaced)].
  for (long j = P; j <= count; ++j) {
    FnR uj = make_constant<Real>(sys, j - P, 2 * P + F, 0.0);
    for (std::int64_t i = 0; i < uj.words->count(); ++i) {
      Word w = uj.words->word_at(i);
      Real val = 0.0;
      for (int k = 0; k < P; ++k) {
        Word plain = detail::past_modified_subword(sys, w, 0, k, P + F + 1, reference_past);
        Word swapped = detail::past_modified_subword(sys, w, P, k, P + F + 1, reference_past);
        val += evaluate(psi_at(j + k), plain) - evaluate(psi_at(j + k), swapped);
      }
      uj.values[i] = val;
    }
    out.u.push_back(uj);
  }

  // phi_j = psi_j(a_j x) + sum_{k=1..P} [psi_{j+k}(a_j x) - psi_{j+k}(a_{j+1} x)],
  // which depends on coordinates >= j only.
  for (long j = P; j < count; ++j) {
    FnR pj = make_constant<Real>(sys, j, P + F + 1, 0.0);
    for (std::int64_t i = 0; i < pj.words->count(); ++i) {
      Word w = pj.words->word_at(i);
      // Extend left by P past symbols: coordinates [j - P, j + P + F].
      Word aj;
      aj.base = j - P;
      long q = static_cast<long>(reference_past.size());
      for (long c = j - P; c < j; ++c)
        aj.symbols.push_back(reference_past[static_cast<std::size_t>(((c % q) + q) % q)]);
      for (std::uint8_t s : w.symbols) aj.symbols.push_back(s);
      if (!sys.is_admissible(aj))
        throw IncompatibleReferencePast("reference past incompatible at index " +
                                        std::to_string(j));
      Real val = evaluate(psi_at(j), detail::past_modified_subword(sys, aj, 0, 0, P + F + 1,
                                                                   reference_past));
      for (int k = 1; k <= P; ++k) {
        Word lhs = detail::past_modified_subword(sys, aj, 0, k, P + F + 1, reference_past);
        // a_{j+1} additionally replaces coordinate j.
        Word rhs = detail::past_modified_subword(sys, aj, P + 1, k, P + F + 1, reference_past);
        val += evaluate(psi_at(j + k), lhs) - evaluate(psi_at(j + k), rhs);
      }
      pj.values[i] = val;
    }
    out.phi.push_back(pj);
  }
  return out;
}

// Max over represented words of |psi_j - (u_j - u_{j+1} + phi_j)| at index j.
// Exactness here is the reduction's contract.
inline Real sinai_identity_residual(const ValidatedSystem& sys, const std::vector<FnR>& psi,
                                    const SinaiReduction& red, long j) {
  int P = red.past_depth, F = red.future_depth;
  long last_phi = red.j_begin + static_cast<long>(red.phi.size()) - 1;
  if (j < red.j_begin || j > last_phi) throw IndexOutOfWindow("index outside the reduced range");
  const FnR& psij = psi[static_cast<std::size_t>(j - P)];
  const FnR& uj = red.u[static_cast<std::size_t>(j - red.j_begin)];
  const FnR& unext = red.u[static_cast<std::size_t>(j + 1 - red.j_begin)];
  const FnR& phij = red.phi[static_cast<std::size_t>(j - red.j_begin)];

  auto ws = sys.words(j - P, 2 * P + F + 1);
  Real worst = 0.0;
  for (std::int64_t i = 0; i < ws->count(); ++i) {
    Word w = ws->word_at(i);
    auto sub = [&](long offset, long len) {
      Word s;
      s.base = w.base + offset;
      s.symbols.assign(w.symbols.begin() + offset, w.symbols.begin() + offset + len);
      return s;
    };
    Real lhs = evaluate(psij, sub(0, P + F + 1));
    Real rhs = evaluate(phij, sub(P, P + F + 1));
    if (P > 0)
      rhs += evaluate(uj, sub(0, 2 * P + F)) - evaluate(unext, sub(1, 2 * P + F));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// Observable built as martingale + coboundary + span * lattice part:
// f_j = M_j + g_j - g_{j+1} o T_j + a Z_j, with M_j = c_j * (an exact kernel
// direction of the one-step normalized operator) so that L^_j M_j = 0 holds
// by construction.
struct ReducibleFixture {
  FnSeq f;
  FnSeq martingale;
  FnSeq g;
  FnSeq z;
  Real a = 1.0;
  long count = 0;
};

inline ReducibleFixture reducible_fixture(const ValidatedSystem& sys, const RpfData& rpf,
                                          const FnSeq& g, const FnSeq& z,
                                          const std::vector<Real>& c, Real a, long count) {
  if (count < 1 || count >= rpf.window_end)
    throw IndexOutOfWindow("fixture length must leave room for g at index count");
  if (static_cast<long>(c.size()) < count)
    throw ConfigError("need one martingale weight per index");
  if (!(a > 0.0)) throw ConfigError("span must be positive");
  for (long j = count / 2; j + 1 < count; ++j) {
    Real prev = c[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(j)];
    Real next = c[static_cast<std::size_t>(j + 1)] * c[static_cast<std::size_t>(j + 1)];
    if (next > 0.98 * prev)
      if (!(prev == 0.0 && next == 0.0))
        throw DecompositionInvalid("martingale weights fail the ratio test");
  }

  ReducibleFixture out;
  out.g = g;
  out.z = z;
  out.a = a;
  out.count = count;

  for (long j = 0; j < count; ++j) {
    FnR zj = z.at(sys, j);
    for (std::int64_t i = 0; i < zj.values.size(); ++i)
      if (std::abs(zj.values[i] - std::round(zj.values[i])) > 1e-9)
        throw DecompositionInvalid("lattice part must be integer-valued");

    // Exact kernel direction of the one-step operator on depth-1 functions.
    int d = sys.alphabet_size(j);
    MatrixR K;
    for (int s = 0; s < d; ++s) {
      FnR basis = make_constant<Real>(sys, j, 1, 0.0);
      basis.values[s] = 1.0;
      FnR img = normalized_apply(sys, rpf, j, basis);
      if (s == 0) K.resize(img.values.size(), d);
      K.col(s) = img.values;
    }
    Eigen::FullPivLU<MatrixR> lu(K);
    if (lu.dimensionOfKernel() < 1)
      throw DecompositionInvalid("one-step operator has no exact martingale direction");
    VectorR v = lu.kernel().col(0);
    v /= v.cwiseAbs().maxCoeff();
    if (v[d - 1] < 0.0) v = -v;
    if ((K * v).cwiseAbs().maxCoeff() > 1e-10)
      throw DecompositionInvalid("martingale direction is not exactly annihilated");

    FnR mj = make_constant<Real>(sys, j, 1, 0.0);
    mj.values = c[static_cast<std::size_t>(j)] * v;
    out.martingale.entries.push_back(mj);

    FnR gj = g.at(sys, j);
    FnR gnext = shift_pullback(sys, g.at(sys, j + 1), 1);
    int D = std::max({mj.depth, gj.depth + 1, gnext.depth, zj.depth});
    FnR fj = add(sys, embed(sys, mj, D),
                 sub(sys, embed(sys, gj, D), embed(sys, gnext, D)));
    fj = add(sys, fj, scale(embed(sys, zj, D), a));
    out.f.entries.push_back(fj);
  }
  return out;
}

// A named system with its potential and default observable. Markov models
// also carry the one-period transition matrices and the initial law;
// red_fixture carries its certified decomposition.
struct Model {
  std::string name;
  ValidatedSystem sys;
  FnSeq potential;
  FnSeq observable;
  std::vector<MatrixR> transitions;
  VectorR initial;
  std::optional<ReducibleFixture> reducible;
};

// Sequential Markov chain as a Gibbs model: adjacency 1[p_j > 0], potential
// phi_j = ln p_j(x_0, x_1). The Gibbs measure then reproduces the chain's
// path law exactly; a non-stationary initial law enters through the density
// returned by initial_density.
inline Model from_markov_chain(const std::vector<MatrixR>& transitions, const VectorR& initial,
                               long window, long m_check = 8, Real min_entry = 1e-3) {
  if (transitions.empty() || window < 2)
    throw ConfigError("need transition matrices and window >= 2");
  long q = static_cast<long>(transitions.size());
  Eigen::Index d = transitions.front().rows();
  for (const MatrixR& p : transitions) {
    if (p.rows() != d || p.cols() != d)
      throw ConfigError("transition matrices must share one square shape");
    for (Eigen::Index r = 0; r < d; ++r) {
      if (std::abs(p.row(r).sum() - 1.0) > 1e-12)
        throw NotStochastic("row " + std::to_string(r) + " does not sum to 1");
      for (Eigen::Index ccol = 0; ccol < d; ++ccol) {
        if (p(r, ccol) < 0.0) throw NotStochastic("negative transition probability");
        if (p(r, ccol) > 0.0 && p(r, ccol) < min_entry)
          throw NotElliptic("positive entry below the ellipticity floor");
      }
    }
  }
  // Uniform ellipticity within m_check steps, checked cyclically.
  for (long j = 0; j < q; ++j) {
    MatrixR reach = MatrixR::Identity(d, d);
    for (long k = 0; k < m_check; ++k) {
      const MatrixR& p = transitions[static_cast<std::size_t>((j + k) % q)];
      reach = reach * (p.array() > 0.0).cast<Real>().matrix();
    }
    if (reach.minCoeff() <= 0.0)
      throw NotElliptic("chain is not uniformly mixing within the checked horizon");
  }
  if (initial.size() != d || initial.minCoeff() < 0.0 || std::abs(initial.sum() - 1.0) > 1e-9)
    throw ConfigError("initial must be a probability vector over the alphabet");

  SystemSpec spec;
  spec.window_end = window;
  spec.alphabet_sizes.assign(static_cast<std::size_t>(window) + 1, static_cast<int>(d));
  for (long j = 0; j < window; ++j) {
    const MatrixR& p = transitions[static_cast<std::size_t>(j % q)];
    spec.adjacency.push_back((p.array() > 0.0).cast<AdjacencyMatrix::Scalar>().matrix());
  }
  spec.extension = ExtensionRule::periodic(q);

  Model m;
  m.name = "markov";
  m.sys = validate(spec);
  for (long j = 0; j < q; ++j) {
    const MatrixR& p = transitions[static_cast<std::size_t>(j)];
    FnR phi = make_constant<Real>(m.sys, j, 2, 0.0);
    for (std::int64_t i = 0; i < phi.words->count(); ++i)
      phi.values[i] = std::log(p(phi.words->word(i)[0], phi.words->word(i)[1]));
    m.potential.entries.push_back(phi);
  }
  m.observable.entries.push_back(detail::first_symbol_fn(m.sys, 0));
  m.transitions = transitions;
  m.initial = initial;
  return m;
}

// Density of the chain's initial law against the solved mu_0 marginal, so
// that q0 dmu_0 is exactly the path law started from `initial`.
inline FnR initial_density(const ValidatedSystem& sys, const RpfData& rpf,
                           const VectorR& initial) {
  int d = sys.alphabet_size(0);
  if (initial.size() != d || initial.minCoeff() < 0.0 || std::abs(initial.sum() - 1.0) > 1e-9)
    throw ConfigError("initial must be a probability vector over the alphabet");
  VectorR marg = VectorR::Zero(d);
  const auto& mu0 = rpf.mu_at(0);
  auto ws = sys.words(0, rpf.working_depth);
  for (std::int64_t i = 0; i < ws->count(); ++i) marg[ws->word(i)[0]] += mu0.weights[i];
  FnR q0 = make_constant<Real>(sys, 0, 1, 0.0);
  for (int a = 0; a < d; ++a) {
    if (initial[a] > 0.0 && marg[a] <= 0.0)
      throw BadDensity("initial mass on a symbol of measure zero");
    q0.values[a] = marg[a] > 0.0 ? initial[a] / marg[a] : 0.0;
  }
  return q0;
}

// f_j(x) = sum_{k < D} coeffs[k] * x_{j+k}: the depth-D truncation of a
// linear statistic of the driving symbols.
inline FnSeq linear_statistic(const ValidatedSystem& sys, const std::vector<Real>& coeffs) {
  if (coeffs.empty()) throw ConfigError("linear statistic needs coefficients");
  int D = static_cast<int>(coeffs.size());
  FnR f = make_constant<Real>(sys, 0, D, 0.0);
  for (std::int64_t i = 0; i < f.words->count(); ++i) {
    Real v = 0.0;
    for (int k = 0; k < D; ++k)
      v += coeffs[static_cast<std::size_t>(k)] * static_cast<Real>(f.words->word(i)[k]);
    f.values[i] = v;
  }
  FnSeq out;
  out.entries.push_back(f);
  return out;
}

// Piecewise-linear full-branch-onto-unions Markov map: each branch is a cell
// of the stated length mapped affinely onto its image interval, which must
// align with next-level cell boundaries. Potential is -ln |slope|, depth 1.
inline Model pw_linear_markov_map(const std::vector<std::vector<PwBranch>>& levels,
                                  long window) {
  if (levels.empty() || window < 2) throw ConfigError("need branch levels and window >= 2");
  long q = static_cast<long>(levels.size());

  // Cell boundaries per level.
  std::vector<std::vector<Real>> bounds(static_cast<std::size_t>(q));
  for (long l = 0; l < q; ++l) {
    const auto& lv = levels[static_cast<std::size_t>(l)];
    if (lv.empty()) throw ConfigError("level without branches");
    Real acc = 0.0;
    bounds[static_cast<std::size_t>(l)].push_back(0.0);
    for (const PwBranch& br : lv) {
      if (!(br.length > 0.0)) throw ConfigError("cell lengths must be positive");
      acc += br.length;
      bounds[static_cast<std::size_t>(l)].push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-12) throw ConfigError("cell lengths must sum to 1");
  }

  auto boundary_index = [&](long l, Real x) -> int {
    const auto& bb = bounds[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < bb.size(); ++i)
      if (std::abs(bb[i] - x) <= 1e-12) return static_cast<int>(i);
    return -1;
  };

  std::vector<AdjacencyMatrix> adj(static_cast<std::size_t>(q));
  std::vector<std::vector<Real>> slopes(static_cast<std::size_t>(q));
  for (long l = 0; l < q; ++l) {
    const auto& lv = levels[static_cast<std::size_t>(l)];
    long nxt = (l + 1) % q;
    int rows = static_cast<int>(lv.size());
    int cols = static_cast<int>(levels[static_cast<std::size_t>(nxt)].size());
    AdjacencyMatrix A = AdjacencyMatrix::Zero(rows, cols);
    for (int k = 0; k < rows; ++k) {
      const PwBranch& br = lv[static_cast<std::size_t>(k)];
      if (!(br.image_hi > br.image_lo) || br.image_lo < -1e-12 || br.image_hi > 1.0 + 1e-12)
        throw ConfigError("branch image must be a nonempty subinterval of [0, 1]");
      Real slope = (br.image_hi - br.image_lo) / br.length;
      if (slope <= 1.0) throw NotExpanding("branch slope must exceed 1");
      int ilo = boundary_index(nxt, br.image_lo);
      int ihi = boundary_index(nxt, br.image_hi);
      if (ilo < 0 || ihi < 0 || ihi <= ilo)
        throw NotMarkov("branch image is not a union of next-level cells");
      for (int c2 = ilo; c2 < ihi; ++c2) A(k, c2) = 1;
      slopes[static_cast<std::size_t>(l)].push_back(slope);
    }
    adj[static_cast<std::size_t>(l)] = A;
  }

  SystemSpec spec;
  spec.window_end = window;
  for (long j = 0; j <= window; ++j)
    spec.alphabet_sizes.push_back(
        static_cast<int>(levels[static_cast<std::size_t>(j % q)].size()));
  for (long j = 0; j < window; ++j) spec.adjacency.push_back(adj[static_cast<std::size_t>(j % q)]);
  spec.extension = ExtensionRule::periodic(q);

  Model m;
  m.name = "interval";
  m.sys = validate(spec);
  for (long j = 0; j < q; ++j) {
    FnR phi = make_constant<Real>(m.sys, j, 1, 0.0);
    for (std::int64_t i = 0; i < phi.words->count(); ++i)
      phi.values[i] = -std::log(slopes[static_cast<std::size_t>(j)][phi.words->word(i)[0]]);
    m.potential.entries.push_back(phi);
  }
  m.observable.entries.push_back(detail::first_symbol_fn(m.sys, 0));
  return m;
}

// Named zoo used by the driver. File-backed variants ("markov:<file>",
// "cocycle:<file>") are assembled by the caller from the constructors above.
inline Model make_model(const std::string& name, long window) {
  if (name == "coin") {
    Model m;
    m.name = name;
    m.sys = detail::full_two_shift(window);
    m.potential.entries.push_back(make_constant<Real>(m.sys, 0, 1, -std::log(2.0)));
    m.observable.entries.push_back(detail::first_symbol_fn(m.sys, 0));
    return m;
  }
  if (name == "golden_parry") {
    // Maximal-entropy (Parry) chain on the golden-mean shift: transition
    // probabilities 1/phi and 1/phi^2 out of state 0, forced return from 1.
    Real golden = 0.5 * (1.0 + std::sqrt(5.0));
    SystemSpec spec;
    spec.window_end = window;
    spec.alphabet_sizes.assign(static_cast<std::size_t>(window) + 1, 2);
    AdjacencyMatrix A(2, 2);
    A << 1, 1, 1, 0;
    spec.adjacency.assign(static_cast<std::size_t>(window), A);
    spec.extension = ExtensionRule::periodic(1);
    Model m;
    m.name = name;
    m.sys = validate(spec);
    MatrixR p(2, 2);
    p << 1.0 / golden, 1.0 / (golden * golden), 1.0, 0.0;
    FnR phi = make_constant<Real>(m.sys, 0, 2, 0.0);
    for (std::int64_t i = 0; i < phi.words->count(); ++i)
      phi.values[i] = std::log(p(phi.words->word(i)[0], phi.words->word(i)[1]));
    m.potential.entries.push_back(phi);
    m.observable.entries.push_back(detail::first_symbol_fn(m.sys, 0));
    m.transitions = {p};
    m.initial = VectorR::Zero(2);
    m.initial[0] = golden * golden / (1.0 + golden * golden);
    m.initial[1] = 1.0 / (1.0 + golden * golden);
    return m;
  }
  if (name == "doubling") {
    std::vector<std::vector<PwBranch>> levels = {
        {{0.5, 0.0, 1.0}, {0.5, 0.0, 1.0}}};
    Model m = pw_linear_markov_map(levels, window);
    m.name = name;
    return m;
  }
  if (name == "irr_sqrt2") {
    Model m;
    m.name = name;
    m.sys = detail::full_two_shift(window);
    m.potential.entries.push_back(make_constant<Real>(m.sys, 0, 1, -std::log(2.0)));
    FnR f = make_constant<Real>(m.sys, 0, 2, 0.0);
    for (std::int64_t i = 0; i < f.words->count(); ++i) {
      Real a = f.words->word(i)[0], b = f.words->word(i)[1];
      f.values[i] = a + std::sqrt(2.0) * a * b;
    }
    m.observable.entries.push_back(f);
    return m;
  }
  if (name == "red_fixture") {
    Model m;
    m.name = name;
    m.sys = detail::full_two_shift(window);
    m.potential.entries.push_back(make_constant<Real>(m.sys, 0, 1, -std::log(2.0)));
    RpfData rpf = rpf_solve(m.sys, m.potential);
    FnSeq g, z;
    g.entries.push_back(scale(detail::first_symbol_fn(m.sys, 0), 0.3));
    z.entries.push_back(detail::first_symbol_fn(m.sys, 0));
    std::vector<Real> c;
    for (long j = 0; j < window; ++j) c.push_back(std::pow(2.0, -static_cast<Real>(j)));
    ReducibleFixture fx = reducible_fixture(m.sys, rpf, g, z, c, 1.0, window - 1);
    m.observable = fx.f;
    m.reducible = std::move(fx);
    return m;
  }
  throw ConfigError("unknown model name: " + name);
}

}  // namespace seqsft
