// seqsft: Monte Carlo path sampling from sequential Gibbs measures and
// empirical cross-checks against exact transfer-operator results.
#pragma once

#include <string>

#include "seqsft/dist.hpp"

namespace seqsft {

namespace detail {

// Deterministic pairwise summation: fixed association order, so results do
// not depend on batch partitioning and fp drift stays O(log N) ulps.
template <class Scalar>
Scalar pairwise_sum(const Scalar* x, std::int64_t count) {
  if (count <= 8) {
    Scalar acc{};
    for (std::int64_t i = 0; i < count; ++i) acc += x[i];
    return acc;
  }
  std::int64_t half = count / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, count - half);
}

}  // namespace detail

// Conditional tables of the Gibbs measure: the one-sided law is Markov with
// memory D_w - 1, and cond[j](w, b) = mu_j([w b]) / mu_j([w]) for w an
// admissible word of length D_w - 1 at base j.
struct ForwardKernels {
  int memory = 1;
  VectorR initial;            // law of the first `memory` symbols under mu_0
  std::vector<MatrixR> cond;  // cond[j]: rows index words(j, memory), cols the
                              // alphabet at j + memory; rows sum to 1
};

inline ForwardKernels forward_kernels(const ValidatedSystem& sys, const RpfData& rpf,
                                      long count) {
  int D = rpf.working_depth;
  if (count < 1 || count > rpf.window_end - D + 1)
    throw IndexOutOfWindow("kernel range outside the solved window");
  ForwardKernels out;
  out.memory = D - 1;

  for (long j = 0; j < count; ++j) {
    auto deep = sys.words(j, D);
    auto shallow = sys.words(j, D - 1);
    const VectorR& w = rpf.mu_at(j).weights;
    VectorR marg = VectorR::Zero(shallow->count());
    for (std::int64_t i = 0; i < deep->count(); ++i)
      marg[deep->prefix_of[static_cast<std::size_t>(i)]] += w[i];
    if (marg.minCoeff() <= 0.0)
      throw NoConvergence("degenerate cylinder marginal at index " + std::to_string(j));
    MatrixR c = MatrixR::Zero(shallow->count(), sys.alphabet_size(j + D - 1));
    for (std::int64_t i = 0; i < deep->count(); ++i) {
      std::uint32_t row = deep->prefix_of[static_cast<std::size_t>(i)];
      c(row, deep->word(i)[D - 1]) = w[i] / marg[row];
    }
    out.cond.push_back(std::move(c));
    if (j == 0) {
      out.initial = marg / marg.sum();
    }
  }
  return out;
}

// N admissible paths of length n at base 0, stored flat. Randomness is
// counter-based and keyed by (seed, global sample index), so any partition
// of the index range into batches or threads reproduces the same paths.
struct SampleSet {
  long n = 0;
  std::int64_t count = 0;
  std::vector<std::uint8_t> flat;

  const std::uint8_t* path(std::int64_t i) const {
    return flat.data() + i * n;
  }
};

inline SampleSet sample_paths(const ValidatedSystem& sys, const ForwardKernels& k, long n,
                              std::int64_t count, std::uint64_t seed,
                              std::int64_t first_index = 0, int threads = 0) {
  int m = k.memory;
  if (n < m + 1) throw ConfigError("path length below the kernel memory");
  if (n - m > static_cast<long>(k.cond.size()))
    throw IndexOutOfWindow("path length exceeds the kernel range");

  auto first_words = sys.words(0, m);
  std::vector<WordSetPtr> rows;  // word set indexing cond[j]'s rows
  for (long pos = m; pos + 1 < n; ++pos) rows.push_back(sys.words(pos - m + 1, m));

  SampleSet out;
  out.n = n;
  out.count = count;
  out.flat.assign(static_cast<std::size_t>(count) * static_cast<std::size_t>(n), 0);

  // CDF inversion restricted to positive cells, so rounding in the row sums
  // can never select an inadmissible branch.
  auto draw = [](const Real* prob, int cells, int stride, Real v) {
    int pick = -1;
    Real cum = 0.0;
    for (int c = 0; c < cells; ++c) {
      Real p = prob[c * stride];
      if (p <= 0.0) continue;
      cum += p;
      pick = c;
      if (v < cum) break;
    }
    return pick;
  };

  parallel_for(count, threads, [&](std::int64_t i) {
    CounterRng rng{seed, static_cast<std::uint64_t>(first_index + i)};
    std::uint64_t step = 0;
    std::uint8_t* p = out.flat.data() + i * n;

    // Initial memory block from the mu_0 marginal, then one symbol at a time.
    std::int64_t pick = draw(k.initial.data(), static_cast<int>(k.initial.size()), 1,
                             rng.uniform(step++));
    const std::uint8_t* w0 = first_words->word(pick);
    for (int s = 0; s < m; ++s) p[s] = w0[s];

    std::int64_t row = pick;
    for (long pos = m; pos < n; ++pos) {
      const MatrixR& c = k.cond[static_cast<std::size_t>(pos - m)];
      int b = draw(c.data() + row, static_cast<int>(c.cols()), static_cast<int>(c.rows()),
                   rng.uniform(step++));
      p[pos] = static_cast<std::uint8_t>(b);
      if (pos + 1 < n) {
        auto r = rows[static_cast<std::size_t>(pos - m)]->find(p + pos - m + 1);
        if (!r) throw Inadmissible("sampled prefix left the admissible set");
        row = static_cast<std::int64_t>(*r);
      }
    }
  });
  return out;
}

// Empirical vs exact comparison for Birkhoff sums over a sample set: mean,
// variance, characteristic function at probe points, and (optionally) PMF
// cells. Aggregation uses pairwise summation so the report is independent
// of batching.
struct EmpiricalReport {
  std::int64_t count = 0;
  long n_terms = 0;
  Real mean_emp = 0.0, mean_exact = 0.0, mean_band = 0.0;
  Real var_emp = 0.0, var_exact = 0.0, var_band = 0.0;
  std::vector<Real> t;
  std::vector<Complex> phi_emp, phi_exact;
  Real phi_band = 0.0;
  std::vector<long> pmf_u;
  std::vector<Real> pmf_emp, pmf_exact, pmf_band;
  std::vector<std::string> flags;

  bool ok() const { return flags.empty(); }
};

inline EmpiricalReport empirical_check(const ValidatedSystem& sys, const SampleSet& samples,
                                       const FnSeq& f, const Moments& exact,
                                       const std::vector<Real>& t_probe,
                                       const std::vector<Complex>& phi_exact,
                                       const PmfTable* pmf = nullptr) {
  if (t_probe.size() != phi_exact.size())
    throw ConfigError("one exact value per characteristic-function probe");
  std::int64_t N = samples.count;
  if (N < 2) throw ConfigError("need at least two samples");

  int depth = 1;
  for (const FnR& e : f.entries) depth = std::max(depth, e.depth);
  long n_terms = samples.n - depth + 1;
  if (n_terms < 1) throw ConfigError("paths shorter than the observable depth");

  // Per-sample Birkhoff sums; the per-index functions are hoisted out of
  // the sample loop and words are resolved by table lookup.
  std::vector<FnR> fj;
  for (long j = 0; j < n_terms; ++j) fj.push_back(f.at(sys, j));
  std::vector<Real> s(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    const std::uint8_t* p = samples.path(i);
    Real acc = 0.0;
    for (long j = 0; j < n_terms; ++j) {
      auto r = fj[static_cast<std::size_t>(j)].words->find(p + j);
      if (!r) throw Inadmissible("sample path leaves the admissible set");
      acc += fj[static_cast<std::size_t>(j)].values[*r];
    }
    s[static_cast<std::size_t>(i)] = acc;
  }

  EmpiricalReport rep;
  rep.count = N;
  rep.n_terms = n_terms;
  rep.mean_exact = exact.mean;
  rep.var_exact = exact.variance;
  rep.t = t_probe;
  rep.phi_exact = phi_exact;

  Real Nr = static_cast<Real>(N);
  rep.mean_emp = detail::pairwise_sum(s.data(), N) / Nr;
  std::vector<Real> sq(static_cast<std::size_t>(N)), quart(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    Real d = s[static_cast<std::size_t>(i)] - rep.mean_emp;
    sq[static_cast<std::size_t>(i)] = d * d;
    quart[static_cast<std::size_t>(i)] = d * d * d * d;
  }
  rep.var_emp = detail::pairwise_sum(sq.data(), N) / (Nr - 1.0);
  Real m4 = detail::pairwise_sum(quart.data(), N) / Nr;

  rep.mean_band = 4.0 * std::sqrt(std::max(exact.variance, 0.0) / Nr);
  rep.var_band = 4.0 * std::sqrt(std::max(m4 - rep.var_emp * rep.var_emp, 0.0) / Nr);
  rep.phi_band = 4.0 / std::sqrt(Nr);
  if (std::abs(rep.mean_emp - rep.mean_exact) > rep.mean_band)
    rep.flags.push_back("mean outside band");
  if (std::abs(rep.var_emp - rep.var_exact) > rep.var_band)
    rep.flags.push_back("variance outside band");

  std::vector<Complex> z(static_cast<std::size_t>(N));
  for (std::size_t ti = 0; ti < t_probe.size(); ++ti) {
    for (std::int64_t i = 0; i < N; ++i)
      z[static_cast<std::size_t>(i)] =
          std::exp(Complex(0.0, t_probe[ti] * s[static_cast<std::size_t>(i)]));
    Complex avg = detail::pairwise_sum(z.data(), N) / Complex(Nr, 0.0);
    rep.phi_emp.push_back(avg);
    if (std::abs(avg - phi_exact[ti]) > rep.phi_band)
      rep.flags.push_back("characteristic function outside band at t = " +
                          std::to_string(t_probe[ti]));
  }

  if (pmf != nullptr) {
    for (std::int64_t m = 0; m < pmf->mass.size(); ++m) {
      long u = pmf->u_min + m;
      std::int64_t hits = 0;
      for (std::int64_t i = 0; i < N; ++i)
        if (std::llround(s[static_cast<std::size_t>(i)]) == u) ++hits;
      Real p_exact = pmf->mass[m];
      Real band = 4.0 * std::sqrt(std::max(p_exact * (1.0 - p_exact), 0.0) / Nr);
      rep.pmf_u.push_back(u);
      rep.pmf_exact.push_back(p_exact);
      rep.pmf_emp.push_back(static_cast<Real>(hits) / Nr);
      rep.pmf_band.push_back(band);
      if (std::abs(rep.pmf_emp.back() - p_exact) > band)
        rep.flags.push_back("pmf cell outside band at u = " + std::to_string(u));
    }
  }
  return rep;
}

}  // namespace seqsft
