#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "seqsft/models.hpp"
#include "seqsft/sampler.hpp"

using namespace seqsft;
using namespace seqsft::testing;

namespace {

FnR unit_density(const ValidatedSystem& sys) {
  return make_constant<Real>(sys, 0, 1, 1.0);
}

// Empirical frequency of the cylinder [w] across a sample set.
Real cylinder_freq(const SampleSet& s, const Word& w) {
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < s.count; ++i) {
    const std::uint8_t* p = s.path(i) + w.base;
    bool match = true;
    for (long k = 0; k < w.length(); ++k)
      if (p[k] != w.symbols[static_cast<std::size_t>(k)]) {
        match = false;
        break;
      }
    if (match) ++hits;
  }
  return static_cast<Real>(hits) / static_cast<Real>(s.count);
}

}  // namespace

TEST_CASE("forward kernels reproduce conditional laws") {
  Model coin = make_model("coin", 12);
  RpfData rpf = rpf_solve(coin.sys, coin.potential);
  ForwardKernels k = forward_kernels(coin.sys, rpf, 10);
  CHECK(k.memory == 1);
  for (const MatrixR& c : k.cond) {
    for (int r = 0; r < c.rows(); ++r) CHECK(std::abs(c.row(r).sum() - 1.0) < 1e-12);
    CHECK((c.array() - 0.5).abs().maxCoeff() < 1e-10);
  }
  CHECK((k.initial.array() - 0.5).abs().maxCoeff() < 1e-10);

  MatrixR p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  VectorR init(2);
  init << 0.5, 0.5;
  Model mk = from_markov_chain({p}, init, 12);
  RpfData rpf_mk = rpf_solve(mk.sys, mk.potential);
  ForwardKernels kk = forward_kernels(mk.sys, rpf_mk, 10);
  for (const MatrixR& c : kk.cond) CHECK((c - p).cwiseAbs().maxCoeff() < 1e-9);

  Model gold = make_model("golden_parry", 12);
  RpfData rpf_g = rpf_solve(gold.sys, gold.potential);
  ForwardKernels kg = forward_kernels(gold.sys, rpf_g, 10);
  Real golden = 0.5 * (1.0 + std::sqrt(5.0));
  for (const MatrixR& c : kg.cond) {
    CHECK(c(1, 1) == 0.0);
    CHECK(c(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c(0, 1) == doctest::Approx(2.0 - golden).epsilon(1e-9));
  }

  CHECK_THROWS_AS(forward_kernels(coin.sys, rpf, 12), IndexOutOfWindow);
}

TEST_CASE("sampling is deterministic and partition-independent") {
  Model coin = make_model("coin", 20);
  RpfData rpf = rpf_solve(coin.sys, coin.potential);
  ForwardKernels k = forward_kernels(coin.sys, rpf, 16);

  SampleSet a = sample_paths(coin.sys, k, 16, 64, 9001u);
  SampleSet b = sample_paths(coin.sys, k, 16, 64, 9001u);
  CHECK(a.flat == b.flat);

  SampleSet c1 = sample_paths(coin.sys, k, 16, 64, 9001u, 0, 1);
  SampleSet c5 = sample_paths(coin.sys, k, 16, 64, 9001u, 0, 5);
  CHECK(c1.flat == c5.flat);

  // Disjoint index ranges tile the full run regardless of batching.
  SampleSet lo = sample_paths(coin.sys, k, 16, 24, 9001u, 0);
  SampleSet hi = sample_paths(coin.sys, k, 16, 40, 9001u, 24);
  std::vector<std::uint8_t> glued = lo.flat;
  glued.insert(glued.end(), hi.flat.begin(), hi.flat.end());
  CHECK(glued == a.flat);

  SampleSet other = sample_paths(coin.sys, k, 16, 64, 9002u);
  CHECK(other.flat != a.flat);

  CHECK_THROWS_AS(sample_paths(coin.sys, k, 1, 4, 1u), ConfigError);
  CHECK_THROWS_AS(sample_paths(coin.sys, k, 20, 4, 1u), IndexOutOfWindow);
}

TEST_CASE("coin sample statistics sit in the exact bands") {
  long n = 32;
  Model coin = make_model("coin", 40);
  RpfData rpf = rpf_solve(coin.sys, coin.potential);
  ForwardKernels k = forward_kernels(coin.sys, rpf, 36);
  SampleSet s = sample_paths(coin.sys, k, n, 100000, 4242u);

  // Symbol frequency within 3 sigma of 1/2 (binomial concentration).
  std::int64_t ones = 0;
  for (std::uint8_t v : s.flat) ones += v;
  Real freq = static_cast<Real>(ones) / static_cast<Real>(s.flat.size());
  CHECK(std::abs(freq - 0.5) < 0.005);

  FnR q0 = unit_density(coin.sys);
  Moments mom = sum_moments(coin.sys, rpf, coin.observable, q0, n);
  std::vector<Real> t = {kPi, 1.0};
  std::vector<Complex> phi = {Complex(0.0, 0.0),
                              char_fn(coin.sys, rpf, coin.observable, q0, n, 1.0)};
  PmfTable pmf = lattice_pmf(coin.sys, rpf, coin.observable, q0, n);
  EmpiricalReport rep = empirical_check(coin.sys, s, coin.observable, mom, t, phi, &pmf);

  CHECK(rep.ok());
  CHECK(rep.n_terms == n);
  CHECK(std::abs(rep.phi_emp[0]) <= rep.phi_band);
  CHECK(std::abs(rep.mean_emp - 16.0) < rep.mean_band);
  // Central cell compared against the exact binomial mass.
  std::size_t mid = static_cast<std::size_t>(16 - pmf.u_min);
  CHECK(std::abs(rep.pmf_emp[mid] - rep.pmf_exact[mid]) <= rep.pmf_band[mid]);
}

TEST_CASE("golden-mean samples avoid 11 and match cylinder masses") {
  Model gold = make_model("golden_parry", 26);
  RpfData rpf = rpf_solve(gold.sys, gold.potential);
  ForwardKernels k = forward_kernels(gold.sys, rpf, 24);
  SampleSet s = sample_paths(gold.sys, k, 24, 100000, 777u);

  std::int64_t forbidden = 0;
  for (std::int64_t i = 0; i < s.count; ++i) {
    const std::uint8_t* p = s.path(i);
    for (long j = 0; j + 1 < s.n; ++j) forbidden += p[j] & p[j + 1];
  }
  CHECK(forbidden == 0);

  // All cylinders of length <= 3 at an initial and an interior base, 4 sigma.
  Real rootN = std::sqrt(static_cast<Real>(s.count));
  for (long base : {0L, 5L}) {
    for (int L = 1; L <= 3; ++L) {
      auto ws = gold.sys.words(base, L);
      for (std::int64_t i = 0; i < ws->count(); ++i) {
        Word w = ws->word_at(i);
        Real exact = cylinder_measure(gold.sys, rpf, w);
        Real band = 4.0 * std::sqrt(exact * (1.0 - exact)) / rootN;
        CHECK(std::abs(cylinder_freq(s, w) - exact) <= band);
      }
    }
  }
}

TEST_CASE("empirical check flags planted disagreements") {
  Model coin = make_model("coin", 16);
  RpfData rpf = rpf_solve(coin.sys, coin.potential);
  ForwardKernels k = forward_kernels(coin.sys, rpf, 12);
  SampleSet s = sample_paths(coin.sys, k, 12, 20000, 31u);
  FnR q0 = unit_density(coin.sys);
  Moments mom = sum_moments(coin.sys, rpf, coin.observable, q0, 12);

  EmpiricalReport good = empirical_check(coin.sys, s, coin.observable, mom, {kPi},
                                         {Complex(0.0, 0.0)});
  CHECK(good.ok());

  EmpiricalReport bad_phi = empirical_check(coin.sys, s, coin.observable, mom, {kPi},
                                            {Complex(0.5, 0.0)});
  CHECK_FALSE(bad_phi.ok());

  Moments wrong = mom;
  wrong.mean += 1.0;
  EmpiricalReport bad_mean = empirical_check(coin.sys, s, coin.observable, wrong, {kPi},
                                             {Complex(0.0, 0.0)});
  CHECK_FALSE(bad_mean.ok());

  CHECK_THROWS_AS(empirical_check(coin.sys, s, coin.observable, mom, {kPi}, {}), ConfigError);
}
