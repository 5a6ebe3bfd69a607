#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "seqsft/decomp.hpp"

using namespace seqsft;
using namespace seqsft::testing;

namespace {

FnSeq log_half_potential(const ValidatedSystem& sys, long count) {
  return constant_seq(sys, count, make_constant<Real>(sys, 0, 1, -std::log(2.0)));
}

// 2-state kernel potential phi_j(x) = ln p(x_0, x_1).
FnSeq markov_potential(const ValidatedSystem& sys, long count, const MatrixR& p) {
  FnR f = make_constant<Real>(sys, 0, 2, 0.0);
  for (std::int64_t i = 0; i < f.words->count(); ++i)
    f.values[i] = std::log(p(f.words->word(i)[0], f.words->word(i)[1]));
  return constant_seq(sys, count, f);
}

FnR first_symbol(const ValidatedSystem& sys, long j) {
  FnR f = make_constant<Real>(sys, j, 1, 0.0);
  for (std::int64_t i = 0; i < f.words->count(); ++i)
    f.values[i] = static_cast<Real>(f.words->word(i)[0]);
  return f;
}

// b_j - b_{j+1} o T_j for a fixed depth-1 profile, rebased periodically.
FnSeq coboundary_seq(const ValidatedSystem& sys, Real v0, Real v1) {
  FnR b0 = make_constant<Real>(sys, 0, 1, 0.0);
  b0.values[0] = v0;
  b0.values[1] = v1;
  FnR b1 = b0;
  b1.base = 1;
  b1.words = sys.words(1, 1);
  FnR f0 = sub(sys, embed(sys, b0, 2), shift_pullback(sys, b1, 1));
  return constant_seq(sys, 1, f0);
}

struct BruteMoments {
  Real mean = 0, var = 0, third = 0;
};

// Direct path enumeration for a 2-state chain: initial law r, kernel p,
// statistic S = sum of per-step values given by eval(word, j).
template <class Eval>
BruteMoments brute_chain_moments(const MatrixR& p, Real r0, int length, int n_terms,
                                 Eval eval) {
  BruteMoments out;
  Real m1 = 0, m2 = 0, m3 = 0;
  for (int mask = 0; mask < (1 << length); ++mask) {
    std::vector<int> w(static_cast<std::size_t>(length));
    for (int k = 0; k < length; ++k) w[static_cast<std::size_t>(k)] = (mask >> k) & 1;
    Real prob = w[0] == 0 ? r0 : 1.0 - r0;
    for (int k = 0; k + 1 < length; ++k)
      prob *= p(w[static_cast<std::size_t>(k)], w[static_cast<std::size_t>(k + 1)]);
    Real s = 0;
    for (int j = 0; j < n_terms; ++j) s += eval(w, j);
    m1 += prob * s;
    m2 += prob * s * s;
    m3 += prob * s * s * s;
  }
  out.mean = m1;
  out.var = m2 - m1 * m1;
  out.third = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
  return out;
}

}  // namespace

TEST_CASE("center subtracts the exact marginal means") {
  MatrixR p(2, 2);
  p << 0.3, 0.7, 0.6, 0.4;
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, markov_potential(sys, 1, p));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  CenterResult cc = center(sys, rpf, f, 8);
  Real pi1 = p(0, 1) / (p(0, 1) + p(1, 0));  // stationary mass of symbol 1
  REQUIRE(cc.means.size() == 8);
  for (Real m : cc.means) CHECK(m == doctest::Approx(pi1).epsilon(1e-9));
  for (long j = 0; j < 8; ++j)
    CHECK(std::abs(rpf.mu_at(j).weights.dot(embed(sys, cc.centered.at(sys, j), 2).values)) <
          1e-14);
}

TEST_CASE("decomposition kills the operator exactly and reconstructs the input") {
  ValidatedSystem sys = random_system(5, 24, 3, 2);
  FnSeq phi, f;
  for (long j = 0; j < 24; ++j) {
    phi.entries.push_back(scale(random_fn(sys, j, 2, 100 + static_cast<std::uint64_t>(j)), 0.5));
    f.entries.push_back(random_fn(sys, j, 2, 900 + static_cast<std::uint64_t>(j)));
  }
  RpfData rpf = rpf_solve(sys, phi);
  CenterResult cc = center(sys, rpf, f, 24);
  DecompResult dec = martingale_coboundary(sys, rpf, cc.centered, 20);

  REQUIRE(dec.A.size() == 20);
  REQUIRE(dec.B.size() == 21);
  CHECK(sup_norm(dec.B[0]) == 0.0);
  for (std::size_t j = 0; j < 20; ++j) {
    CHECK(dec.identity_residual[j] <= 1e-12);
    CHECK(dec.martingale_residual[j] <= 1e-12);
    CHECK(std::abs(integrate(sys, rpf, dec.A[j])) <= 1e-10);
    CHECK(dec.var_A[j] >= -1e-15);
  }
  CHECK(std::isfinite(dec.sup_star_A));
  CHECK(std::isfinite(dec.sup_star_B));

  SUBCASE("variance of the Birkhoff sum splits over the martingale part") {
    // Exact orthogonality: Var(S_20) = sum var_A_j + Var_{mu_20}(B_20).
    FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
    Moments mm = sum_moments(sys, rpf, cc.centered, q0, 20);
    Real acc = 0;
    for (Real v : dec.var_A) acc += v;
    Real b1 = integrate(sys, rpf, dec.B[20]);
    Real b2 = integrate(sys, rpf, mul(sys, dec.B[20], dec.B[20]));
    CHECK(mm.variance == doctest::Approx(acc + (b2 - b1 * b1)).epsilon(1e-9));
    CHECK(std::abs(mm.mean) <= 1e-10);
  }
}

TEST_CASE("decomposition input must be centered and fit the window") {
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq raw = constant_seq(sys, 1, first_symbol(sys, 0));
  CHECK_THROWS_AS(martingale_coboundary(sys, rpf, raw, 8), DecompositionInvalid);
  CenterResult cc = center(sys, rpf, raw, 8);
  CHECK_THROWS_AS(martingale_coboundary(sys, rpf, cc.centered, 9), IndexOutOfWindow);
}

TEST_CASE("fair-coin moments at n = 16 are 8, 4, 0") {
  ValidatedSystem sys = full_shift(20);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
  Moments m = sum_moments(sys, rpf, f, q0, 16);
  CHECK(m.mean == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(m.variance == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(m.third_central) <= 1e-12);  // binomial symmetry, no cancellation loss
  CHECK(m.sigma() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("chain moments match direct path enumeration") {
  MatrixR p(2, 2);
  p << 0.3, 0.7, 0.6, 0.4;
  Real pi0 = p(1, 0) / (p(0, 1) + p(1, 0));
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, markov_potential(sys, 1, p));

  SUBCASE("depth-1 statistic, stationary start") {
    FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
    FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
    Moments m = sum_moments(sys, rpf, f, q0, 3);
    BruteMoments b = brute_chain_moments(p, pi0, 3, 3, [](const std::vector<int>& w, int j) {
      return static_cast<Real>(w[static_cast<std::size_t>(j)]);
    });
    CHECK(m.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(b.var).epsilon(1e-12));
    CHECK(m.third_central == doctest::Approx(b.third).epsilon(1e-11));
  }

  SUBCASE("depth-2 statistic counts equal neighbours") {
    FnR f0 = make_constant<Real>(sys, 0, 2, 0.0);
    for (std::int64_t i = 0; i < f0.words->count(); ++i)
      f0.values[i] = f0.words->word(i)[0] == f0.words->word(i)[1] ? 1.0 : 0.0;
    FnSeq f = constant_seq(sys, 1, f0);
    FnR q0 = make_constant<Real>(sys, 0, 1, 1.0);
    Moments m = sum_moments(sys, rpf, f, q0, 3);
    BruteMoments b = brute_chain_moments(p, pi0, 4, 3, [](const std::vector<int>& w, int j) {
      return w[static_cast<std::size_t>(j)] == w[static_cast<std::size_t>(j + 1)] ? 1.0 : 0.0;
    });
    CHECK(m.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(b.var).epsilon(1e-12));
    CHECK(m.third_central == doctest::Approx(b.third).epsilon(1e-11));
  }

  SUBCASE("non-uniform start enters through the density q0") {
    Real r0 = 0.25;
    // Divide by the solved marginal, not the ideal one, so the initial law
    // is exactly r and the comparison probes the recursion alone.
    Real hat0 = 0.0;
    const FunctionalR& mu0 = rpf.mu_at(0);
    FnR probe = make_constant<Real>(sys, 0, 2, 0.0);
    for (std::int64_t i = 0; i < probe.words->count(); ++i)
      if (probe.words->word(i)[0] == 0) hat0 += mu0.weights[i];
    FnR q0 = make_constant<Real>(sys, 0, 1, 0.0);
    q0.values[0] = r0 / hat0;
    q0.values[1] = (1.0 - r0) / (1.0 - hat0);
    FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
    Moments m = sum_moments(sys, rpf, f, q0, 3);
    BruteMoments b = brute_chain_moments(p, r0, 3, 3, [](const std::vector<int>& w, int j) {
      return static_cast<Real>(w[static_cast<std::size_t>(j)]);
    });
    CHECK(m.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(b.var).epsilon(1e-12));
    CHECK(m.third_central == doctest::Approx(b.third).epsilon(1e-11));
  }
}

TEST_CASE("sum_moments rejects bad densities") {
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  FnR neg = make_constant<Real>(sys, 0, 1, 1.0);
  neg.values[0] = -0.5;
  neg.values[1] = 2.5;  // still integrates to 1
  CHECK_THROWS_AS(sum_moments(sys, rpf, f, neg, 4), BadDensity);
  FnR heavy = make_constant<Real>(sys, 0, 1, 2.0);
  CHECK_THROWS_AS(sum_moments(sys, rpf, f, heavy, 4), BadDensity);
  FnR shifted = make_constant<Real>(sys, 1, 1, 1.0);
  CHECK_THROWS_AS(sum_moments(sys, rpf, f, shifted, 4), BadDensity);
}

TEST_CASE("variance classifier: iid increments grow linearly") {
  ValidatedSystem sys = full_shift(520);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  VarianceEvidence ev = classify_variance(sys, rpf, f, {64, 144, 256, 400, 512});
  CHECK(ev.verdict == VarianceClass::Growing);
  CHECK(ev.slope == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(ev.r_squared >= 0.999);
  for (std::size_t i = 0; i < ev.n_grid.size(); ++i)
    CHECK(ev.sigma[i] ==
          doctest::Approx(0.5 * std::sqrt(static_cast<Real>(ev.n_grid[i]))).epsilon(1e-9));
}

TEST_CASE("variance classifier: pure coboundary stays bounded") {
  ValidatedSystem sys = full_shift(140);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  Real v0 = 0.4, v1 = -0.2;
  FnSeq f = coboundary_seq(sys, v0, v1);
  VarianceEvidence ev = classify_variance(sys, rpf, f, {16, 64, 128});
  CHECK(ev.verdict == VarianceClass::Bounded);
  CHECK(ev.tail_converges);
  Real sup_b = std::max(std::abs(v0), std::abs(v1));
  for (Real s : ev.sigma) CHECK(s <= 2.0 * sup_b + 1e-9);
  // The telescoped sum is b_0 - b_n o T^n up to centering, so the variance
  // must freeze after the first step.
  CHECK(ev.sigma[1] == doctest::Approx(ev.sigma[2]).epsilon(1e-9));
}

TEST_CASE("variance classifier: mixed term is dominated by the iid part") {
  ValidatedSystem sys = full_shift(520);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq cob = coboundary_seq(sys, 0.4, -0.2);
  FnR mixed0 = add(sys, embed(sys, first_symbol(sys, 0), 2), cob.at(sys, 0));
  FnSeq f = constant_seq(sys, 1, mixed0);
  VarianceEvidence ev = classify_variance(sys, rpf, f, {64, 144, 256, 400, 512});
  CHECK(ev.verdict == VarianceClass::Growing);
  CHECK(ev.slope > 0.2);
  CHECK(ev.slope < 0.3);
  CHECK(ev.r_squared >= 0.99);
}

TEST_CASE("variance classifier: short small grid is indeterminate") {
  ValidatedSystem sys = full_shift(20);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  VarianceEvidence ev = classify_variance(sys, rpf, f, {4, 9, 16});
  CHECK(ev.verdict == VarianceClass::Indeterminate);
  CHECK_FALSE(ev.tail_converges);
}
