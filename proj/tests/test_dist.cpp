#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "common.hpp"
#include "seqsft/decomp.hpp"
#include "seqsft/dist.hpp"

using namespace seqsft;
using namespace seqsft::testing;

namespace {

FnSeq log_half_potential(const ValidatedSystem& sys, long count) {
  return constant_seq(sys, count, make_constant<Real>(sys, 0, 1, -std::log(2.0)));
}

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

FnR unit_density(const ValidatedSystem& sys) { return make_constant<Real>(sys, 0, 1, 1.0); }

// Closed form of the kernel whose Fourier transform is the unit tent on
// [-T0, T0]: g(x) = (1 - cos(T0 x)) / (pi T0 x^2), g(0) = T0 / (2 pi).
Real tent_kernel(Real T0, Real x) {
  if (std::abs(x) < 1e-8) return T0 / (2.0 * kPi);
  return (1.0 - std::cos(T0 * x)) / (kPi * T0 * x * x);
}

// Chain path law for a first-symbol Birkhoff sum: exact stationary start,
// independent of the transfer-operator machinery.
std::map<long long, Real> brute_chain_pmf(const MatrixR& p, long n) {
  Eigen::Vector2d pi_{p(1, 0) / (p(0, 1) + p(1, 0)), p(0, 1) / (p(0, 1) + p(1, 0))};
  std::map<long long, Real> law;
  long paths = 1l << (n + 1);
  for (long bits = 0; bits < paths; ++bits) {
    Real w = pi_[bits & 1];
    long long s = 0;
    for (long j = 0; j < n; ++j) {
      int a = (bits >> j) & 1, b = (bits >> (j + 1)) & 1;
      w *= p(a, b);
      s += a;
    }
    law[s] += w;
  }
  return law;
}

}  // namespace

TEST_CASE("characteristic function pins on the fair coin") {
  ValidatedSystem sys = full_shift(12);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  FnR q0 = unit_density(sys);

  CHECK(std::abs(char_fn(sys, rpf, f, q0, 7, 0.0) - Complex(1.0, 0.0)) <= 1e-9);
  // ((1 + i)/2)^2 = i/2.
  CHECK(std::abs(char_fn(sys, rpf, f, q0, 2, kPi / 2.0) - Complex(0.0, 0.5)) <= 1e-12);
  for (long n : {1l, 2l, 5l})
    CHECK(std::abs(char_fn(sys, rpf, f, q0, n, kPi)) <= 1e-12);
  // tools/oracles/gen_fejer.py: ((1 + e^i)/2)^3.
  Complex pin(0.047809238920318317, 0.67417815537007523);
  CHECK(std::abs(char_fn(sys, rpf, f, q0, 3, 1.0) - pin) <= 1e-12);
}

TEST_CASE("characteristic function invariants on a random system") {
  ValidatedSystem sys = random_system(11, 10, 3, 2);
  FnSeq phi, f;
  for (long j = 0; j < 10; ++j) {
    phi.entries.push_back(scale(random_fn(sys, j, 2, 60 + static_cast<std::uint64_t>(j)), 0.3));
    f.entries.push_back(random_fn(sys, j, 2, 600 + static_cast<std::uint64_t>(j)));
  }
  RpfData rpf = rpf_solve(sys, phi);
  FnR q0 = unit_density(sys);

  CHECK(std::abs(char_fn(sys, rpf, f, q0, 10, 0.0) - Complex(1.0, 0.0)) <= 1e-9);
  for (Real t : {0.3, 1.7, 5.2}) {
    Complex plus = char_fn(sys, rpf, f, q0, 8, t);
    Complex minus = char_fn(sys, rpf, f, q0, 8, -t);
    CHECK(std::abs(plus) <= 1.0 + 1e-12);
    CHECK(std::abs(minus - std::conj(plus)) <= 1e-12);
  }

  std::vector<Real> grid = {0.0, 0.4, 1.1, 2.9};
  CharFnCurve curve = char_fn_curve(sys, rpf, f, q0, 8, grid, 1);
  CharFnCurve curve3 = char_fn_curve(sys, rpf, f, q0, 8, grid, 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(curve.phi[i] - char_fn(sys, rpf, f, q0, 8, grid[i])) <= 1e-14);
    CHECK(curve.phi[i] == curve3.phi[i]);
  }

  FnR bad = make_constant<Real>(sys, 0, 1, 0.5);
  CHECK_THROWS_AS(char_fn(sys, rpf, f, bad, 4, 1.0), BadDensity);
  FnR shifted = make_constant<Real>(sys, 1, 1, 1.0);
  CHECK_THROWS_AS(char_fn(sys, rpf, f, shifted, 4, 1.0), BadDensity);
  CHECK_THROWS_AS(char_fn(sys, rpf, f, q0, 11, 1.0), IndexOutOfWindow);
}

TEST_CASE("coin PMF at n = 4 is binomial") {
  ValidatedSystem sys = full_shift(12);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  PmfTable pmf = lattice_pmf(sys, rpf, f, unit_density(sys), 4);

  CHECK(pmf.u_min == 0);
  CHECK(pmf.mass.size() == 5);
  Real binom[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  for (long long u = 0; u <= 4; ++u) CHECK(std::abs(pmf.at(u) - binom[u]) <= 1e-12);
  CHECK(std::abs(pmf.at(2) - 0.375) <= 1e-12);
  CHECK(std::abs(pmf.mass_sum - 1.0) <= 1e-9);
  CHECK(pmf.clip_residual <= 1e-10);
  CHECK(pmf.at(-1) == 0.0);
  CHECK(pmf.at(5) == 0.0);
}

TEST_CASE("constant observable gives a point mass") {
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, make_constant<Real>(sys, 0, 1, 3.0));
  PmfTable pmf = lattice_pmf(sys, rpf, f, unit_density(sys), 5);
  CHECK(pmf.mass.size() == 1);
  CHECK(pmf.u_min == 15);
  CHECK(std::abs(pmf.at(15) - 1.0) <= 1e-12);
}

TEST_CASE("Markov PMF matches the exhaustive path law") {
  MatrixR p(2, 2);
  p << 0.3, 0.7, 0.6, 0.4;
  ValidatedSystem sys = full_shift(16);
  RpfData rpf = rpf_solve(sys, markov_potential(sys, 1, p));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  PmfTable pmf = lattice_pmf(sys, rpf, f, unit_density(sys), 3);

  std::map<long long, Real> law = brute_chain_pmf(p, 3);
  CHECK(pmf.mass.size() == 4);
  for (long long u = 0; u <= 3; ++u) CHECK(std::abs(pmf.at(u) - law[u]) <= 1e-12);
}

TEST_CASE("PMF round trip and moment consistency") {
  ValidatedSystem sys = random_system(17, 12, 3, 2);
  FnSeq phi, f;
  for (long j = 0; j < 12; ++j) {
    phi.entries.push_back(scale(random_fn(sys, j, 2, 70 + static_cast<std::uint64_t>(j)), 0.3));
    FnR g_ = random_fn(sys, j, 2, 700 + static_cast<std::uint64_t>(j));
    for (std::int64_t i = 0; i < g_.values.size(); ++i)
      g_.values[i] = std::round(3.0 * g_.values[i]);
    f.entries.push_back(g_);
  }
  RpfData rpf = rpf_solve(sys, phi);
  FnR q0 = unit_density(sys);
  long n = 6;
  PmfTable pmf = lattice_pmf(sys, rpf, f, q0, n);

  CHECK(std::abs(pmf.mass_sum - 1.0) <= 1e-9);
  CHECK(pmf.clip_residual <= 1e-10);

  long long V = static_cast<long long>(pmf.mass.size());
  for (long long k = 0; k < V; ++k) {
    Real t = 2.0 * kPi * static_cast<Real>(k) / static_cast<Real>(V);
    Complex dft(0.0, 0.0);
    for (Eigen::Index i = 0; i < pmf.mass.size(); ++i) {
      Real u = static_cast<Real>(pmf.u_min) + static_cast<Real>(i);
      dft += pmf.mass[i] * Complex(std::cos(t * u), std::sin(t * u));
    }
    CHECK(std::abs(dft - char_fn(sys, rpf, f, q0, n, t)) <= 1e-9);
  }

  Moments m = sum_moments(sys, rpf, f, q0, n);
  CHECK(std::abs(pmf.mean() - m.mean) <= 1e-8);
  CHECK(std::abs(pmf.variance() - m.variance) <= 1e-8);
}

TEST_CASE("PMF rejects non-integer values and oversized ranges") {
  ValidatedSystem sys = full_shift(8);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnR half = make_constant<Real>(sys, 0, 1, 0.0);
  half.values[1] = 0.5;
  CHECK_THROWS_AS(lattice_pmf(sys, rpf, constant_seq(sys, 1, half), unit_density(sys), 4),
                  NotIntegerValued);
  FnR wide = make_constant<Real>(sys, 0, 1, 0.0);
  wide.values[1] = 131072.0;
  CHECK_THROWS_AS(lattice_pmf(sys, rpf, constant_seq(sys, 1, wide), unit_density(sys), 8),
                  RangeOverflow);
}

TEST_CASE("smoothed density pins and closed-form cross-check") {
  ValidatedSystem sys = full_shift(10);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnR q0 = unit_density(sys);

  // Zero observable: point mass at 0, value is the kernel peak T0/(2 pi).
  FnSeq zero = constant_seq(sys, 1, make_constant<Real>(sys, 0, 1, 0.0));
  for (Real T0 : {1.0, 8.0}) {
    DensityTable d = smoothed_density(sys, rpf, zero, q0, 6, T0, {0.0});
    CHECK(std::abs(d.value[0] - T0 / (2.0 * kPi)) <= 1e-9);
  }

  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  // tools/oracles/gen_fejer.py: (1 + 2(1 - cos 1)) / (4 pi).
  DensityTable one = smoothed_density(sys, rpf, f, q0, 1, 1.0, {0.0});
  CHECK(std::abs(one.value[0] - 0.1527406318949794) <= 1e-9);
  // tools/oracles/gen_fejer.py: quadrature pin at n = 4, u = 2, T0 = 8.
  DensityTable four = smoothed_density(sys, rpf, f, q0, 4, 8.0, {2.0});
  CHECK(std::abs(four.value[0] - 0.50268797823088415) <= 1e-6);

  // Against the exact PMF convolved with the closed-form kernel.
  PmfTable pmf = lattice_pmf(sys, rpf, f, q0, 4);
  std::vector<Real> us = {0.0, 1.3, 3.7};
  DensityTable d2 = smoothed_density(sys, rpf, f, q0, 4, 2.0, us);
  for (std::size_t i = 0; i < us.size(); ++i) {
    Real exact = 0.0;
    for (Eigen::Index m = 0; m < pmf.mass.size(); ++m) {
      Real u = static_cast<Real>(pmf.u_min) + static_cast<Real>(m);
      exact += pmf.mass[m] * tent_kernel(2.0, u - us[i]);
    }
    CHECK(std::abs(d2.value[static_cast<Eigen::Index>(i)] - exact) <= 1e-6);
  }

  CHECK_THROWS_AS(smoothed_density(sys, rpf, f, q0, 4, 0.0, {0.0}), ConfigError);
}

TEST_CASE("smoothed density is nonnegative and decays far from the support") {
  ValidatedSystem sys = full_shift(10);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  FnR q0 = unit_density(sys);

  std::vector<Real> grid;
  for (Real u = -2.0; u <= 10.0; u += 0.5) grid.push_back(u);
  DensityTable d = smoothed_density(sys, rpf, f, q0, 8, 8.0, grid);
  for (Eigen::Index i = 0; i < d.value.size(); ++i) CHECK(d.value[i] >= -1e-6);

  // Kernel tail 2/(pi T0 x^2) at distance >= 46 from the support.
  DensityTable far = smoothed_density(sys, rpf, f, q0, 4, 8.0, {50.0});
  CHECK(std::abs(far.value[0]) <= 1e-4);
}

TEST_CASE("resonance frequencies keep unit modulus and others contract") {
  ValidatedSystem sys = full_shift(20);
  RpfData rpf = rpf_solve(sys, log_half_potential(sys, 1));
  FnSeq f = constant_seq(sys, 1, first_symbol(sys, 0));
  FnR q0 = unit_density(sys);

  // Span 1 lattice: 2 pi / a = 2 pi is a resonance at every n.
  for (long n : {4l, 9l, 16l})
    CHECK(std::abs(std::abs(char_fn(sys, rpf, f, q0, n, 2.0 * kPi)) - 1.0) <= 1e-12);
  for (Real t : {1.0, 2.0, 3.0}) CHECK(std::abs(char_fn(sys, rpf, f, q0, 16, t)) < 0.9);
}
