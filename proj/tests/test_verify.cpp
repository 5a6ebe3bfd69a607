#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "seqsft/models.hpp"
#include "seqsft/verify.hpp"

using namespace seqsft;
using namespace seqsft::testing;

namespace {

FnR unit_density(const ValidatedSystem& sys) { return make_constant<Real>(sys, 0, 1, 1.0); }

FnR first_symbol(const ValidatedSystem& sys, long j) {
  FnR f = make_constant<Real>(sys, j, 1, 0.0);
  for (std::int64_t i = 0; i < f.words->count(); ++i)
    f.values[i] = static_cast<Real>(f.words->word(i)[0]);
  return f;
}

// Bernoulli(0.3) coordinates as a product chain; S_n is Binomial(n, 0.3).
Model bernoulli_third(long window) {
  MatrixR p(2, 2);
  p << 0.7, 0.3, 0.7, 0.3;
  VectorR initial(2);
  initial << 0.7, 0.3;
  return from_markov_chain({p}, initial, window);
}

}  // namespace

// Frozen against an exact 30-digit binomial computation of the same
// statistics (same t-grid, same threshold-inclusion cushion, same
// mid-lattice Edgeworth convention).
TEST_CASE("clt error matches the exact binomial values and shrinks") {
  Model m = make_model("coin", 404);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  Real e100 = clt_error(m.sys, rpf, m.observable, q0, 100);
  Real e400 = clt_error(m.sys, rpf, m.observable, q0, 400);
  CHECK(e100 == doctest::Approx(0.039794618693589381).epsilon(1e-6));
  CHECK(e400 == doctest::Approx(0.019934650981896464).epsilon(1e-6));
  CHECK(e400 < e100);

  FnSeq zero;
  zero.entries.push_back(make_constant<Real>(m.sys, 0, 1, 0.0));
  CHECK_THROWS_AS(clt_error(m.sys, rpf, zero, q0, 10), DegenerateVariance);
}

TEST_CASE("clt error on a non-lattice observable uses the smoothed branch") {
  Model m = make_model("irr_sqrt2", 104);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  Real e = clt_error(m.sys, rpf, m.observable, unit_density(m.sys), 100);
  CHECK(e < 0.1);
  CHECK(e > 0.0);
}

TEST_CASE("lattice local limit error matches the exact binomial values") {
  Model m = make_model("coin", 204);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  Real e50 = lattice_llt_error(m.sys, rpf, m.observable, q0, 50);
  Real e200 = lattice_llt_error(m.sys, rpf, m.observable, q0, 200);
  CHECK(e50 == doctest::Approx(0.0049871892954451807).epsilon(1e-6));
  CHECK(e200 == doctest::Approx(0.0012492138737481789).epsilon(1e-6));
  CHECK(e200 < e50);
  CHECK(e200 <= 0.02);
}

TEST_CASE("lattice statistic rejects wrong spans unless overridden") {
  Model m = make_model("coin", 68);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  FnSeq doubled;
  doubled.entries.push_back(scale(first_symbol(m.sys, 0), 2.0));
  CHECK_THROWS_AS(lattice_llt_error(m.sys, rpf, doubled, q0, 64), SpanMismatch);

  // Forcing span 1 on a span-2 observable leaves empty odd cells, so the
  // statistic blows up instead of silently passing.
  Real forced = lattice_llt_error(m.sys, rpf, doubled, q0, 64, true);
  CHECK(forced > 0.5);

  Model irr = make_model("irr_sqrt2", 68);
  RpfData rpf2 = rpf_solve(irr.sys, irr.potential);
  CHECK_THROWS_AS(lattice_llt_error(irr.sys, rpf2, irr.observable, unit_density(irr.sys), 64),
                  SpanMismatch);
}

TEST_CASE("edgeworth error is bounded on a skewed chain and zero-correction on coin") {
  Model b = bernoulli_third(260);
  RpfData rpf = rpf_solve(b.sys, b.potential);
  FnR q0 = unit_density(b.sys);

  Real v64 = edgeworth_error(b.sys, rpf, b.observable, q0, 64);
  Real v144 = edgeworth_error(b.sys, rpf, b.observable, q0, 144);
  Real v256 = edgeworth_error(b.sys, rpf, b.observable, q0, 256);
  CHECK(v64 == doctest::Approx(0.048475758091256904).epsilon(1e-6));
  CHECK(v144 == doctest::Approx(0.049025244155837085).epsilon(1e-6));
  CHECK(v256 == doctest::Approx(0.049559241876014252).epsilon(1e-6));
  CHECK(v64 <= 0.06);
  CHECK(v144 <= 0.06);
  CHECK(v256 <= 0.06);
  CHECK(v256 <= 1.1 * v64);

  Model c = make_model("coin", 68);
  RpfData rpfc = rpf_solve(c.sys, c.potential);
  Moments mom = sum_moments(c.sys, rpfc, c.observable, unit_density(c.sys), 64);
  CHECK(std::abs(mom.third_central) <= 1e-12);
  Real vc = edgeworth_error(c.sys, rpfc, c.observable, unit_density(c.sys), 64);
  CHECK(vc == doctest::Approx(0.001703067927047035).epsilon(1e-6));

  Model irr = make_model("irr_sqrt2", 68);
  RpfData rpfi = rpf_solve(irr.sys, irr.potential);
  CHECK_THROWS_AS(edgeworth_error(irr.sys, rpfi, irr.observable, unit_density(irr.sys), 64),
                  NotIntegerValued);
}

TEST_CASE("nonlattice local limit error contracts for the irrational observable") {
  Model m = make_model("irr_sqrt2", 260);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  Real e64 = nonlattice_llt_error(m.sys, rpf, m.observable, q0, 64, 8.0);
  Real e256 = nonlattice_llt_error(m.sys, rpf, m.observable, q0, 256, 8.0);
  CHECK(e256 <= 0.7 * e64);
  CHECK(e256 < 0.1);

  CHECK_THROWS_AS(nonlattice_llt_error(m.sys, rpf, m.observable, q0, 4, 8.0),
                  DegenerateVariance);
}

TEST_CASE("smoothing window dichotomy on the lattice coin") {
  Model m = make_model("coin", 260);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  // A window wide enough to see the 2 pi resonance reports a large error;
  // a window short of 2 pi is blind to the lattice and reports the plain
  // local limit, so the same statistic separates the two regimes.
  Real wide = nonlattice_llt_error(m.sys, rpf, m.observable, q0, 256, 8.0);
  Real narrow = nonlattice_llt_error(m.sys, rpf, m.observable, q0, 256, 6.0);
  CHECK(wide >= 0.1);
  CHECK(narrow <= 0.05);
}

TEST_CASE("reducible local limit error on the certified fixture") {
  Model m = make_model("red_fixture", 224);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);
  const ReducibleFixture& fx = *m.reducible;

  Real e50 = reducible_llt_error(m.sys, rpf, fx, q0, 50);
  Real e100 = reducible_llt_error(m.sys, rpf, fx, q0, 100);
  Real e200 = reducible_llt_error(m.sys, rpf, fx, q0, 200);
  CHECK(e200 <= 0.05);
  CHECK(e100 < e50);
  CHECK(e200 < e100);
  CHECK(trend_to_zero({50, 100, 200}, {e50, e100, e200}, 0.05));

  CHECK_THROWS_AS(reducible_llt_error(m.sys, rpf, fx, q0, 300), IndexOutOfWindow);
  CHECK_THROWS_AS(reducible_llt_error(m.sys, rpf, fx, q0, 8), DegenerateVariance);
}

TEST_CASE("reducible certification rejects corrupted decompositions") {
  Model m = make_model("red_fixture", 64);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  ReducibleFixture bad_z = *m.reducible;
  bad_z.z.entries[0] = scale(first_symbol(m.sys, 0), 0.5);
  CHECK_THROWS_AS(reducible_llt_error(m.sys, rpf, bad_z, q0, 40), DecompositionInvalid);

  ReducibleFixture bad_m = *m.reducible;
  bad_m.martingale.entries[0].values.array() += 0.1;
  CHECK_THROWS_AS(reducible_llt_error(m.sys, rpf, bad_m, q0, 40), DecompositionInvalid);

  ReducibleFixture bad_g = *m.reducible;
  bad_g.g.entries[0].values[0] += 0.01;
  CHECK_THROWS_AS(reducible_llt_error(m.sys, rpf, bad_g, q0, 40), DecompositionInvalid);
}

TEST_CASE("pure lattice fixture agrees with the lattice statistic") {
  ValidatedSystem sys = full_shift(224);
  FnSeq phi = constant_seq(sys, 1, make_constant<Real>(sys, 0, 1, -std::log(2.0)));
  RpfData rpf = rpf_solve(sys, phi);
  FnR q0 = unit_density(sys);

  FnSeq g, z;
  g.entries.push_back(make_constant<Real>(sys, 0, 1, 0.0));
  z.entries.push_back(first_symbol(sys, 0));
  std::vector<Real> c(223, 0.0);
  ReducibleFixture fx = reducible_fixture(sys, rpf, g, z, c, 1.0, 223);

  Real e50 = reducible_llt_error(sys, rpf, fx, q0, 50);
  Real e200 = reducible_llt_error(sys, rpf, fx, q0, 200);
  CHECK(e200 <= 0.05);
  CHECK(e200 < e50);
  // Same observable through the exact probability route.
  CHECK(lattice_llt_error(sys, rpf, fx.f, q0, 200) <= 0.02);
}

TEST_CASE("monte carlo martingale law agrees with the exhaustive one") {
  ValidatedSystem sys = full_shift(128);
  FnSeq phi = constant_seq(sys, 1, make_constant<Real>(sys, 0, 1, -std::log(2.0)));
  RpfData rpf = rpf_solve(sys, phi);
  FnR q0 = unit_density(sys);

  FnSeq g, z;
  g.entries.push_back(scale(first_symbol(sys, 0), 0.3));
  z.entries.push_back(first_symbol(sys, 0));
  std::vector<Real> c;
  for (long j = 0; j < 120; ++j) c.push_back(std::pow(0.6, static_cast<Real>(j)));
  ReducibleFixture fx = reducible_fixture(sys, rpf, g, z, c, 1.0, 120);

  Real exact = reducible_llt_error(sys, rpf, fx, q0, 100);
  Real mc = reducible_llt_error(sys, rpf, fx, q0, 100, 8.0, 200000);
  CHECK(std::abs(mc - exact) <= 0.01);
  CHECK(exact <= 0.05);

  // Slowly decaying weights push the truncation depth past the word-table
  // limit, which demands an explicit Monte Carlo budget.
  std::vector<Real> slow;
  for (long j = 0; j < 120; ++j) slow.push_back(std::pow(0.9, static_cast<Real>(j)));
  ReducibleFixture fx_slow = reducible_fixture(sys, rpf, g, z, slow, 1.0, 120);
  CHECK_THROWS_AS(reducible_llt_error(sys, rpf, fx_slow, q0, 100), RangeOverflow);
}

TEST_CASE("trend verdicts") {
  CHECK(trend_to_zero({50, 100, 200}, {0.04, 0.03, 0.021}, 0.001));
  CHECK_FALSE(trend_to_zero({50, 100, 200}, {0.04, 0.039, 0.038}, 0.001));
  CHECK(trend_to_zero({50, 100, 200}, {0.04, 0.039, 0.038}, 0.05));
  CHECK_THROWS_AS(trend_to_zero({50, 100}, {0.1, 0.05}, 0.01), ConfigError);
  CHECK_THROWS_AS(trend_to_zero({50, 50, 100}, {0.1, 0.05, 0.02}, 0.01), ConfigError);
  CHECK_THROWS_AS(trend_to_zero({50, 60, 70}, {0.1, 0.09, 0.08}, 0.01), ConfigError);
}

TEST_CASE("report gathers statistics and skips inapplicable cells") {
  Model m = make_model("coin", 132);
  RpfData rpf = rpf_solve(m.sys, m.potential);
  FnR q0 = unit_density(m.sys);

  LltReport rep = llt_report(m.sys, rpf, m.observable, q0, {16, 64, 128}, {8.0});
  REQUIRE(rep.n_grid.size() == 3);
  REQUIRE(rep.clt.size() == 3);
  REQUIRE(rep.lattice.size() == 3);
  REQUIRE(rep.nonlattice.size() == 1);
  REQUIRE(rep.edgeworth.size() == 3);
  CHECK(rep.reducible.empty());

  // sigma(16) = 2 sits below the local-limit gate but above the CLT gate.
  CHECK(rep.sigma[0] == doctest::Approx(2.0));
  CHECK(std::isfinite(rep.clt[0]));
  CHECK(std::isfinite(rep.lattice[0]));
  CHECK(!std::isfinite(rep.nonlattice[0][0]));
  CHECK(!std::isfinite(rep.edgeworth[0]));
  CHECK(std::isfinite(rep.nonlattice[0][2]));
  CHECK(std::isfinite(rep.edgeworth[2]));

  bool saw_clt = false, saw_lattice = false;
  for (const auto& [name, verdict] : rep.trends) {
    if (name == "clt") {
      saw_clt = true;
      CHECK(verdict);
    }
    if (name == "lattice") {
      saw_lattice = true;
      CHECK(verdict);
    }
    CHECK(name != "edgeworth bounded");  // only two finite cells
  }
  CHECK(saw_clt);
  CHECK(saw_lattice);
}
