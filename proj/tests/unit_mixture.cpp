#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "pspinlab/mixture.hpp"

using pspin::BandMixture;
using pspin::Mixture;

namespace {

Mixture random_mixture(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> pmax_dist(2, 8);
    std::uniform_real_distribution<double> coef(0.0, 2.0);
    const int pmax = pmax_dist(gen);
    std::vector<double> c(pmax);
    for (auto& v : c) v = coef(gen);
    c[pmax - 1] = std::max(c[pmax - 1], 0.1);  // keep the top term alive
    return Mixture(c);
}

}  // namespace

TEST_CASE("xi_eval reproduces direct polynomial values") {
    const Mixture pure2 = Mixture::pure(2);
    CHECK(pure2.eval(0.5, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(pure2.eval(0.5, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pure2.eval(0.7, 2) == doctest::Approx(2.0).epsilon(1e-15));

    const Mixture pure3 = Mixture::pure(3);
    CHECK(pure3.eval(1.0, 1) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(pure3.eval(0.5, 2) == doctest::Approx(3.0).epsilon(1e-15));

    const Mixture m23({0.0, 1.0, 1.0});
    CHECK(m23.eval(1.0, 0) == doctest::Approx(2.0).epsilon(1e-15));

    // Terms with p < order drop out: gamma_1 contributes nothing to xi''.
    const Mixture with_p1({0.5, 1.0});
    CHECK(with_p1.eval(0.3, 2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(with_p1.eval(0.0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(pure2.eval(0.5, 3), std::invalid_argument);
}

TEST_CASE("first derivative matches central finite differences") {
    std::mt19937_64 gen(71);
    std::uniform_real_distribution<double> tdist(0.05, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        const Mixture m = random_mixture(gen);
        const double t = tdist(gen);
        const double h = 1e-6 * std::max(1.0, std::abs(t));
        const double fd = (m.eval(t + h) - m.eval(t - h)) / (2.0 * h);
        const double exact = m.d1(t);
        CHECK(fd == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("mixture validation") {
    CHECK_THROWS_AS(Mixture({}), std::invalid_argument);
    CHECK_THROWS_AS(Mixture({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Mixture({1.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(Mixture::from_pairs({{2, 1.0}, {2, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Mixture::from_pairs({{0, 1.0}}), std::invalid_argument);
}

TEST_CASE("pair serialization round-trips") {
    const Mixture m = Mixture::from_pairs({{2, 2.0}, {4, 1.0}});
    CHECK(m.coeff(2) == 2.0);
    CHECK(m.coeff(3) == 0.0);
    CHECK(m.coeff(4) == 1.0);
    const auto pairs = m.pairs();
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<int, double>{2, 2.0});
    CHECK(pairs[1] == std::pair<int, double>{4, 1.0});
    const Mixture back = Mixture::from_pairs(pairs);
    CHECK(back.coeffs() == m.coeffs());
}

TEST_CASE("band mixture values and exact zeros") {
    const Mixture pure2 = Mixture::pure(2);
    const BandMixture b = pspin::band_mixture(pure2, 0.5);
    // Pure 2-spin: xi_q(t) = (1-q)^2 t^2 symbolically.
    CHECK(b.eval(1.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b.eval(0.0) == 0.0);
    CHECK(b.d1(0.0) == 0.0);
    CHECK(b.d2(0.37) == doctest::Approx(2.0 * 0.25).epsilon(1e-14));

    // q = 0 with no linear term: the band mixture is xi itself.
    const Mixture m({0.0, 1.0, 0.5});
    const BandMixture b0 = pspin::band_mixture(m, 0.0);
    for (double t : {0.0, 0.3, 0.77, 1.0}) {
        CHECK(b0.eval(t) == doctest::Approx(m.eval(t)).epsilon(1e-14));
        CHECK(b0.d1(t) == doctest::Approx(m.d1(t)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(pspin::band_mixture(m, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(pspin::band_mixture(m, -0.1), std::invalid_argument);
}

TEST_CASE("band and restricted mixtures compose consistently") {
    std::mt19937_64 gen(72);
    std::uniform_real_distribution<double> qdist(0.0, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        const Mixture m = random_mixture(gen);
        const double q = qdist(gen);
        const BandMixture b = pspin::band_mixture(m, q);
        CHECK(b.eval(0.0) == 0.0);
        CHECK(b.d1(0.0) == 0.0);
        const double lhs = b.eval(1.0);
        const double rhs = m.eval(1.0) - m.eval(q) - m.d1(q) * (1.0 - q);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("restricted mixture scales coefficients by q^p") {
    const Mixture pure3 = Mixture::pure(3);
    CHECK(pspin::restricted_mixture(pure3, 0.5).coeff(3) == doctest::Approx(0.125));

    const Mixture m = Mixture::from_pairs({{2, 2.0}, {4, 1.0}});
    const Mixture r = pspin::restricted_mixture(m, 0.5);
    CHECK(r.coeff(2) == doctest::Approx(0.5));
    CHECK(r.coeff(4) == doctest::Approx(0.0625));

    const Mixture id = pspin::restricted_mixture(m, 1.0);
    CHECK(id.coeffs() == m.coeffs());

    CHECK_THROWS_AS(pspin::restricted_mixture(m, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pspin::restricted_mixture(m, -0.2), std::invalid_argument);
}

TEST_CASE("e_infinity closed form") {
    CHECK(pspin::e_infinity(2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(pspin::e_infinity(3) == doctest::Approx(1.632993161855452).epsilon(1e-14));
    double prev = pspin::e_infinity(2);
    for (int p = 3; p <= 64; ++p) {
        const double cur = pspin::e_infinity(p);
        CHECK(cur > prev);
        CHECK(cur < 2.0);
        prev = cur;
    }
    CHECK_THROWS_AS(pspin::e_infinity(1), std::invalid_argument);
}

TEST_CASE("alg_energy equals e_infinity for pure models") {
    for (int p = 2; p <= 8; ++p) {
        const double quad = pspin::alg_energy(Mixture::pure(p));
        CHECK(quad == doctest::Approx(pspin::e_infinity(p)).epsilon(1e-8));
    }
    CHECK(pspin::alg_energy(Mixture::pure(4)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
    CHECK_THROWS_AS(pspin::alg_energy(Mixture::pure(1)), std::invalid_argument);
}

TEST_CASE("full-rsb candidate check") {
    const auto flat = pspin::is_full_rsb_candidate(Mixture::pure(2), 512);
    CHECK(flat.candidate);

    const auto pure3 = pspin::is_full_rsb_candidate(Mixture::pure(3), 512);
    CHECK_FALSE(pure3.candidate);
    CHECK(pure3.worst_violation > 0.0);
    CHECK(pure3.worst_t > 0.0);

    // Decision left to the finite-difference test for perturbed mixtures.
    const auto perturbed =
        pspin::is_full_rsb_candidate(Mixture::from_pairs({{2, 1.0}, {4, 1e-6}}), 512);
    CHECK(perturbed.grid == 512);

    CHECK_THROWS_AS(pspin::is_full_rsb_candidate(Mixture::pure(1), 64), std::invalid_argument);
}
