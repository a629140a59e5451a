#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/mixture.hpp"
#include "pspinlab/optimizer.hpp"

using pspin::DescentOptions;
using pspin::HamiltonianRealization;
using pspin::LsqSystem;
using pspin::Mixture;
using pspin::SpherePath;

namespace {

// Symmetrized coupling matrix of the p = 2 part: H(x) = x^T S x / sqrt(N).
Eigen::MatrixXd symmetrized_couplings(const HamiltonianRealization& h) {
    const int n = h.dimension();
    const auto& t = h.tensor(2);
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (t[i * n + j] + t[j * n + i]);
    return s;
}

void check_monotone_with_slack(const SpherePath& path, bool ascending,
                               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad) {
    const double root_delta = std::sqrt(path.delta);
    for (int i = 0; i < path.k; ++i) {
        const double slack = 2.0 * root_delta * grad(path.points[i]).norm() / path.n;
        if (ascending) {
            CHECK(path.energies[i + 1] >= path.energies[i] - slack);
        } else {
            CHECK(path.energies[i + 1] <= path.energies[i] + slack);
        }
    }
}

}  // namespace

TEST_CASE("hessian descent path satisfies the sphere-path invariants") {
    const Mixture m({0, 1.0, 0.5});
    const auto h = HamiltonianRealization::sample(m, 50, 42);
    DescentOptions opt;
    opt.k = 10;
    opt.seed = 7;
    const SpherePath path = hessian_descent(h, opt);

    CHECK(path.n == 50);
    CHECK(path.k == 10);
    CHECK(path.delta == doctest::Approx(0.1));
    CHECK_NOTHROW(path.validate());

    // x_0 = 0 and the terminal point sits on the sphere.
    CHECK(path.points.front().norm() == 0.0);
    CHECK(path.points.back().squaredNorm() == doctest::Approx(50.0).epsilon(1e-12));

    // Recorded energies match the Hamiltonian at the recorded points.
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        CHECK(path.energies[i] ==
              doctest::Approx(h.energy(path.points[i]) / 50.0).epsilon(1e-13));
    }
    REQUIRE(path.steps.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(path.steps[i].i == i);
        CHECK((path.steps[i].sign == 1 || path.steps[i].sign == -1));
        CHECK(path.steps[i].eig_converged);
        CHECK(path.steps[i].radius_sq_over_n ==
              doctest::Approx((i + 1) * path.delta).epsilon(1e-12));
    }
}

TEST_CASE("hessian descent is deterministic, including the curvature-free first step") {
    const Mixture pure3 = Mixture::pure(3, 1.0);
    const auto h = HamiltonianRealization::sample(pure3, 30, 99);
    DescentOptions opt;
    opt.k = 8;
    opt.seed = 1234;
    const SpherePath a = hessian_descent(h, opt);
    const SpherePath b = hessian_descent(h, opt);

    // Pure p = 3 has a vanishing Hessian at the origin: the first direction
    // is the seeded random fallback and is reported with a zero estimate.
    CHECK(a.steps[0].eig_estimate == 0.0);
    CHECK(a.steps[1].eig_estimate != 0.0);

    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i] == b.points[i]);  // bit-for-bit
        CHECK(a.energies[i] == b.energies[i]);
    }
    for (int i = 0; i < a.k; ++i) {
        CHECK(a.steps[i].sign == b.steps[i].sign);
        CHECK(a.steps[i].eig_estimate == b.steps[i].eig_estimate);
    }

    // A different seed changes the fallback direction, hence the path.
    DescentOptions other = opt;
    other.seed = 4321;
    const SpherePath c = hessian_descent(h, other);
    CHECK(a.points[1] != c.points[1]);
}

TEST_CASE("pure 2-spin descent reaches the top-eigenvalue energy") {
    const Mixture m = Mixture::pure(2, 1.0);
    const int n = 200;
    const auto h = HamiltonianRealization::sample(m, n, 2024);

    DescentOptions opt;
    opt.k = 60;
    opt.seed = 5;
    const SpherePath path = hessian_descent(h, opt);
    CHECK_NOTHROW(path.validate());

    // The exact optimum over the sphere is sqrt(N) lambda_max of the
    // symmetrized coupling matrix; the greedy path should land within 5%.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized_couplings(h));
    const double best = es.eigenvalues().maxCoeff() / std::sqrt(static_cast<double>(n));
    CHECK(best > 1.0);  // ~ sqrt(2) at this size
    CHECK(path.energies.back() == doctest::Approx(best).epsilon(0.05));
    CHECK(path.energies.back() <= best + 1e-9);

    const auto grad = [&h](const Eigen::VectorXd& x) { return h.euclidean_grad(x); };
    check_monotone_with_slack(path, /*ascending=*/true, grad);
}

TEST_CASE("mixed 3-spin descent increases the energy up to the per-step slack") {
    const Mixture m({0, 0.3, 1.0});
    const auto h = HamiltonianRealization::sample(m, 60, 31);
    DescentOptions opt;
    opt.k = 20;
    opt.seed = 11;
    const SpherePath path = hessian_descent(h, opt);
    CHECK_NOTHROW(path.validate());
    CHECK(path.energies.back() > 0.5);  // far from the H = 0 start
    const auto grad = [&h](const Eigen::VectorXd& x) { return h.euclidean_grad(x); };
    check_monotone_with_slack(path, /*ascending=*/true, grad);
}

TEST_CASE("lsq system: construction, values, and derivative consistency") {
    const Mixture m({0, 1.0, 0.4});
    const int n = 20;
    const auto sys = LsqSystem::sample(m, n, 0.2, 0.3, 77);
    CHECK(sys.size() == 4);  // floor(0.2 * 20)
    CHECK(sys.dimension() == n);
    CHECK(sys.target() == 0.3);

    CHECK_THROWS_AS(LsqSystem({}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(LsqSystem::sample(m, 10, 0.05, 0.0, 1), std::invalid_argument);
    {
        std::vector<HamiltonianRealization> bad;
        bad.push_back(HamiltonianRealization::sample(m, 10, 1));
        bad.push_back(HamiltonianRealization::sample(m, 12, 2));
        CHECK_THROWS_AS(LsqSystem(std::move(bad), 0.0), std::invalid_argument);
    }

    // Composite value agrees with the per-equation values.
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = std::cos(1.0 + j);
    x *= std::sqrt(static_cast<double>(n)) / x.norm();
    double direct = 0.0;
    for (double f : sys.equation_values(x)) direct += (f - 0.3) * (f - 0.3);
    CHECK(sys.value(x) == doctest::Approx(direct).epsilon(1e-15));

    // Gradient and Hessian against central differences of the composite.
    const double step = 1e-5 * std::sqrt(static_cast<double>(n));
    const Eigen::VectorXd g = sys.gradient(x);
    const Eigen::MatrixXd hd = sys.hessian(x);
    CHECK((hd - hd.transpose()).norm() <= 1e-12 * hd.norm());
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const double fd = (sys.value(xp) - sys.value(xm)) / (2.0 * step);
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
        const Eigen::VectorXd fd_row = (sys.gradient(xp) - sys.gradient(xm)) / (2.0 * step);
        CHECK((hd.col(j) - fd_row).norm() <= 1e-4 * std::max(1.0, hd.col(j).norm()));
    }
}

TEST_CASE("single-equation least squares with c = 0 drives the residual to zero") {
    const Mixture m = Mixture::pure(2, 1.0);
    const int n = 60;
    std::vector<HamiltonianRealization> eqs;
    eqs.push_back(HamiltonianRealization::sample(m, n, 314));
    const LsqSystem sys(std::move(eqs), 0.0);

    DescentOptions opt;
    opt.k = 40;
    opt.seed = 3;
    const auto result = least_squares_descent(sys, opt);
    CHECK_NOTHROW(result.path.validate());
    CHECK(result.residuals == result.path.energies);

    // F(x) = v^T S v sweeps [lambda_min, lambda_max]; zero is interior, so
    // the minimal residual is zero on that scale.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        symmetrized_couplings(sys.equations().front()));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    CHECK(lo < 0.0);
    CHECK(hi > 0.0);
    const double scale = std::max(lo * lo, hi * hi) / n;
    CHECK(result.residuals.back() <= 0.05 * scale);
    // No slack-monotonicity check here: once F reaches the floor the
    // gradient vanishes and steps oscillate at the second-order scale.
}

TEST_CASE("infeasible target keeps the residual bounded away from zero") {
    const Mixture m = Mixture::pure(2, 1.0);
    const int n = 60;
    std::vector<HamiltonianRealization> eqs;
    eqs.push_back(HamiltonianRealization::sample(m, n, 271));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized_couplings(eqs.front()));
    const double hi = es.eigenvalues().maxCoeff();
    const double c = 1.5 * hi;  // outside the attainable range of F
    const LsqSystem sys(std::move(eqs), c);

    DescentOptions opt;
    opt.k = 40;
    opt.seed = 9;
    const auto result = least_squares_descent(sys, opt);
    const double floor = (c - hi) * (c - hi) / n;
    CHECK(result.residuals.back() >= 0.5 * floor);
    CHECK(result.residuals.back() <= 3.0 * floor);

    // Away from feasibility the gradient stays large, so the first-order
    // slack bound covers every step.
    const auto grad = [&sys](const Eigen::VectorXd& x) { return sys.gradient(x); };
    check_monotone_with_slack(result.path, /*ascending=*/false, grad);
}

TEST_CASE("doubling the step count does not degrade the terminal residual") {
    const Mixture m({0, 1.0, 0.5});
    const int n = 40;
    const auto sys = LsqSystem::sample(m, n, 0.2, 0.1, 55);

    DescentOptions coarse;
    coarse.k = 12;
    coarse.seed = 17;
    DescentOptions fine = coarse;
    fine.k = 24;

    const auto rc = least_squares_descent(sys, coarse);
    const auto rf = least_squares_descent(sys, fine);
    const double slack = 2.0 * std::sqrt(rc.path.delta) *
                         sys.gradient(rc.path.points.back()).norm() / n;
    CHECK(rf.residuals.back() <= rc.residuals.back() + slack);
}
