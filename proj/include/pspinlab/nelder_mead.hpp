#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace pspin::nm {

struct Options {
    int max_iter = 4000;
    double f_tol = 1e-13;      // absolute spread of simplex values
    double f_tol_rel = 0.0;    // spread relative to |best|
    double x_tol = 1e-11;      // max vertex distance from best
};

struct Result {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Plain Nelder-Mead downhill simplex. Deterministic: the simplex is seeded
// from x0 by coordinate steps, no randomness anywhere.
inline Result minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       const Eigen::VectorXd& x0, double step, Options opt = {}) {
    const int n = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 1; i <= n; ++i) xs[i](i - 1) += step;
    for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

    std::vector<int> order(n + 1);
    Result res;
    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];

        double span = 0.0;
        for (int i = 0; i <= n; ++i)
            span = std::max(span, (xs[i] - xs[best]).lpNorm<Eigen::Infinity>());
        if (fs[worst] - fs[best] < opt.f_tol + opt.f_tol_rel * std::abs(fs[best]) &&
            span < opt.x_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += xs[i];
        centroid /= n;

        const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
        const double fr = f(xr);
        if (fr < fs[best]) {
            const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = f(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr < fs[worst];
            const Eigen::VectorXd xc =
                centroid + rho * ((outside ? xr : xs[worst]) - centroid);
            const double fc = f(xc);
            if (fc < (outside ? fr : fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    xs[i] = xs[best] + sigma * (xs[i] - xs[best]);
                    fs[i] = f(xs[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fs[i] < fs[best]) best = i;
    res.x = xs[best];
    res.f = fs[best];
    return res;
}

}  // namespace pspin::nm
