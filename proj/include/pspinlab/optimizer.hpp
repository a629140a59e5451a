#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/mixture.hpp"

namespace pspin {

struct PathStep {
    int i = 0;                    // step index: x_i -> x_{i+1}
    double radius_sq_over_n = 0;  // |x_{i+1}|^2 / N
    double objective_density = 0; // objective(x_{i+1}) / N
    double eig_estimate = 0;      // restricted extreme eigenvalue used
    int sign = 1;
    bool eig_converged = true;
    int eig_retries = 0;
};

// Piecewise path 0 = x_0, ..., x_k with |x_i|^2 = i delta N and orthogonal
// increments of squared length delta N.
struct SpherePath {
    int n = 0;
    int k = 0;
    double delta = 0.0;
    std::vector<Eigen::VectorXd> points;  // k+1 entries
    std::vector<double> energies;         // objective density per point
    std::vector<PathStep> steps;          // k entries

    void validate(double tol = 1e-8) const;
};

struct DescentOptions {
    int k = 16;
    double eig_tol = 1e-6;
    std::uint64_t seed = 0;
    int max_retries = 5;  // fresh eigensolver starts before flagging a step
};

// Greedy second-order ascent: from x_0 = 0, step along the top eigenvector
// of the Euclidean Hessian restricted to the orthogonal complement of x_i,
// with the sign that gives the larger energy.
SpherePath hessian_descent(const HamiltonianRealization& h, const DescentOptions& opt);

// Random least-squares system: equations F_i(x) = H_i(x)/sqrt(N) with
// composite objective H(x) = sum_i (F_i(x) - c)^2.
class LsqSystem {
  public:
    LsqSystem(std::vector<HamiltonianRealization> equations, double c);
    // floor(alpha N) equations with independently derived seeds.
    static LsqSystem sample(const Mixture& m, int N, double alpha, double c,
                            std::uint64_t seed);

    int dimension() const { return n_; }
    double target() const { return c_; }
    std::size_t size() const { return equations_.size(); }
    const std::vector<HamiltonianRealization>& equations() const { return equations_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
    std::vector<double> equation_values(const Eigen::VectorXd& x) const;  // F_i(x)

  private:
    std::vector<HamiltonianRealization> equations_;
    double c_;
    int n_;
};

struct LsqResult {
    SpherePath path;
    std::vector<double> residuals;  // composite objective density per point
};

// Same stepping scheme as hessian_descent, but descending: bottom
// eigenvector of the restricted composite Hessian, sign of lower value.
LsqResult least_squares_descent(const LsqSystem& sys, const DescentOptions& opt);

}  // namespace pspin
