#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pspinlab/lanczos.hpp"
#include "pspinlab/mixture.hpp"

namespace pspin {

// Thrown when the tensor storage estimate exceeds the memory cap.
class CapacityError : public std::runtime_error {
  public:
    CapacityError(const std::string& msg, int offending_p)
        : std::runtime_error(msg), p(offending_p) {}
    int p;
};

// Point on the sphere of radius sqrt(qN), q in (0,1].
struct SpherePoint {
    Eigen::VectorXd coords;
    double q = 1.0;

    // Rescale v onto the sphere of radius sqrt(qN).
    static SpherePoint on_sphere(Eigen::VectorXd v, double q = 1.0);
    int dimension() const { return static_cast<int>(coords.size()); }
    void validate() const;  // |coords|^2 = qN within 1e-9 relative
};

// Spherical Hessian at x: P Hess P - (<x, grad>/(qN)) P with P the tangent
// projector. Acts on the (N-1)-dimensional tangent space; stored as the
// dense Euclidean Hessian plus the radial correction, applied matrix-free.
class SphericalHessian {
  public:
    SphericalHessian(Eigen::MatrixXd euclidean_hess, Eigen::VectorXd x_unit,
                     double radial_term);

    int dimension() const { return static_cast<int>(xhat_.size()); }
    double radial_term() const { return c_; }

    void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
    Eigen::MatrixXd dense() const;  // full N x N projected operator

    // Orthonormal basis of the tangent space (N x (N-1), Householder).
    Eigen::MatrixXd tangent_basis() const;

    // All N-1 tangent eigenvalues via an explicit Householder tangent basis
    // and a dense eigendecomposition. Intended for moderate N.
    Eigen::VectorXd tangent_eigenvalues() const;

    // Iterative extreme tangent eigenpair (matrix-free, deflated against x).
    EigenPair extreme_eigenpair(bool largest, double rel_tol = 1e-8,
                                std::uint64_t seed = 1) const;

  private:
    Eigen::MatrixXd hess_;
    Eigen::VectorXd xhat_;
    double c_;
};

class HamiltonianRealization {
  public:
    static constexpr std::size_t default_memory_cap = 8ull << 30;  // 8 GB

    // Total tensor bytes that sampling would allocate.
    static std::size_t tensor_bytes(const Mixture& m, int N);

    // Draw all disorder tensors (i.i.d. standard normals, counter-based
    // generator keyed by (seed, p, flat index); deterministic).
    static HamiltonianRealization sample(const Mixture& m, int N, std::uint64_t seed,
                                         std::size_t memory_cap = default_memory_cap);

    // Test hook: install explicit tensors (row-major, N^p entries for each
    // active order p of the mixture).
    static HamiltonianRealization from_tensors(
        const Mixture& m, int N, std::vector<std::pair<int, std::vector<double>>> tensors,
        std::uint64_t seed = 0);

    int dimension() const { return N_; }
    const Mixture& mixture() const { return mixture_; }
    std::uint64_t seed() const { return seed_; }
    std::vector<int> active_orders() const;
    const std::vector<double>& tensor(int p) const;

    double energy(const Eigen::VectorXd& x) const;
    Eigen::VectorXd euclidean_grad(const Eigen::VectorXd& x) const;
    // Energy and gradient in one pass (the contraction chain is shared).
    std::pair<double, Eigen::VectorXd> energy_grad(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd euclidean_hess(const Eigen::VectorXd& x) const;

    double energy(const SpherePoint& x) const { return energy(x.coords); }
    Eigen::VectorXd spherical_grad(const SpherePoint& x) const;
    SphericalHessian spherical_hess(const SpherePoint& x) const;

    void save(const std::string& path) const;
    static HamiltonianRealization load(const std::string& path);

  private:
    HamiltonianRealization(Mixture m, int N, std::uint64_t seed);
    void check_dimension(const Eigen::VectorXd& x) const;

    Mixture mixture_;
    int N_;
    std::uint64_t seed_;
    std::vector<std::vector<double>> tensors_;  // index p-1; empty if p inactive
};

}  // namespace pspin
