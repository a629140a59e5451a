#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace pspin {

struct EigenPair {
    double value = 0.0;
    Eigen::VectorXd vector;
    bool converged = false;
    int matvecs = 0;
};

using LinearOp = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Extreme eigenpair of a symmetric operator by Lanczos with full
// reorthogonalization and Ritz restarts. `project_out` holds unit vectors
// spanning an invariant/constraint subspace to deflate against. The start
// vector is derived from `seed`, so results are deterministic.
EigenPair extreme_eigenpair(int n, const LinearOp& apply, bool largest,
                            double rel_tol = 1e-8, std::uint64_t seed = 1,
                            const std::vector<Eigen::VectorXd>& project_out = {},
                            int max_matvecs = 6000);

}  // namespace pspin
