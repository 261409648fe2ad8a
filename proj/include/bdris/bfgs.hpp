#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace bdris {

struct BfgsOptions {
    int max_iters = 500;
    double grad_tol = 1e-7;      ///< stop when ||g||_2 falls below this
    double fd_rel_step = 1e-4;   ///< central-difference step 1e-4 * max(1, |x_i|)
    double armijo_c1 = 1e-4;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iters = 0;
    std::uint64_t evals = 0;     ///< objective evaluations, gradient stencils included
    bool hit_nonfinite = false;  ///< objective became non-finite; x/f are invalid
};

/// Dense BFGS with central finite-difference gradients and Armijo
/// backtracking. Minimizes f; never accepts a step that increases f.
BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& opts = {});

} // namespace bdris
