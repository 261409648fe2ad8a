#include "bdris/bfgs.hpp"

#include <cmath>

namespace bdris {

namespace {

bool fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd& x,
                 double rel_step, Eigen::VectorXd& g, std::uint64_t& evals) {
    const Eigen::Index n = x.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x(i)));
        const double xi = x(i);
        x(i) = xi + h;
        const double fp = f(x);
        x(i) = xi - h;
        const double fm = f(x);
        x(i) = xi;
        evals += 2;
        if (!std::isfinite(fp) || !std::isfinite(fm)) return false;
        g(i) = (fp - fm) / (2.0 * h);
    }
    return true;
}

} // namespace

BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& opts) {
    BfgsResult res;
    const Eigen::Index n = x0.size();
    Eigen::VectorXd x = std::move(x0);

    double fx = f(x);
    ++res.evals;
    if (!std::isfinite(fx)) {
        res.hit_nonfinite = true;
        return res;
    }

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n), g_new(n);
    if (!fd_gradient(f, x, opts.fd_rel_step, g, res.evals)) {
        res.hit_nonfinite = true;
        return res;
    }

    for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
        if (g.norm() <= opts.grad_tol) break;

        Eigen::VectorXd p = -(h_inv * g);
        double slope = g.dot(p);
        if (slope >= 0.0) { // stale curvature; fall back to steepest descent
            h_inv.setIdentity();
            p = -g;
            slope = g.dot(p);
        }

        // Backtracking Armijo line search.
        double alpha = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            f_new = f(x + alpha * p);
            ++res.evals;
            if (!std::isfinite(f_new)) {
                res.hit_nonfinite = true;
                return res;
            }
            if (f_new <= fx + opts.armijo_c1 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break; // no descent at machine-scale steps

        const Eigen::VectorXd s = alpha * p;
        x += s;
        fx = f_new;

        if (!fd_gradient(f, x, opts.fd_rel_step, g_new, res.evals)) {
            res.hit_nonfinite = true;
            return res;
        }
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd i_mat = Eigen::MatrixXd::Identity(n, n);
            h_inv = (i_mat - rho * s * y.transpose()) * h_inv *
                        (i_mat - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }
        g = g_new;
    }

    res.x = std::move(x);
    res.f = fx;
    return res;
}

} // namespace bdris
