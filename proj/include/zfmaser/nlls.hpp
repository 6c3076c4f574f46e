#pragma once

// Bounded nonlinear least squares: Levenberg-Marquardt with Marquardt's
// diagonal scaling, central-difference or analytic Jacobians, and a
// Nelder-Mead fallback when the damping runs away without progress.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zfmaser/error.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser::fit {

enum class LossSpace { Linear, Log10 };

using ModelFn = std::function<std::vector<double>(std::span<const double>)>;
// Derivative of the model (not the residual): rows = samples, cols = parameters.
using JacobianFn = std::function<Eigen::MatrixXd(std::span<const double>)>;

struct FitProblem {
    ModelFn model;
    JacobianFn jacobian;  // optional; central differences otherwise
    std::vector<double> data;
    std::vector<double> init;
    std::vector<double> lower;  // empty = unbounded
    std::vector<double> upper;
    LossSpace loss_space = LossSpace::Linear;
    std::vector<double> weights;  // optional per-sample residual weights

    std::size_t n_params() const { return init.size(); }
};

struct FitOptions {
    int max_iterations = 200;
    double xtol = 1e-8;   // relative parameter change
    double ftol = 1e-10;  // relative residual change
    double gtol = 1e-3;   // max |cos| between residual and any free Jacobian column
    double initial_damping = 1e-3;
    bool parallel_jacobian = true;
    bool simplex_fallback = true;
};

struct FitResult {
    std::vector<double> params;
    double residual_norm = 0.0;
    double jacobian_condition = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> param_uncertainties;
    double gradient_measure = 0.0;
    bool used_simplex = false;
    std::vector<double> cost_history;  // 0.5 |r|^2 after each accepted LM step
    std::string message;
};

namespace detail {

inline double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

class Objective {
public:
    Objective(const FitProblem& p) : p_(p) {
        const std::size_t n = p.n_params();
        if (n == 0) throw InvalidInput("nlls: no parameters");
        if (!p.model) throw InvalidInput("nlls: model function missing");
        if (p.data.empty()) throw InvalidInput("nlls: no data");
        lo_ = p.lower.empty() ? std::vector<double>(n, -std::numeric_limits<double>::infinity()) : p.lower;
        hi_ = p.upper.empty() ? std::vector<double>(n, std::numeric_limits<double>::infinity()) : p.upper;
        if (lo_.size() != n || hi_.size() != n) throw InvalidInput("nlls: bounds size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(lo_[i] <= hi_[i])) throw InvalidInput("nlls: empty bound interval");
            if (!(p.init[i] >= lo_[i] && p.init[i] <= hi_[i]))
                throw InvalidInput("nlls: initial value outside bounds for parameter " + std::to_string(i));
        }
        if (!p.weights.empty() && p.weights.size() != p.data.size())
            throw InvalidInput("nlls: weights size mismatch");
        target_.resize(p.data.size());
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double d = p.data[i];
            if (!std::isfinite(d)) throw InvalidInput("nlls: non-finite data");
            if (p.loss_space == LossSpace::Log10) {
                if (!(d > 0.0)) throw InvalidInput("nlls: log10 loss needs positive data");
                target_[i] = std::log10(d);
            } else {
                target_[i] = d;
            }
        }
    }

    // Residual norm indistinguishable from rounding in the (weighted) target.
    double exact_floor() const {
        double s = 0.0;
        for (std::size_t i = 0; i < target_.size(); ++i) {
            const double w = p_.weights.empty() ? 1.0 : p_.weights[i];
            s += w * w * target_[i] * target_[i];
        }
        return 1e-9 * std::sqrt(s);
    }

    std::size_t m() const { return target_.size(); }
    std::size_t n() const { return lo_.size(); }
    const std::vector<double>& lower() const { return lo_; }
    const std::vector<double>& upper() const { return hi_; }

    std::vector<double> project(std::vector<double> x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = clampd(x[i], lo_[i], hi_[i]);
        return x;
    }

    std::vector<double> predict(std::span<const double> x) const {
        auto y = p_.model(x);
        if (y.size() != target_.size()) throw ModelEvaluationError("nlls: model output has wrong length");
        for (double v : y)
            if (!std::isfinite(v)) throw ModelEvaluationError("nlls: model produced a non-finite value");
        return y;
    }

    Eigen::VectorXd residual_from_prediction(const std::vector<double>& y) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double f = p_.loss_space == LossSpace::Log10
                                 ? std::log10(std::max(y[i], std::numeric_limits<double>::min()))
                                 : y[i];
            const double w = p_.weights.empty() ? 1.0 : p_.weights[i];
            r(static_cast<Eigen::Index>(i)) = w * (f - target_[i]);
        }
        return r;
    }

    Eigen::VectorXd residual(std::span<const double> x) const { return residual_from_prediction(predict(x)); }

    double cost(std::span<const double> x) const { return 0.5 * residual(x).squaredNorm(); }

    // Jacobian of the residual vector.
    Eigen::MatrixXd jacobian(const std::vector<double>& x, const std::vector<double>& y_at_x,
                             bool parallel) const {
        const auto m = static_cast<Eigen::Index>(this->m());
        const auto n = static_cast<Eigen::Index>(this->n());
        Eigen::MatrixXd J(m, n);
        if (p_.jacobian) {
            const Eigen::MatrixXd Jm = p_.jacobian(x);
            if (Jm.rows() != m || Jm.cols() != n) throw ModelEvaluationError("nlls: jacobian has wrong shape");
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                double scale = p_.weights.empty() ? 1.0 : p_.weights[ii];
                if (p_.loss_space == LossSpace::Log10)
                    scale /= std::max(y_at_x[ii], std::numeric_limits<double>::min()) * std::log(10.0);
                J.row(i) = scale * Jm.row(i);
            }
            if (!J.allFinite()) throw ModelEvaluationError("nlls: non-finite analytic jacobian");
            return J;
        }
        auto column = [&](Eigen::Index j) {
            std::vector<double> xp = x, xm = x;
            const auto jj = static_cast<std::size_t>(j);
            const double h = std::max(1e-6 * std::abs(x[jj]), 1e-10);
            xp[jj] += h;
            xm[jj] -= h;
            return Eigen::VectorXd((residual(xp) - residual(xm)) / (2.0 * h));
        };
        if (parallel && n > 1) {
            std::vector<std::future<Eigen::VectorXd>> cols;
            cols.reserve(static_cast<std::size_t>(n));
            for (Eigen::Index j = 0; j < n; ++j)
                cols.push_back(std::async(std::launch::async, column, j));
            for (Eigen::Index j = 0; j < n; ++j) J.col(j) = cols[static_cast<std::size_t>(j)].get();
        } else {
            for (Eigen::Index j = 0; j < n; ++j) J.col(j) = column(j);
        }
        return J;
    }

    // Largest |cos| between r and a Jacobian column, ignoring columns pinned
    // at a bound with the gradient pointing outward.
    double gradient_measure(const std::vector<double>& x, const Eigen::MatrixXd& J,
                            const Eigen::VectorXd& r) const {
        const double rn = r.norm();
        if (rn <= exact_floor()) return 0.0;
        const Eigen::VectorXd g = J.transpose() * r;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < J.cols(); ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const double cn = J.col(j).norm();
            if (cn == 0.0) continue;
            // descent direction is -g
            if (x[jj] <= lo_[jj] && g(j) > 0.0) continue;
            if (x[jj] >= hi_[jj] && g(j) < 0.0) continue;
            worst = std::max(worst, std::abs(g(j)) / (cn * rn));
        }
        return worst;
    }

private:
    const FitProblem& p_;
    std::vector<double> lo_, hi_;
    std::vector<double> target_;
};

struct LmOutcome {
    std::vector<double> x;
    double cost;
    int iterations;
    bool stopped_by_tolerance;
    bool stalled;
    std::vector<double> cost_history;
};

inline LmOutcome levenberg_marquardt(const Objective& obj, std::vector<double> x, const FitOptions& opt) {
    x = obj.project(std::move(x));
    std::vector<double> y = obj.predict(x);
    Eigen::VectorXd r = obj.residual_from_prediction(y);
    double cost = 0.5 * r.squaredNorm();
    LmOutcome out{x, cost, 0, false, false, {}};
    if (cost == 0.0) {
        out.stopped_by_tolerance = true;
        return out;
    }
    Eigen::MatrixXd J = obj.jacobian(x, y, opt.parallel_jacobian);
    double mu = opt.initial_damping;
    bool try_gauss_newton = false;
    const double floor = obj.exact_floor();
    const auto n = static_cast<Eigen::Index>(obj.n());

    while (out.iterations < opt.max_iterations) {
        ++out.iterations;
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::VectorXd D = A.diagonal();
        const double dmax = std::max(D.maxCoeff(), std::numeric_limits<double>::min());
        for (Eigen::Index i = 0; i < n; ++i) D(i) = std::max(D(i), 1e-12 * dmax);

        const Eigen::VectorXd gn_step = A.ldlt().solve(-g);
        const double gn_gain = gn_step.allFinite() ? -0.5 * g.dot(gn_step) : std::numeric_limits<double>::infinity();

        bool accepted = false;
        while (!accepted) {
            // After a step the quadratic model predicted almost exactly, try the
            // undamped Gauss-Newton step first; a failed try costs no damping.
            const bool gn = try_gauss_newton;
            try_gauss_newton = false;
            Eigen::MatrixXd M = A;
            if (!gn) M.diagonal() += mu * D;
            const Eigen::VectorXd step = M.ldlt().solve(-g);
            std::vector<double> xn(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + step(static_cast<Eigen::Index>(i));
            xn = obj.project(std::move(xn));
            double cost_new = std::numeric_limits<double>::infinity();
            std::vector<double> yn;
            Eigen::VectorXd rn;
            if (step.allFinite()) {
                try {
                    yn = obj.predict(xn);
                    rn = obj.residual_from_prediction(yn);
                    cost_new = 0.5 * rn.squaredNorm();
                } catch (const ModelEvaluationError&) {
                    // trial point outside the model's domain: treat as a rejected step
                }
            }
            const double predicted =
                step.allFinite() ? 0.5 * step.dot((gn ? 0.0 : mu) * D.cwiseProduct(step) - g) : 0.0;
            if (cost_new < cost) {
                const double rho = predicted > 0.0 ? (cost - cost_new) / predicted : 0.0;
                // Step size measured in the Marquardt scaling (MINPACK convention).
                double dx = 0.0, xnorm = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = D(static_cast<Eigen::Index>(i));
                    dx += d * (xn[i] - x[i]) * (xn[i] - x[i]);
                    xnorm += d * x[i] * x[i];
                }
                const bool small_x = std::sqrt(dx) <= opt.xtol * (std::sqrt(xnorm) + opt.xtol);
                const bool small_f = (cost - cost_new) <= opt.ftol * cost;
                x = std::move(xn);
                y = std::move(yn);
                r = std::move(rn);
                cost = cost_new;
                out.cost_history.push_back(cost);
                if (!gn) mu = std::max(mu / 10.0, 1e-15);
                try_gauss_newton = std::abs(rho - 1.0) < 1e-3;
                accepted = true;
                if (small_x || small_f || std::sqrt(2.0 * cost) <= floor) {
                    out.x = x;
                    out.cost = cost;
                    out.stopped_by_tolerance = true;
                    return out;
                }
                J = obj.jacobian(x, y, opt.parallel_jacobian);
            } else if (gn_gain <= opt.ftol * cost) {
                // Even the undamped model predicts no relative gain above ftol:
                // at the minimum to rounding.
                out.x = x;
                out.cost = cost;
                out.stopped_by_tolerance = true;
                return out;
            } else if (!gn) {
                mu *= 10.0;
                if (mu > 1e16) {
                    out.x = x;
                    out.cost = cost;
                    out.stalled = true;
                    return out;
                }
            }
        }
    }
    out.x = x;
    out.cost = cost;
    return out;
}

inline std::vector<double> nelder_mead(const Objective& obj, std::vector<double> x0, int max_evals) {
    const std::size_t n = x0.size();
    auto f = [&](const std::vector<double>& x) {
        try {
            return obj.cost(x);
        } catch (const ModelEvaluationError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    std::vector<std::vector<double>> simplex(n + 1, obj.project(x0));
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = simplex[i + 1];
        const double step = v[i] != 0.0 ? 0.05 * std::abs(v[i]) : 2.5e-4;
        v[i] += (v[i] + step <= obj.upper()[i]) ? step : -step;
        v = obj.project(v);
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);
    int evals = static_cast<int>(n + 1);
    std::vector<std::size_t> order(n + 1);

    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        const double spread = std::abs(fv[worst] - fv[best]);
        double size = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                size = std::max(size, std::abs(simplex[i][j] - simplex[best][j]) /
                                          (std::abs(simplex[best][j]) + 1e-12));
        if (spread <= 1e-14 * (std::abs(fv[best]) + 1e-300) && size < 1e-10) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        auto along = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            return obj.project(p);
        };
        auto xr = along(-1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < fv[best]) {
            auto xe = along(-2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            auto xc = fr < fv[worst] ? along(-0.5) : along(0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    simplex[i] = obj.project(simplex[i]);
                    fv[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
    }
    const auto it = std::min_element(fv.begin(), fv.end());
    return simplex[static_cast<std::size_t>(it - fv.begin())];
}

}  // namespace detail

/// Minimizes 0.5 |w (f(model(p)) - f(data))|^2 over the box [lower, upper],
/// f = identity or log10. Exhausting the iteration budget yields a
/// non-converged result rather than an exception.
inline FitResult nlls_minimize(const FitProblem& problem, const FitOptions& opt = {}) {
    const detail::Objective obj(problem);
    auto lm = detail::levenberg_marquardt(obj, problem.init, opt);

    FitResult res;
    res.iterations = lm.iterations;
    res.cost_history = lm.cost_history;

    auto assess = [&](const std::vector<double>& x, Eigen::MatrixXd& J, Eigen::VectorXd& r) {
        const auto y = obj.predict(x);
        r = obj.residual_from_prediction(y);
        J = obj.jacobian(x, y, opt.parallel_jacobian);
        return obj.gradient_measure(x, J, r);
    };

    std::vector<double> x = lm.x;
    Eigen::MatrixXd J;
    Eigen::VectorXd r;
    double gm = assess(x, J, r);
    const double floor = obj.exact_floor();
    // A stall (no trial step lowers the cost) at a point that passes the gradient
    // test is a minimum to the model's own precision, as with MINPACK's gtol exit.
    bool ok = (lm.stopped_by_tolerance || lm.stalled || r.norm() <= floor) && gm <= opt.gtol;

    if (!ok && opt.simplex_fallback && (lm.stalled || lm.stopped_by_tolerance)) {
        auto xs = detail::nelder_mead(obj, x, 400 * static_cast<int>(obj.n() + 1));
        FitOptions polish = opt;
        polish.simplex_fallback = false;
        auto lm2 = detail::levenberg_marquardt(obj, xs, polish);
        res.used_simplex = true;
        res.iterations += lm2.iterations;
        if (lm2.cost <= lm.cost) {
            for (double c : lm2.cost_history) res.cost_history.push_back(c);
            x = lm2.x;
            Eigen::MatrixXd J2;
            Eigen::VectorXd r2;
            const double gm2 = assess(x, J2, r2);
            J = std::move(J2);
            r = std::move(r2);
            gm = gm2;
            ok = (lm2.stopped_by_tolerance || lm2.stalled || r.norm() <= floor) && gm <= opt.gtol;
        }
    }

    res.params = x;
    res.residual_norm = r.norm();
    res.gradient_measure = gm;
    res.converged = ok;
    res.message = ok ? "converged"
                     : (res.iterations >= opt.max_iterations ? "iteration limit reached" : "stalled");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    res.jacobian_condition = sv.size() && sv(sv.size() - 1) > 0.0
                                 ? sv(0) / sv(sv.size() - 1)
                                 : std::numeric_limits<double>::infinity();

    const auto m = obj.m(), n = obj.n();
    res.param_uncertainties.assign(n, std::numeric_limits<double>::quiet_NaN());
    if (m > n) {
        const double s2 = r.squaredNorm() / static_cast<double>(m - n);
        const Eigen::MatrixXd A = J.transpose() * J;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.isInvertible()) {
            const Eigen::MatrixXd cov = s2 * lu.inverse();
            for (std::size_t i = 0; i < n; ++i) {
                const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
                res.param_uncertainties[i] = v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return res;
}

}  // namespace zfmaser::fit
