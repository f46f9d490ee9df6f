// Copyright 2026 The dlcz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dlcz/least_squares.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlcz/rng.h"

namespace dlcz {

namespace {

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

// A parameter is pinned when it sits on a bound and the descent direction points outward.
std::vector<bool> free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
    std::vector<bool> free(x.size(), true);
    for (Eigen::Index i = 0; i < x.size(); i++) {
        if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) {
            free[i] = false;
        }
    }
    return free;
}

double gradient_cosine(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r, const Eigen::VectorXd& g,
                       const std::vector<bool>& free) {
    double rnorm = r.norm();
    if (rnorm == 0.0) {
        return 0.0;
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); i++) {
        if (!free[i]) {
            continue;
        }
        double cn = jac.col(i).norm();
        if (cn > 0.0) {
            worst = std::max(worst, std::abs(g[i]) / (cn * rnorm));
        }
    }
    return worst;
}

}  // namespace

LeastSquaresResult solve_least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options) {
    const Eigen::Index n = x0.size();
    LeastSquaresResult out;
    Eigen::VectorXd x = clamp_to(x0, problem.lower, problem.upper);
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    problem.evaluate(x, r, &jac);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) {
        throw ConvergenceError("objective is not finite at the starting point");
    }
    double lambda = 1e-3;
    Eigen::VectorXd g = jac.transpose() * r;
    std::vector<bool> free = free_mask(x, g, problem.lower, problem.upper);

    int it = 0;
    for (; it < options.max_iterations; it++) {
        if (gradient_cosine(jac, r, g, free) <= options.gradient_tolerance) {
            out.converged = true;
            out.message = "gradient tolerance reached";
            break;
        }
        Eigen::MatrixXd a = jac.transpose() * jac;
        for (Eigen::Index i = 0; i < n; i++) {
            if (!free[i]) {
                a.row(i).setZero();
                a.col(i).setZero();
                a(i, i) = 1.0;
            }
        }
        Eigen::VectorXd rhs = -g;
        for (Eigen::Index i = 0; i < n; i++) {
            if (!free[i]) rhs[i] = 0.0;
        }

        bool accepted = false;
        bool tiny_step = false;
        for (int inner = 0; inner < 60 && !accepted; inner++) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index i = 0; i < n; i++) {
                damped(i, i) += lambda * std::max(a(i, i), 1e-300);
            }
            Eigen::VectorXd step = damped.ldlt().solve(rhs);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd x_new = clamp_to(x + step, problem.lower, problem.upper);
            Eigen::VectorXd actual = x_new - x;
            if (actual.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance)) {
                tiny_step = true;
                break;
            }
            Eigen::VectorXd r_new;
            Eigen::MatrixXd jac_new;
            problem.evaluate(x_new, r_new, &jac_new);
            double cost_new = r_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new < cost) {
                double predicted = -(2.0 * actual.dot(g) + actual.dot(a * actual));
                double rho = predicted > 0.0 ? (cost - cost_new) / predicted : 0.0;
                if (rho > 0.75) {
                    lambda = std::max(lambda / 3.0, 1e-12);
                } else if (rho < 0.25) {
                    lambda *= 2.0;
                }
                x = x_new;
                r = std::move(r_new);
                jac = std::move(jac_new);
                double old_cost = cost;
                cost = cost_new;
                g = jac.transpose() * r;
                free = free_mask(x, g, problem.lower, problem.upper);
                accepted = true;
                if (old_cost - cost <= 1e-15 * old_cost &&
                    actual.norm() <= 1e-10 * (x.norm() + 1e-300)) {
                    tiny_step = true;
                }
            } else {
                lambda *= 4.0;
            }
        }
        if (tiny_step || !accepted) {
            out.converged = true;
            out.message = accepted ? "relative step below tolerance" : "no further decrease possible";
            it++;
            break;
        }
    }
    if (!out.converged) {
        out.message = "iteration limit reached";
    }

    out.x = x;
    out.cost = cost;
    out.gradient = g;
    out.iterations = it;
    out.at_bound.assign(n, false);
    for (Eigen::Index i = 0; i < n; i++) {
        out.at_bound[i] = !free[i];
    }

    // Covariance over free parameters.
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; i++) {
        if (free[i]) idx.push_back(i);
    }
    out.covariance = Eigen::MatrixXd::Zero(n, n);
    if (!idx.empty()) {
        const auto m = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd sub(jac.rows(), m);
        for (Eigen::Index k = 0; k < m; k++) {
            sub.col(k) = jac.col(idx[k]);
        }
        // Column scaling makes the rank test independent of parameter units.
        Eigen::VectorXd scale(m);
        for (Eigen::Index k = 0; k < m; k++) {
            double cn = sub.col(k).norm();
            scale[k] = cn > 0.0 ? 1.0 / cn : 0.0;
        }
        Eigen::MatrixXd a = scale.asDiagonal() * (sub.transpose() * sub) * scale.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        double top = eig.eigenvalues().cwiseAbs().maxCoeff();
        if ((scale.array() == 0.0).any() || !(eig.eigenvalues().minCoeff() > 1e-14 * top) || top == 0.0) {
            out.curvature_positive = false;
            for (Eigen::Index k = 0; k < m; k++) {
                out.covariance(idx[k], idx[k]) = std::numeric_limits<double>::infinity();
            }
        } else {
            Eigen::MatrixXd inv = scale.asDiagonal() *
                                  (eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                   eig.eigenvectors().transpose()) *
                                  scale.asDiagonal();
            for (Eigen::Index p = 0; p < m; p++) {
                for (Eigen::Index q = 0; q < m; q++) {
                    out.covariance(idx[p], idx[q]) = inv(p, q);
                }
            }
        }
    }
    return out;
}

LeastSquaresResult solve_multistart(const LeastSquaresProblem& problem, const std::vector<Eigen::VectorXd>& starts,
                                    const LeastSquaresOptions& options) {
    if (starts.empty()) {
        throw std::invalid_argument("solve_multistart needs at least one start");
    }
    LeastSquaresResult best;
    bool have = false;
    std::string failures;
    for (const auto& s : starts) {
        LeastSquaresResult res;
        try {
            res = solve_least_squares(problem, s, options);
        } catch (const ConvergenceError& e) {
            failures += e.what();
            failures += "; ";
            continue;
        }
        if (!have || res.cost < best.cost) {
            best = std::move(res);
            have = true;
        }
    }
    if (!have) {
        throw ConvergenceError("every start failed: " + failures);
    }
    return best;
}

std::vector<Eigen::VectorXd> jittered_starts(const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper, int count, double spread,
                                             uint64_t seed) {
    std::vector<Eigen::VectorXd> out;
    out.push_back(clamp_to(x0, lower, upper));
    for (int k = 1; k < count; k++) {
        StreamRng rng = StreamRng::derive(seed, static_cast<uint64_t>(k));
        Eigen::VectorXd x = x0;
        for (Eigen::Index i = 0; i < x.size(); i++) {
            x[i] *= 1.0 + spread * (2.0 * rng.uniform() - 1.0);
        }
        out.push_back(clamp_to(x, lower, upper));
    }
    return out;
}

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x, double rel_step) {
    Eigen::VectorXd r0;
    f(x, r0, nullptr);
    Eigen::MatrixXd jac(r0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); i++) {
        double h = rel_step * std::max(std::abs(x[i]), 1e-300);
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        Eigen::VectorXd rp, rm;
        f(xp, rp, nullptr);
        f(xm, rm, nullptr);
        jac.col(i) = (rp - rm) / (2.0 * h);
    }
    return jac;
}

}  // namespace dlcz
