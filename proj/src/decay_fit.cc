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

#include "dlcz/decay_fit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dlcz {

namespace {

// Lifetime is searched as u = tau / t_scale so the problem does not depend on the time unit.
constexpr double kMinU = 1e-4;
constexpr double kMaxU = 1e4;

}  // namespace

double decay_forward(DecayModel model, double amplitude, double tau, double t) {
    double base = model == DecayModel::offset ? 1.0 : 0.0;
    return base + amplitude * std::exp(-t / tau);
}

const char* decay_model_name(DecayModel model) {
    return model == DecayModel::pure ? "pure" : "offset";
}

DecayModel parse_decay_model(const std::string& name) {
    if (name == "pure") return DecayModel::pure;
    if (name == "offset") return DecayModel::offset;
    throw std::invalid_argument("unknown decay model '" + name + "'");
}

DecayProblem make_decay_problem(std::span<const DecayPoint> points, DecayModel model) {
    if (points.size() < 3) {
        throw std::invalid_argument("fit_exp_decay needs at least 3 points");
    }
    double t_scale = 0.0;
    for (const auto& p : points) {
        if (!(p.std_error > 0.0) || !std::isfinite(p.value) || !std::isfinite(p.t)) {
            throw std::invalid_argument("fit_exp_decay needs finite values and positive standard errors");
        }
        t_scale = std::max(t_scale, std::abs(p.t));
    }
    if (t_scale == 0.0) {
        throw std::invalid_argument("fit_exp_decay needs at least one nonzero time");
    }
    const double base = model == DecayModel::offset ? 1.0 : 0.0;
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd s(m), y(m), w(m);
    for (Eigen::Index i = 0; i < m; i++) {
        s[i] = points[i].t / t_scale;
        y[i] = points[i].value - base;
        w[i] = 1.0 / points[i].std_error;
    }

    // Log-linear start from the points with positive excess.
    double a0 = 0.0, u0 = 0.3;
    {
        double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (Eigen::Index i = 0; i < m; i++) {
            if (y[i] <= 0.0) continue;
            double lw = (y[i] * w[i]) * (y[i] * w[i]);
            double ly = std::log(y[i]);
            sw += lw;
            sx += lw * s[i];
            sy += lw * ly;
            sxx += lw * s[i] * s[i];
            sxy += lw * s[i] * ly;
        }
        double den = sw * sxx - sx * sx;
        if (sw > 0.0 && den > 0.0) {
            double slope = (sw * sxy - sx * sy) / den;
            double icpt = (sy - slope * sx) / sw;
            a0 = std::exp(icpt);
            if (slope < 0.0) u0 = std::clamp(-1.0 / slope, 10.0 * kMinU, 0.1 * kMaxU);
        } else {
            a0 = y.cwiseAbs().maxCoeff();
        }
    }
    if (a0 == 0.0) a0 = 1e-3;

    DecayProblem out;
    out.t_scale = t_scale;
    out.offset = base;
    out.start = Eigen::Vector2d(a0, u0);
    out.problem.lower = Eigen::Vector2d(-std::numeric_limits<double>::infinity(), kMinU);
    out.problem.upper = Eigen::Vector2d(std::numeric_limits<double>::infinity(), kMaxU);
    out.problem.evaluate = [s, y, w](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const Eigen::Index m = s.size();
        r.resize(m);
        if (jac) jac->resize(m, 2);
        for (Eigen::Index i = 0; i < m; i++) {
            double e = std::exp(-s[i] / x[1]);
            r[i] = (x[0] * e - y[i]) * w[i];
            if (jac) {
                (*jac)(i, 0) = e * w[i];
                (*jac)(i, 1) = x[0] * e * s[i] / (x[1] * x[1]) * w[i];
            }
        }
    };
    return out;
}

DecayFitResult fit_exp_decay(std::span<const DecayPoint> points, DecayModel model) {
    DecayProblem dp = make_decay_problem(points, model);
    const LeastSquaresProblem& problem = dp.problem;
    const double t_scale = dp.t_scale;
    const double base = dp.offset;
    auto starts = jittered_starts(dp.start, problem.lower, problem.upper);
    LeastSquaresResult res = solve_multistart(problem, starts);
    if (!res.converged) {
        throw ConvergenceError("fit_exp_decay: " + res.message);
    }
    if (res.x[1] <= kMinU * (1.0 + 1e-9) || res.x[1] >= kMaxU * (1.0 - 1e-9)) {
        throw ConvergenceError("fit_exp_decay: lifetime reached its search bound");
    }
    if (!res.curvature_positive) {
        throw ConvergenceError("fit_exp_decay: curvature is not positive definite at the optimum");
    }

    DecayFitResult out;
    out.amplitude = res.x[0];
    out.tau = res.x[1] * t_scale;
    out.offset = base;
    out.covariance(0, 0) = res.covariance(0, 0);
    out.covariance(0, 1) = res.covariance(0, 1) * t_scale;
    out.covariance(1, 0) = res.covariance(1, 0) * t_scale;
    out.covariance(1, 1) = res.covariance(1, 1) * t_scale * t_scale;
    out.amplitude_std_error = std::sqrt(out.covariance(0, 0));
    out.tau_std_error = std::sqrt(out.covariance(1, 1));
    out.objective = res.cost;
    out.iterations = res.iterations;
    out.points = points.size();
    out.message = res.message;
    return out;
}

}  // namespace dlcz
