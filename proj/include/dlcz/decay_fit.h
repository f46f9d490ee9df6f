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

#ifndef DLCZ_DECAY_FIT_H
#define DLCZ_DECAY_FIT_H

#include <span>
#include <string>

#include <Eigen/Dense>

#include "dlcz/least_squares.h"

namespace dlcz {

struct DecayPoint {
    double t = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

enum class DecayModel {
    /// A exp(-t / tau)
    pure,
    /// 1 + A exp(-t / tau)
    offset,
};

struct DecayFitResult {
    double amplitude = 0.0;
    double tau = 0.0;
    /// Fixed baseline of the model: 0 for `pure`, 1 for `offset`.
    double offset = 0.0;
    double amplitude_std_error = 0.0;
    double tau_std_error = 0.0;
    /// Covariance of (amplitude, tau).
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    /// Chi-square at the optimum.
    double objective = 0.0;
    int iterations = 0;
    size_t points = 0;
    std::string message;
};

/// Weighted residuals of a decay fit in the unit-free parameters
/// (amplitude, tau / t_scale), where t_scale is the largest |t| in the data.
struct DecayProblem {
    LeastSquaresProblem problem;
    double t_scale = 1.0;
    double offset = 0.0;
    Eigen::VectorXd start;
};

DecayProblem make_decay_problem(std::span<const DecayPoint> points, DecayModel model);

double decay_forward(DecayModel model, double amplitude, double tau, double t);

/// Weighted least-squares exponential fit. Needs at least three points with
/// positive standard errors. Throws ConvergenceError if the optimizer fails or
/// the lifetime ends up on its search bound.
DecayFitResult fit_exp_decay(std::span<const DecayPoint> points, DecayModel model);

const char* decay_model_name(DecayModel model);
DecayModel parse_decay_model(const std::string& name);

}  // namespace dlcz

#endif
