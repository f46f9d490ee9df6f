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

#ifndef DLCZ_LEAST_SQUARES_H
#define DLCZ_LEAST_SQUARES_H

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dlcz {

class ConvergenceError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Weighted residual vector r(x) (already divided by sigma) and optionally its Jacobian.
using ResidualFunction = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residuals,
                                            Eigen::MatrixXd* jacobian)>;

struct LeastSquaresProblem {
    ResidualFunction evaluate;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct LeastSquaresOptions {
    int max_iterations = 500;
    /// Largest allowed cosine between the residual and any free Jacobian column.
    double gradient_tolerance = 1e-10;
    double step_tolerance = 1e-13;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    /// (J^T J)^-1 over the free parameters; zero rows/columns for parameters pinned at a bound.
    Eigen::MatrixXd covariance;
    /// J^T r at x.
    Eigen::VectorXd gradient;
    /// Sum of squared weighted residuals.
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    /// False when J^T J over the free parameters is not positive definite.
    bool curvature_positive = true;
    std::vector<bool> at_bound;
    std::string message;
};

/// Projected Levenberg-Marquardt with box constraints.
LeastSquaresResult solve_least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options = {});

/// Runs every start and keeps the lowest cost; ties go to the earlier start.
LeastSquaresResult solve_multistart(const LeastSquaresProblem& problem, const std::vector<Eigen::VectorXd>& starts,
                                    const LeastSquaresOptions& options = {});

/// `x0` followed by `count - 1` copies jittered multiplicatively by up to +-`spread`, clamped to the bounds.
std::vector<Eigen::VectorXd> jittered_starts(const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper, int count = 5, double spread = 0.3,
                                             uint64_t seed = 7);

/// Central-difference Jacobian, used to cross-check analytic derivatives.
Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x, double rel_step = 1e-6);

}  // namespace dlcz

#endif
