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

#ifndef DLCZ_SHAPE_MODEL_H
#define DLCZ_SHAPE_MODEL_H

#include <span>
#include <string>
#include <vector>

#include "dlcz/config.h"
#include "dlcz/filter_chain.h"
#include "dlcz/least_squares.h"
#include "dlcz/time_series.h"

namespace dlcz {

/// Parameters of the read-photon temporal model.
///
/// The detected rate at time t after the start of the read pulse is
///
///   eta * chi^2 W N e^x * n_ce                          (retrieval)
/// + eta * alpha^2 chi^2 W N / (alpha^2 - 1) * (e^x - 1)  (four-wave mixing)
/// + (L0 + L1 t) W + BG                                    (leakage, background)
///
/// with W = Omega^2(t), N = exp(-t / T1) and x = t (alpha^2 - 1) chi^2 W N.
/// The leakage and background coefficients are detected rates; eta converts
/// photons leaving the atoms into detector clicks.
struct ShapeModelParams {
    double chi_r = 0.0;
    TimeSeries alpha_of_t;
    TimeSeries omega_sq_of_t;
    double T1 = 1.1e-3;
    double n_ce = 0.0;
    double L0 = 0.0;
    double L1 = 0.0;
    double BG = 0.0;
    double detection_efficiency = 1.0;

    /// Model matching what the simulator produces for `config` at its write-read delay.
    static ShapeModelParams from_config(const ExperimentConfig& config, double n_ce);

    /// [start, end] on which both time series are defined.
    double coverage_begin() const;
    double coverage_end() const;

    /// Same model with time measured in units `factor` times smaller (e.g. 1e6 for s -> us).
    ShapeModelParams rescaled_time(double factor) const;
};

struct ShapeTerms {
    double retrieval = 0.0;
    double fwm = 0.0;
    double leakage = 0.0;
    double background = 0.0;

    double total() const { return retrieval + fwm + leakage + background; }
};

/// Per-term detected rate. Throws std::out_of_range outside the time-series coverage.
ShapeTerms shape_terms(const ShapeModelParams& params, double t);
double shape_forward(const ShapeModelParams& params, double t);

/// Emission density of one stored excitation, before detection (chi^2 W N e^x).
double retrieval_density(const ShapeModelParams& params, double t);
/// Four-wave-mixing photon emission rate, before detection.
double fwm_emission_rate(const ShapeModelParams& params, double t);

/// Mean detected photons in [a, b], term by term (adaptive Gauss-Kronrod split at the knots).
ShapeTerms shape_integrate_terms(const ShapeModelParams& params, double a, double b);
double shape_integrate(const ShapeModelParams& params, double a, double b);
double shape_integrate(const ShapeModelParams& params, double tau_r);

/// Click histogram on a uniform grid. `counts` are totals over `n_pulses` trials.
struct BinnedCounts {
    double t_start = 0.0;
    double bin_width = 0.0;
    std::vector<double> counts;
    double n_pulses = 0.0;

    size_t size() const { return counts.size(); }
    double bin_lo(size_t k) const { return t_start + bin_width * static_cast<double>(k); }
    double bin_hi(size_t k) const { return t_start + bin_width * static_cast<double>(k + 1); }
};

/// One with-write / without-write pair sharing the coupling; n_ce is the
/// mean stored excitation number appropriate to that pair (unconditional or heralded).
struct ChiFitDataset {
    BinnedCounts with_write;
    BinnedCounts without_write;
    double n_ce = 0.0;
    std::string label;
};

struct ChiFitOptions {
    double exclude_head = 25e-6;
    double exclude_tail = 25e-6;
    int starts = 5;
};

struct ChiFitResult {
    double chi_r = 0.0;
    double chi_r_stderr = 0.0;
    double objective = 0.0;
    int iterations = 0;
    size_t bins_used = 0;
    bool converged = false;
    std::string message;
};

/// Weighted residuals of the chi_r fit in theta = chi_r^2, with the linear-model start.
struct ChiFitProblem {
    LeastSquaresProblem problem;
    Eigen::VectorXd start;
    size_t bins_used = 0;
};

ChiFitProblem make_chi_fit_problem(std::span<const ChiFitDataset> datasets, const ShapeModelParams& fixed,
                                   const ChiFitOptions& options = {});

/// Fits chi_r to the write-induced excess of read clicks.
///
/// The difference (with write - without write) per pulse removes four-wave
/// mixing, leakage and background, leaving only the retrieval term. Bins
/// closer than exclude_head / exclude_tail to the ends of the histogram are
/// ignored. All other parameters come from `fixed`; its chi_r and n_ce are
/// ignored in favour of the fit variable and each dataset's n_ce.
ChiFitResult fit_chi_r(std::span<const ChiFitDataset> datasets, const ShapeModelParams& fixed,
                       const ChiFitOptions& options = {});

/// Per-bin model components next to the data, as rates per pulse (counts/s).
struct ShapeDecomposition {
    std::vector<double> bin_start;
    std::vector<double> bin_width;
    std::vector<double> data;
    std::vector<double> retrieval;
    std::vector<double> fwm;
    std::vector<double> leakage;
    std::vector<double> background;
    /// data - (retrieval + fwm + leakage + background).
    std::vector<double> residual;
};

/// Evaluates the fitted model on the histogram grid. Retrieval, FWM and
/// leakage are passed through the filter-chain buildup/ringdown response;
/// the background is detector-side and stays flat.
ShapeDecomposition decompose_shape(const ShapeModelParams& params, const BinnedCounts& data,
                                   const FilterChain& chain);

}  // namespace dlcz

#endif
