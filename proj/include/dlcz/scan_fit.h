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

#ifndef DLCZ_SCAN_FIT_H
#define DLCZ_SCAN_FIT_H

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dlcz/filter_chain.h"
#include "dlcz/least_squares.h"

namespace dlcz {

enum class ScanKind { write, read, read_no_write };

const char* scan_kind_name(ScanKind kind);
ScanKind parse_scan_kind(const std::string& name);

/// Fixed part of the scan model: the filters being detuned and where the leaking drive sits.
struct ScanModel {
    FilterChain chain;
    double zeeman_splitting = 2.4e6;
    ScanKind kind = ScanKind::write;

    /// -nu_Z for write scans, +nu_Z for read scans.
    double leakage_center() const;
};

struct ScanParams {
    double peak_amplitude = 0.0;
    double pedestal_amplitude = 0.0;
    double pedestal_width = 1.5e6;
    double leakage_amplitude = 0.0;
    double background = 0.0;
};

/// Counts per pulse with the filters detuned by `detuning` from the photon frequency.
double scan_forward(const ScanModel& model, const ScanParams& params, double detuning);

struct ScanPoint {
    double detuning = 0.0;
    double counts = 0.0;
    double pulses = 1.0;
};

struct ScanFit {
    ScanParams params;
    /// Standard errors in the same order as the ScanParams fields.
    std::vector<double> std_errors;
    Eigen::MatrixXd covariance;
    double leakage_center = 0.0;
    /// peak / (peak + pedestal) at zero detuning.
    double write_efficiency = 0.0;
    double write_efficiency_std_error = 0.0;
    double objective = 0.0;
    int iterations = 0;
    std::string message;
};

/// Weighted residuals over (peak, pedestal, pedestal width, leakage, background),
/// with bounds and the multistart initial points.
struct ScanProblem {
    LeastSquaresProblem problem;
    std::vector<Eigen::VectorXd> starts;
};

ScanProblem make_scan_problem(std::span<const ScanPoint> points, const ScanModel& model);

/// Poisson-weighted least squares of scan_forward to counts per pulse.
/// Needs at least 6 points over at least 3 distinct detunings.
ScanFit fit_scan(std::span<const ScanPoint> points, const ScanModel& model);

/// A scan restricted to one time slice of the read pulse.
struct SliceScan {
    double slice_start = 0.0;
    double slice_duration = 0.0;
    std::vector<ScanPoint> points;
};

struct LeakageCalibration {
    /// Leakage rate model L0 + L1 t, counts/s.
    double l0 = 0.0;
    double l1 = 0.0;
    double l0_std_error = 0.0;
    double l1_std_error = 0.0;
    std::vector<double> slice_centers;
    std::vector<double> slice_rates;
    std::vector<double> slice_rate_errors;
};

/// Fits every slice and regresses the leakage rate on the slice center.
LeakageCalibration calibrate_leakage(std::span<const SliceScan> slices, const ScanModel& model);

}  // namespace dlcz

#endif
