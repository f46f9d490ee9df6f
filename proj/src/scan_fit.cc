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

#include "dlcz/scan_fit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "dlcz/least_squares.h"

namespace dlcz {

const char* scan_kind_name(ScanKind kind) {
    switch (kind) {
        case ScanKind::write:
            return "write";
        case ScanKind::read:
            return "read";
        case ScanKind::read_no_write:
            return "read-no-write";
    }
    return "?";
}

ScanKind parse_scan_kind(const std::string& name) {
    if (name == "write") return ScanKind::write;
    if (name == "read") return ScanKind::read;
    if (name == "read-no-write") return ScanKind::read_no_write;
    throw std::invalid_argument("unknown scan kind '" + name + "'");
}

double ScanModel::leakage_center() const {
    return kind == ScanKind::write ? -zeeman_splitting : zeeman_splitting;
}

double scan_forward(const ScanModel& model, const ScanParams& p, double detuning) {
    return p.peak_amplitude * model.chain.relative_suppression(detuning) +
           p.pedestal_amplitude * lorentzian(detuning, p.pedestal_width) +
           p.leakage_amplitude * model.chain.relative_suppression(detuning - model.leakage_center()) +
           p.background;
}

namespace {

ScanParams unpack(const Eigen::VectorXd& x) {
    return ScanParams{x[0], x[1], x[2], x[3], x[4]};
}

}  // namespace

ScanProblem make_scan_problem(std::span<const ScanPoint> points, const ScanModel& model) {
    if (points.size() < 6) {
        throw std::invalid_argument("fit_scan needs at least 6 points");
    }
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!(p.pulses > 0.0) || p.counts < 0.0) {
            throw std::invalid_argument("fit_scan needs positive pulse counts and non-negative counts");
        }
        distinct.insert(p.detuning);
    }
    if (distinct.size() < 3) {
        throw std::invalid_argument("fit_scan: degenerate design, fewer than 3 distinct detunings");
    }

    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd y(m), w(m), d(m), narrow(m), leak(m);
    for (Eigen::Index i = 0; i < m; i++) {
        d[i] = points[i].detuning;
        y[i] = points[i].counts / points[i].pulses;
        w[i] = points[i].pulses / std::sqrt(std::max(points[i].counts, 1.0));
        narrow[i] = model.chain.relative_suppression(d[i]);
        leak[i] = model.chain.relative_suppression(d[i] - model.leakage_center());
    }
    double span = *distinct.rbegin() - *distinct.begin();
    double y_scale = std::max(y.cwiseAbs().maxCoeff(), 1e-300);

    ScanProblem out;
    LeastSquaresProblem& problem = out.problem;
    problem.lower = Eigen::VectorXd::Zero(5);
    problem.lower[2] = 1e-6 * span;
    problem.upper = Eigen::VectorXd::Constant(5, std::numeric_limits<double>::infinity());
    problem.upper[2] = 100.0 * span;
    problem.evaluate = [y, w, d, narrow, leak](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const Eigen::Index m = y.size();
        r.resize(m);
        if (jac) jac->resize(m, 5);
        for (Eigen::Index i = 0; i < m; i++) {
            double u = 2.0 * d[i] / x[2];
            double lor = 1.0 / (1.0 + u * u);
            r[i] = (x[0] * narrow[i] + x[1] * lor + x[3] * leak[i] + x[4] - y[i]) * w[i];
            if (jac) {
                (*jac)(i, 0) = narrow[i] * w[i];
                (*jac)(i, 1) = lor * w[i];
                (*jac)(i, 2) = x[1] * 2.0 * u * u * lor * lor / x[2] * w[i];
                (*jac)(i, 3) = leak[i] * w[i];
                (*jac)(i, 4) = w[i];
            }
        }
    };

    // Starts: for a ladder of pedestal widths, the amplitudes from a clamped linear solve.
    for (double frac : {0.25, 0.05, 1.0, 0.01, 4.0}) {
        double width = frac * span;
        Eigen::MatrixXd a(m, 4);
        for (Eigen::Index i = 0; i < m; i++) {
            double u = 2.0 * d[i] / width;
            a(i, 0) = narrow[i] * w[i];
            a(i, 1) = w[i] / (1.0 + u * u);
            a(i, 2) = leak[i] * w[i];
            a(i, 3) = w[i];
        }
        Eigen::VectorXd amp = a.colPivHouseholderQr().solve(y.cwiseProduct(w));
        Eigen::VectorXd x(5);
        x << std::max(amp[0], 1e-3 * y_scale), std::max(amp[1], 1e-3 * y_scale), width,
            std::max(amp[2], 0.0), std::max(amp[3], 0.0);
        out.starts.push_back(x);
    }
    return out;
}

ScanFit fit_scan(std::span<const ScanPoint> points, const ScanModel& model) {
    ScanProblem sp = make_scan_problem(points, model);
    const LeastSquaresProblem& problem = sp.problem;
    const auto& starts = sp.starts;
    LeastSquaresResult res = solve_multistart(problem, starts);
    if (!res.converged) {
        throw ConvergenceError("fit_scan: " + res.message);
    }

    ScanFit out;
    out.params = unpack(res.x);
    out.covariance = res.covariance;
    out.std_errors.resize(5);
    for (int i = 0; i < 5; i++) {
        double v = res.covariance(i, i);
        out.std_errors[i] = std::isfinite(v) ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    }
    out.leakage_center = model.leakage_center();
    double pk = out.params.peak_amplitude, pd = out.params.pedestal_amplitude;
    if (pk + pd > 0.0) {
        out.write_efficiency = pk / (pk + pd);
        // Delta method on peak / (peak + pedestal).
        double s = (pk + pd) * (pk + pd);
        double g0 = pd / s, g1 = -pk / s;
        double var = g0 * g0 * res.covariance(0, 0) + 2.0 * g0 * g1 * res.covariance(0, 1) +
                     g1 * g1 * res.covariance(1, 1);
        out.write_efficiency_std_error = var >= 0.0 ? std::sqrt(var) : 0.0;
    }
    out.objective = res.cost;
    out.iterations = res.iterations;
    out.message = res.message;
    return out;
}

LeakageCalibration calibrate_leakage(std::span<const SliceScan> slices, const ScanModel& model) {
    if (slices.size() < 2) {
        throw std::invalid_argument("calibrate_leakage needs at least 2 slices");
    }
    LeakageCalibration out;
    for (const auto& slice : slices) {
        if (!(slice.slice_duration > 0.0)) {
            throw std::invalid_argument("calibrate_leakage: slice duration must be positive");
        }
        ScanFit f = fit_scan(slice.points, model);
        out.slice_centers.push_back(slice.slice_start + 0.5 * slice.slice_duration);
        out.slice_rates.push_back(f.params.leakage_amplitude / slice.slice_duration);
        double e = f.std_errors[3];
        if (!std::isfinite(e) || e <= 0.0) {
            e = std::max(1e-12, 1e-3 * f.params.leakage_amplitude);
        }
        out.slice_rate_errors.push_back(e / slice.slice_duration);
    }
    // Weighted straight line.
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < slices.size(); k++) {
        double wt = 1.0 / (out.slice_rate_errors[k] * out.slice_rate_errors[k]);
        double x = out.slice_centers[k], yv = out.slice_rates[k];
        sw += wt;
        sx += wt * x;
        sy += wt * yv;
        sxx += wt * x * x;
        sxy += wt * x * yv;
    }
    double den = sw * sxx - sx * sx;
    if (!(den > 0.0)) {
        throw std::invalid_argument("calibrate_leakage: slices must have distinct centers");
    }
    out.l1 = (sw * sxy - sx * sy) / den;
    out.l0 = (sxx * sy - sx * sxy) / den;
    out.l1_std_error = std::sqrt(sw / den);
    out.l0_std_error = std::sqrt(sxx / den);
    return out;
}

}  // namespace dlcz
