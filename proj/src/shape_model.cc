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

#include "dlcz/shape_model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dlcz/least_squares.h"

namespace dlcz {

namespace {

// (e^x - 1) / x, continuous through x = 0.
double expm1_over_x(double x) {
    if (std::abs(x) < 1e-6) {
        return 1.0 + x * (0.5 + x / 6.0);
    }
    return std::expm1(x) / x;
}

struct Local {
    double w;      // Omega^2
    double pop;    // N / N0
    double a2;     // alpha^2
    double theta;  // chi^2
    double x;      // exponent
};

Local local_values(const ShapeModelParams& p, double t) {
    Local v{};
    v.w = p.omega_sq_of_t(t);
    v.pop = std::exp(-t / p.T1);
    double alpha = p.alpha_of_t(t);
    v.a2 = alpha * alpha;
    v.theta = p.chi_r * p.chi_r;
    v.x = t * (v.a2 - 1.0) * v.theta * v.w * v.pop;
    return v;
}

void require_covered(const ShapeModelParams& p, double a, double b) {
    if (a < p.coverage_begin() || b > p.coverage_end()) {
        throw std::out_of_range("shape model evaluated outside the drive/alpha time-series coverage");
    }
}

// Knot times of both series strictly inside (a, b), plus the end points.
std::vector<double> breakpoints(const ShapeModelParams& p, double a, double b) {
    std::vector<double> pts{a, b};
    for (const TimeSeries* s : {&p.alpha_of_t, &p.omega_sq_of_t}) {
        for (const auto& k : s->knots()) {
            if (k.first > a && k.first < b) {
                pts.push_back(k.first);
            }
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

template <class F>
double integrate_piecewise(const ShapeModelParams& p, double a, double b, F&& f) {
    using boost::math::quadrature::gauss_kronrod;
    auto pts = breakpoints(p, a, b);
    double total = 0.0;
    for (size_t k = 0; k + 1 < pts.size(); k++) {
        // Integrate over s in [0, 1]: the library's error estimate is not scaled by the interval length.
        double lo = pts[k], width = pts[k + 1] - pts[k];
        auto g = [&](double s) { return f(lo + s * width) * width; };
        total += gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 12, 1e-13);
    }
    return total;
}

}  // namespace

ShapeModelParams ShapeModelParams::from_config(const ExperimentConfig& c, double n_ce) {
    ShapeModelParams p;
    p.chi_r = c.fwm_couplings.chi_r;
    p.alpha_of_t = c.fwm_couplings.alpha_table;
    p.omega_sq_of_t = c.drive_profile;
    p.T1 = c.population_decay;
    p.n_ce = n_ce;
    p.L0 = c.leakage_coeffs.l0 + c.leakage_coeffs.l1 * c.write_read_delay;
    p.L1 = c.leakage_coeffs.l1;
    p.BG = c.dark_rate;
    p.detection_efficiency = c.collection_efficiency();
    return p;
}

double ShapeModelParams::coverage_begin() const {
    return std::max(alpha_of_t.t_front(), omega_sq_of_t.t_front());
}

double ShapeModelParams::coverage_end() const { return std::min(alpha_of_t.t_back(), omega_sq_of_t.t_back()); }

ShapeModelParams ShapeModelParams::rescaled_time(double factor) const {
    ShapeModelParams p = *this;
    p.alpha_of_t = alpha_of_t.rescaled_time(factor);
    p.omega_sq_of_t = omega_sq_of_t.rescaled_time(factor);
    p.T1 = T1 * factor;
    // Rates scale as 1/time; chi^2 is a rate.
    p.chi_r = chi_r / std::sqrt(factor);
    p.L0 = L0 / factor;
    p.L1 = L1 / (factor * factor);
    p.BG = BG / factor;
    return p;
}

double retrieval_density(const ShapeModelParams& p, double t) {
    require_covered(p, t, t);
    Local v = local_values(p, t);
    return v.theta * v.w * v.pop * std::exp(v.x);
}

double fwm_emission_rate(const ShapeModelParams& p, double t) {
    require_covered(p, t, t);
    Local v = local_values(p, t);
    double s = v.theta * v.w * v.pop;
    return v.a2 * s * (s * t) * expm1_over_x(v.x);
}

ShapeTerms shape_terms(const ShapeModelParams& p, double t) {
    require_covered(p, t, t);
    Local v = local_values(p, t);
    double s = v.theta * v.w * v.pop;
    ShapeTerms out;
    out.retrieval = p.detection_efficiency * p.n_ce * s * std::exp(v.x);
    out.fwm = p.detection_efficiency * v.a2 * s * (s * t) * expm1_over_x(v.x);
    out.leakage = (p.L0 + p.L1 * t) * v.w;
    out.background = p.BG;
    return out;
}

double shape_forward(const ShapeModelParams& p, double t) { return shape_terms(p, t).total(); }

ShapeTerms shape_integrate_terms(const ShapeModelParams& p, double a, double b) {
    if (b < a) {
        throw std::invalid_argument("shape_integrate: inverted interval");
    }
    require_covered(p, a, b);
    ShapeTerms out;
    if (a == b) {
        return out;
    }
    out.retrieval = integrate_piecewise(p, a, b, [&](double t) { return shape_terms(p, t).retrieval; });
    out.fwm = integrate_piecewise(p, a, b, [&](double t) { return shape_terms(p, t).fwm; });
    out.leakage = integrate_piecewise(p, a, b, [&](double t) { return shape_terms(p, t).leakage; });
    out.background = p.BG * (b - a);
    return out;
}

double shape_integrate(const ShapeModelParams& p, double a, double b) {
    if (b < a) {
        throw std::invalid_argument("shape_integrate: inverted interval");
    }
    require_covered(p, a, b);
    if (a == b) {
        return 0.0;
    }
    return integrate_piecewise(p, a, b, [&](double t) { return shape_forward(p, t); });
}

double shape_integrate(const ShapeModelParams& p, double tau_r) { return shape_integrate(p, 0.0, tau_r); }

namespace {

struct ChiBin {
    double lo, hi, value, sigma, n_ce;
};

}  // namespace

ChiFitProblem make_chi_fit_problem(std::span<const ChiFitDataset> datasets, const ShapeModelParams& fixed,
                                   const ChiFitOptions& options) {
    if (datasets.empty()) {
        throw std::invalid_argument("fit_chi_r: no datasets");
    }
    std::vector<ChiBin> bins;
    for (const auto& d : datasets) {
        const auto& w = d.with_write;
        const auto& nw = d.without_write;
        if (w.size() != nw.size() || w.t_start != nw.t_start || w.bin_width != nw.bin_width) {
            throw std::invalid_argument("fit_chi_r: with/without-write histograms must share one grid");
        }
        if (!(w.n_pulses > 0.0) || !(nw.n_pulses > 0.0) || !(w.bin_width > 0.0)) {
            throw std::invalid_argument("fit_chi_r: histograms need positive pulse counts and bin width");
        }
        if (!(d.n_ce >= 0.0)) {
            throw std::invalid_argument("fit_chi_r: n_ce must be non-negative");
        }
        double keep_lo = w.bin_lo(0) + options.exclude_head;
        double keep_hi = w.bin_hi(w.size() - 1) - options.exclude_tail;
        for (size_t k = 0; k < w.size(); k++) {
            double lo = w.bin_lo(k), hi = w.bin_hi(k);
            if (lo < keep_lo - 1e-12 * w.bin_width || hi > keep_hi + 1e-12 * w.bin_width) {
                continue;
            }
            double value = w.counts[k] / w.n_pulses - nw.counts[k] / nw.n_pulses;
            double var = std::max(w.counts[k], 1.0) / (w.n_pulses * w.n_pulses) +
                         std::max(nw.counts[k], 1.0) / (nw.n_pulses * nw.n_pulses);
            bins.push_back({lo, hi, value, std::sqrt(var), d.n_ce});
        }
    }
    if (bins.empty()) {
        throw std::invalid_argument("fit_chi_r: no bins left after excluding the edges");
    }
    for (const auto& b : bins) {
        require_covered(fixed, b.lo, b.hi);
    }

    const double eta = fixed.detection_efficiency;
    // Parameter is theta = chi^2; model is linear in theta when alpha = 1.
    auto evaluate = [bins, fixed, eta](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        ShapeModelParams p = fixed;
        p.chi_r = std::sqrt(std::max(x[0], 0.0));
        r.resize(static_cast<Eigen::Index>(bins.size()));
        if (jac) jac->resize(r.size(), 1);
        for (size_t k = 0; k < bins.size(); k++) {
            const ChiBin& b = bins[k];
            double model = b.n_ce * eta * integrate_piecewise(p, b.lo, b.hi, [&](double t) {
                               return retrieval_density(p, t);
                           });
            r[static_cast<Eigen::Index>(k)] = (model - b.value) / b.sigma;
            if (jac) {
                double d = b.n_ce * eta * integrate_piecewise(p, b.lo, b.hi, [&](double t) {
                               Local v = local_values(p, t);
                               return v.w * v.pop * std::exp(v.x) * (1.0 + v.x);
                           });
                (*jac)(static_cast<Eigen::Index>(k), 0) = d / b.sigma;
            }
        }
    };

    // Linear estimate at alpha = 1 seeds the starts.
    double num = 0.0, den = 0.0;
    {
        ShapeModelParams p = fixed;
        p.chi_r = 1.0;
        p.alpha_of_t = TimeSeries::constant(1.0, p.coverage_begin(), p.coverage_end());
        for (const auto& b : bins) {
            double basis = b.n_ce * eta * integrate_piecewise(p, b.lo, b.hi, [&](double t) {
                               return retrieval_density(p, t);
                           });
            num += basis * b.value / (b.sigma * b.sigma);
            den += basis * basis / (b.sigma * b.sigma);
        }
    }
    if (!(den > 0.0)) {
        throw ConvergenceError("fit_chi_r: model has no sensitivity to chi_r (n_ce or drive is zero)");
    }
    double theta0 = std::max(num / den, 0.0);

    ChiFitProblem out;
    out.problem = LeastSquaresProblem{evaluate, Eigen::VectorXd::Constant(1, 0.0),
                                      Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity())};
    out.start = Eigen::VectorXd::Constant(1, theta0);
    out.bins_used = bins.size();
    return out;
}

ChiFitResult fit_chi_r(std::span<const ChiFitDataset> datasets, const ShapeModelParams& fixed,
                       const ChiFitOptions& options) {
    ChiFitProblem cp = make_chi_fit_problem(datasets, fixed, options);
    const LeastSquaresProblem& problem = cp.problem;
    const Eigen::VectorXd& x0 = cp.start;
    auto starts = jittered_starts(x0, problem.lower, problem.upper, std::max(options.starts, 1));
    LeastSquaresResult res = solve_multistart(problem, starts);
    if (!res.converged) {
        throw ConvergenceError("fit_chi_r did not converge: " + res.message);
    }
    if (!res.curvature_positive) {
        throw ConvergenceError("fit_chi_r: non-positive curvature at the optimum");
    }

    ChiFitResult out;
    double theta = res.x[0];
    double theta_var = res.covariance(0, 0);
    out.chi_r = std::sqrt(theta);
    out.chi_r_stderr = theta > 0.0 ? std::sqrt(theta_var) / (2.0 * out.chi_r) : std::sqrt(std::sqrt(theta_var));
    out.objective = res.cost;
    out.iterations = res.iterations;
    out.bins_used = cp.bins_used;
    out.converged = res.converged;
    out.message = res.message;
    return out;
}

ShapeDecomposition decompose_shape(const ShapeModelParams& params, const BinnedCounts& data,
                                   const FilterChain& chain) {
    ShapeDecomposition out;
    if (data.size() == 0) {
        return out;
    }
    if (!(data.bin_width > 0.0) || !(data.n_pulses > 0.0)) {
        throw std::invalid_argument("decompose_shape: histogram needs positive bin width and pulse count");
    }
    const double t_end = data.bin_hi(data.size() - 1);
    const double t0 = std::min(0.0, data.t_start);
    double dt = data.bin_width / 20.0;
    if (!chain.empty()) {
        double fastest = 1e300;
        for (const auto& cav : chain.cavities()) {
            fastest = std::min(fastest, photon_lifetime(cav));
        }
        dt = std::min(dt, fastest / 10.0);
    }
    const auto steps = static_cast<size_t>(std::ceil((t_end - t0) / dt));
    dt = (t_end - t0) / static_cast<double>(steps);

    const double cov_lo = params.coverage_begin(), cov_hi = params.coverage_end();
    std::vector<double> ret(steps), fwm(steps), leak(steps);
    for (size_t k = 0; k < steps; k++) {
        double t = t0 + (static_cast<double>(k) + 0.5) * dt;
        if (t < cov_lo || t > cov_hi) {
            continue;  // drive off
        }
        ShapeTerms terms = shape_terms(params, t);
        ret[k] = terms.retrieval;
        fwm[k] = terms.fwm;
        leak[k] = terms.leakage;
    }
    // Each cavity acts as a first-order low-pass with its ringdown time.
    for (const auto& cav : chain.cavities()) {
        double decay = std::exp(-dt / photon_lifetime(cav));
        for (std::vector<double>* series : {&ret, &fwm, &leak}) {
            double y = 0.0;
            for (double& v : *series) {
                y = y * decay + (1.0 - decay) * v;
                v = y;
            }
        }
    }

    auto bin_average = [&](const std::vector<double>& s, double lo, double hi) {
        double acc = 0.0;
        auto first = static_cast<size_t>(std::max(0.0, std::floor((lo - t0) / dt)));
        for (size_t k = first; k < steps; k++) {
            double a = t0 + static_cast<double>(k) * dt, b = a + dt;
            if (a >= hi) break;
            double overlap = std::min(b, hi) - std::max(a, lo);
            if (overlap > 0.0) acc += s[k] * overlap;
        }
        return acc / (hi - lo);
    };

    for (size_t k = 0; k < data.size(); k++) {
        double lo = data.bin_lo(k), hi = data.bin_hi(k);
        out.bin_start.push_back(lo);
        out.bin_width.push_back(data.bin_width);
        double d = data.counts[k] / (data.n_pulses * data.bin_width);
        double r = bin_average(ret, lo, hi);
        double f = bin_average(fwm, lo, hi);
        double l = bin_average(leak, lo, hi);
        out.data.push_back(d);
        out.retrieval.push_back(r);
        out.fwm.push_back(f);
        out.leakage.push_back(l);
        out.background.push_back(params.BG);
        out.residual.push_back(d - (r + f + l + params.BG));
    }
    return out;
}

}  // namespace dlcz
