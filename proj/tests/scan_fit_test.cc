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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dlcz/config.h"
#include "dlcz/source_sim.h"

using namespace dlcz;

namespace {

ScanModel nominal_model(ScanKind kind) {
    return ScanModel{FilterChain(ExperimentConfig{}.filter_chain), 2.4e6, kind};
}

const std::vector<double> kDetunings{-6e6, -4e6, -3e6, -2.4e6, -2e6, -1.5e6, -1e6, -0.5e6, -0.25e6, 0.0,
                                     0.25e6, 0.5e6, 1e6, 1.5e6, 2e6, 2.4e6, 3e6, 4e6, 6e6};

std::vector<ScanPoint> synthetic(const ScanModel& m, const ScanParams& p, double pulses, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<ScanPoint> out;
    for (double d : kDetunings) {
        double mean = scan_forward(m, p, d) * pulses;
        double c = seed == 0 ? mean : static_cast<double>(std::poisson_distribution<int64_t>(mean)(gen));
        out.push_back({d, c, pulses});
    }
    return out;
}

// Read scans skip the detunings where the filters sit on the read drive
// itself: unsuppressed leakage gives ~1000 clicks per trial there.
const std::vector<double> kReadDetunings{-6e6, -4e6, -3e6, -2e6, -1.5e6, -1e6, -0.5e6, -0.25e6, 0.0,
                                         0.25e6, 0.5e6, 1e6, 1.5e6, 2e6, 3e6, 4e6, 6e6};

std::vector<ScanPoint> simulated(ExperimentConfig cfg, ScanKind kind, uint64_t trials, uint64_t seed) {
    if (kind == ScanKind::read_no_write) cfg.write_enabled = false;
    std::vector<ScanPoint> out;
    uint64_t first = 0;
    for (double d : kind == ScanKind::write ? kDetunings : kReadDetunings) {
        cfg.filter_detuning = d;
        SourceSimulator sim(cfg);
        double counts = 0.0;
        if (kind == ScanKind::write) {
            for (uint64_t i = 0; i < trials; i++) {
                StreamRng rng = StreamRng::derive(seed, first + i);
                counts += static_cast<double>(sim.sample_write(rng).clicks.size());
            }
        } else {
            sim.simulate(
                trials, seed,
                [&](std::span<const TrialRecord> chunk) {
                    for (const auto& r : chunk) counts += static_cast<double>(r.read_clicks.size());
                },
                1, first);
        }
        first += trials;
        out.push_back({d, counts, static_cast<double>(trials)});
    }
    return out;
}

}  // namespace

TEST(ScanForward, LimitsAndCenter) {
    ScanModel m = nominal_model(ScanKind::write);
    ScanParams p{0.01, 0.005, 1.5e6, 0.002, 1e-4};
    EXPECT_NEAR(scan_forward(m, p, 0.0),
                0.01 + 0.005 + 0.002 * m.chain.relative_suppression(2.4e6) + 1e-4, 1e-15);
    EXPECT_NEAR(scan_forward(m, p, 1e12), 1e-4, 1e-12);
    EXPECT_EQ(m.leakage_center(), -2.4e6);
    EXPECT_EQ(nominal_model(ScanKind::read).leakage_center(), 2.4e6);
    EXPECT_EQ(parse_scan_kind(scan_kind_name(ScanKind::read_no_write)), ScanKind::read_no_write);
    EXPECT_THROW(parse_scan_kind("both"), std::invalid_argument);
}

TEST(ScanFit, NoiselessRecovery) {
    ScanModel m = nominal_model(ScanKind::write);
    ScanParams truth{0.63e-2, 0.37e-2, 1.5e6, 0.3e-2, 2e-4};
    ScanFit f = fit_scan(synthetic(m, truth, 1e6, 0), m);
    EXPECT_NEAR(f.params.peak_amplitude / truth.peak_amplitude, 1.0, 1e-6);
    EXPECT_NEAR(f.params.pedestal_width / truth.pedestal_width, 1.0, 1e-6);
    EXPECT_NEAR(f.write_efficiency, 0.63, 1e-6);
    EXPECT_EQ(f.std_errors.size(), 5u);
}

TEST(ScanFit, PoissonRecoveryOfWriteEfficiency) {
    ScanModel m = nominal_model(ScanKind::write);
    ScanParams truth{0.63 * 0.014, 0.37 * 0.014, 1.5e6, 0.2e-2, 1e-4};
    ScanFit f = fit_scan(synthetic(m, truth, 1e6, 3), m);
    EXPECT_NEAR(f.write_efficiency, 0.63, 0.02);
    EXPECT_LT(std::abs(f.write_efficiency - 0.63), 3.0 * f.write_efficiency_std_error);
}

TEST(ScanFit, ZeroPedestalGivesUnitEfficiency) {
    ScanModel m = nominal_model(ScanKind::write);
    ScanParams truth{0.01, 0.0, 1.5e6, 0.002, 1e-4};
    ScanFit f = fit_scan(synthetic(m, truth, 1e6, 0), m);
    EXPECT_NEAR(f.write_efficiency, 1.0, 1e-6);
}

TEST(ScanFit, JacobianMatchesFiniteDifference) {
    ScanModel m = nominal_model(ScanKind::read);
    ScanProblem sp = make_scan_problem(synthetic(m, ScanParams{0.01, 0.004, 1.2e6, 0.003, 1e-4}, 1e5, 0), m);
    Eigen::VectorXd x(5);
    x << 0.008, 0.005, 1.0e6, 0.002, 2e-4;
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    sp.problem.evaluate(x, r, &j);
    EXPECT_LT((numeric_jacobian(sp.problem.evaluate, x) - j).norm() / j.norm(), 1e-6);
}

TEST(ScanFit, DegenerateDesigns) {
    ScanModel m = nominal_model(ScanKind::write);
    std::vector<ScanPoint> few(5, ScanPoint{0.0, 10.0, 100.0});
    EXPECT_THROW(fit_scan(few, m), std::invalid_argument);
    std::vector<ScanPoint> two_det;
    for (int k = 0; k < 8; k++) two_det.push_back({k % 2 ? 1e6 : 0.0, 10.0, 100.0});
    EXPECT_THROW(fit_scan(two_det, m), std::invalid_argument);
    auto pts = synthetic(m, ScanParams{0.01, 0.004, 1.2e6, 0.003, 1e-4}, 1e5, 0);
    pts[2].pulses = 0.0;
    EXPECT_THROW(fit_scan(pts, m), std::invalid_argument);
}

TEST(ScanFit, SimulatedWriteScan) {
    ScanModel m = nominal_model(ScanKind::write);
    ScanFit f = fit_scan(simulated(ExperimentConfig{}, ScanKind::write, 300000, 41), m);
    EXPECT_NEAR(f.write_efficiency, 0.63, 0.03);
    EXPECT_TRUE(std::isfinite(f.write_efficiency_std_error));
    EXPECT_GT(f.write_efficiency_std_error, 0.0);
    // Counts per pulse at zero detuning.
    EXPECT_NEAR(scan_forward(m, f.params, 0.0), 0.014, 0.014 * 0.05);
}

TEST(ScanFit, ReadPeakPersistsWithoutWrite) {
    ExperimentConfig c;
    ScanModel with_m = nominal_model(ScanKind::read);
    ScanModel without_m = nominal_model(ScanKind::read_no_write);
    ScanFit with = fit_scan(simulated(c, ScanKind::read, 100000, 42), with_m);
    ScanFit without = fit_scan(simulated(c, ScanKind::read_no_write, 100000, 43), without_m);
    EXPECT_GT(without.params.peak_amplitude, 0.0);
    EXPECT_GT(with.params.peak_amplitude, without.params.peak_amplitude);
}

TEST(LeakageCalibration, RecoversLinearRate) {
    ScanModel m = nominal_model(ScanKind::read_no_write);
    const double l0 = 40.0, l1 = 3e5, slice = 32e-6;
    std::vector<SliceScan> slices;
    for (int k = 0; k < 6; k++) {
        double t0 = k * slice;
        double leak = l0 * slice + l1 * (t0 * slice + 0.5 * slice * slice);
        ScanParams p{0.001, 0.0005, 1.5e6, leak, 1e-5};
        slices.push_back({t0, slice, synthetic(m, p, 1e6, 0)});
    }
    LeakageCalibration c = calibrate_leakage(slices, m);
    EXPECT_NEAR(c.l0 / l0, 1.0, 1e-4);
    EXPECT_NEAR(c.l1 / l1, 1.0, 1e-4);
    ASSERT_EQ(c.slice_rates.size(), 6u);
    EXPECT_THROW(calibrate_leakage(std::span<const SliceScan>(slices.data(), 1), m), std::invalid_argument);
}
