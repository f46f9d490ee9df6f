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

#include "dlcz/source_sim.h"

#include <gtest/gtest.h>

#include <cmath>

#include "dlcz/stats.h"
#include "oracles.h"

using namespace dlcz;

namespace {

// Retrieval only: no FWM (alpha -> 0 removes the four-wave-mixing term), leakage or darks.
ExperimentConfig quiet_config() {
    ExperimentConfig c;
    c.fwm_couplings.alpha_table = TimeSeries::constant(1e-4, 0.0, c.read_duration);
    c.leakage_coeffs = {0.0, 0.0};
    c.dark_rate = 0.0;
    return c;
}

// p_conv = integral of chi^2 W N exp(t (alpha^2 - 1) chi^2 W N) over [0, tau], by composite Simpson.
double simpson_conversion(const ExperimentConfig& c, double tau) {
    const int n = 20000;
    double chi2 = c.fwm_couplings.chi_r * c.fwm_couplings.chi_r;
    auto f = [&](double t) {
        double w = c.drive_profile(t), pop = std::exp(-t / c.population_decay);
        double a = c.fwm_couplings.alpha_table(t);
        return chi2 * w * pop * std::exp(t * (a * a - 1.0) * chi2 * w * pop);
    };
    double h = tau / n, s = f(0.0) + f(tau);
    for (int k = 1; k < n; k++) s += f(k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST(SourceSim, ZeroMuGivesNoPhotons) {
    ExperimentConfig c;
    c.mean_write_excitations = 0.0;
    SourceSimulator sim(c);
    for (uint64_t i = 0; i < 20000; i++) {
        StreamRng rng = StreamRng::derive(5, i);
        WriteOutcome w = sim.sample_write(rng);
        EXPECT_EQ(w.state.n_symmetric + w.state.n_asymmetric, 0);
        EXPECT_TRUE(w.clicks.empty());
    }
}

TEST(SourceSim, MeanWriteClicksAtNominal) {
    SourceSimulator sim{ExperimentConfig{}};
    ExperimentConfig c;
    double analytic = c.mean_write_excitations *
                      (c.write_efficiency + (1.0 - c.write_efficiency) * c.pedestal_pass) *
                      c.escape_efficiency * c.detection_efficiency;
    EXPECT_NEAR(sim.expected_write_clicks(), analytic, 1e-15);
    EXPECT_NEAR(analytic / 0.0140, 1.0, 0.02);

    const uint64_t n = 1000000;
    uint64_t clicks = 0;
    for (uint64_t i = 0; i < n; i++) {
        StreamRng rng = StreamRng::derive(77, i);
        clicks += sim.sample_write(rng).clicks.size();
    }
    double mean = static_cast<double>(clicks) / n;
    EXPECT_NEAR(mean / 0.0140, 1.0, 0.02);
    EXPECT_LT(std::abs(mean - analytic), 3.0 * std::sqrt(analytic / n));
}

TEST(SourceSim, WriteClicksAreThermal) {
    ExperimentConfig c;
    c.detection_efficiency = 1.0;
    c.escape_efficiency = 1.0;
    c.dead_time = 0.0;
    SourceSimulator sim(c);
    const uint64_t n = 10000000;
    std::vector<uint32_t> counts(n);
    for (uint64_t i = 0; i < n; i++) {
        StreamRng rng = StreamRng::derive(3, i);
        counts[i] = static_cast<uint32_t>(sim.sample_write(rng).clicks.size());
    }
    EXPECT_NEAR(g2_auto(counts), 2.0, 0.02);
}

TEST(SourceSim, EvolveZeroDelayIsIdentity) {
    ExperimentConfig c;
    SpinWaveState s{5, 3, 1e-6};
    StreamRng rng(1);
    EXPECT_EQ(evolve_spin_wave(s, 0.0, c, rng), s);
    EXPECT_THROW(evolve_spin_wave(s, -1e-9, c, rng), std::invalid_argument);
}

TEST(SourceSim, SurvivalAtOneLifetimeIsOneOverE) {
    ExperimentConfig c;
    const int n = 1000000;
    int alive = 0, asym_alive = 0;
    for (int i = 0; i < n; i++) {
        StreamRng rng = StreamRng::derive(11, i);
        SpinWaveState s = evolve_spin_wave({1, 1, 0.0}, c.spin_wave_lifetime, c, rng);
        alive += static_cast<int>(s.n_symmetric);
        asym_alive += static_cast<int>(s.n_asymmetric);
    }
    EXPECT_NEAR(static_cast<double>(alive) / n / std::exp(-1.0), 1.0, 0.005);
    EXPECT_EQ(asym_alive, 0);  // exp(-270) survival
}

TEST(SourceSim, NoSourcesNoReadClicks) {
    ExperimentConfig c;
    c.fwm_couplings.chi_r = 0.0;
    c.leakage_coeffs = {0.0, 0.0};
    c.dark_rate = 0.0;
    SourceSimulator sim(c);
    for (uint64_t i = 0; i < 10000; i++) {
        StreamRng rng = StreamRng::derive(1, i);
        EXPECT_TRUE(sim.sample_read({0, 0, 0.0}, rng).empty());
    }
}

TEST(SourceSim, FwmPresentWithoutWrite) {
    ExperimentConfig c;
    c.leakage_coeffs = {0.0, 0.0};
    c.dark_rate = 0.0;
    SourceSimulator sim(c);
    uint64_t clicks = 0;
    for (uint64_t i = 0; i < 100000; i++) {
        StreamRng rng = StreamRng::derive(1, i);
        clicks += sim.sample_read({0, 0, 0.0}, rng).size();
    }
    EXPECT_GT(clicks, 100u);
}

TEST(SourceSim, HeraldedRetrievalMatchesForwardModelIntegral) {
    ExperimentConfig c = quiet_config();
    c.detection_efficiency = 1.0;
    c.escape_efficiency = 1.0;
    c.dead_time = 0.0;
    SourceSimulator sim(c);
    double p_conv = simpson_conversion(c, c.read_duration);
    EXPECT_NEAR(sim.retrieval_probability(c.read_duration) / p_conv, 1.0, 1e-8);

    const uint64_t n = 1000000;
    uint64_t heralds = 0, reads = 0;
    sim.simulate(n, 99, [&](std::span<const TrialRecord> chunk) {
        for (const auto& r : chunk) {
            if (!r.write_clicks.empty()) {
                heralds++;
                reads += r.read_clicks.size();
            }
        }
    });
    double stored = oracle::heralded_symmetric_mean(c.mean_write_excitations, c.write_efficiency, 1.0, 1.0) *
                    std::exp(-c.write_read_delay / c.spin_wave_lifetime);
    double expected = p_conv * stored;
    EXPECT_NEAR(static_cast<double>(reads) / heralds / expected, 1.0, 0.01);
}

TEST(SourceSim, MeanSymmetricExcitationsAgreeWithBayesSum) {
    ExperimentConfig c;
    SourceSimulator sim(c);
    double p = sim.narrow_detection_probability();
    EXPECT_NEAR(sim.mean_symmetric_excitations(false), c.mean_write_excitations * c.write_efficiency, 1e-15);
    double ref = oracle::heralded_symmetric_mean(c.mean_write_excitations, c.write_efficiency, p, p);
    EXPECT_NEAR(sim.mean_symmetric_excitations(true) / ref, 1.0, 1e-9);
}

TEST(HeraldedMean, Examples) {
    EXPECT_NEAR(heralded_mean_excitations(1.0, 0.1), 1.1, 1e-12);
    EXPECT_NEAR(heralded_mean_excitations(0.05, 1e-9), 1.0, 1e-8);
    for (double eta : {0.0595, 0.3, 0.9}) {
        for (double mu : {0.01, 0.235, 2.0}) {
            EXPECT_NEAR(heralded_mean_excitations(eta, mu) / oracle::heralded_mean(eta, mu), 1.0, 1e-10);
        }
    }
    EXPECT_THROW(heralded_mean_excitations(0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(heralded_mean_excitations(0.1, -1.0), std::invalid_argument);
}

TEST(SourceSim, DeterministicAndScheduleIndependent) {
    SourceSimulator sim{ExperimentConfig{}};
    auto a = sim.simulate(40000, 123, 1);
    auto b = sim.simulate(40000, 123, 3);
    EXPECT_EQ(a, b);
    auto tail = sim.simulate(100, 123, 1, 39900);
    for (size_t k = 0; k < tail.size(); k++) {
        EXPECT_EQ(tail[k], a[39900 + k]);
    }
    EXPECT_EQ(sim.simulate_trial(17, 123), a[17]);
    auto other = sim.simulate(1000, 124, 1);
    EXPECT_NE(std::vector<TrialRecord>(a.begin(), a.begin() + 1000), other);
    EXPECT_THROW(sim.simulate(0, 1), std::invalid_argument);
}

TEST(SourceSim, RecordsAreWellFormed) {
    SourceSimulator sim{ExperimentConfig{}};
    auto recs = sim.simulate(50000, 8);
    for (size_t i = 0; i < recs.size(); i++) {
        EXPECT_EQ(recs[i].trial_index, i);
        EXPECT_TRUE(std::is_sorted(recs[i].write_clicks.begin(), recs[i].write_clicks.end()));
        EXPECT_TRUE(std::is_sorted(recs[i].read_clicks.begin(), recs[i].read_clicks.end()));
        for (double t : recs[i].read_clicks) EXPECT_GE(t, 0.0);
        for (double t : recs[i].write_clicks) EXPECT_GE(t, 0.0);
    }
}

TEST(SourceSim, HeraldCountAtNominal) {
    SourceSimulator sim{ExperimentConfig{}};
    uint64_t heralds = 0;
    sim.simulate(3248135, 20180226, [&](std::span<const TrialRecord> chunk) {
        for (const auto& r : chunk) heralds += r.write_clicks.empty() ? 0 : 1;
    });
    EXPECT_NEAR(static_cast<double>(heralds) / 45774.0, 1.0, 0.05);
}

TEST(SourceSim, NoiselessCrossCorrelation) {
    ExperimentConfig c = quiet_config();
    c.mean_write_excitations = 0.1;
    c.write_efficiency = 1.0;
    c.detection_efficiency = 1.0;
    c.escape_efficiency = 1.0;
    c.dead_time = 0.0;
    SourceSimulator sim(c);
    auto recs = sim.simulate(400000, 4);
    auto counts = window_counts(recs, Window{}, Window{});
    std::vector<uint32_t> w, r;
    for (const auto& x : counts) {
        w.push_back(x.n_w);
        r.push_back(x.n_r);
    }
    auto est = bootstrap(std::span<const WindowCounts>(counts), [](std::span<const WindowCounts> s) {
        return g2_wr(CountTable(s));
    }, 200, 1);
    EXPECT_NEAR(g2_cross(w, r), 12.0, 3.0 * est.std_error);
}

TEST(SourceSim, TwoThermalSourcesMix) {
    ExperimentConfig c1, c2;
    for (auto* c : {&c1, &c2}) {
        c->detection_efficiency = 1.0;
        c->escape_efficiency = 1.0;
        c->dead_time = 0.0;
    }
    c1.mean_write_excitations = 0.2;
    c2.mean_write_excitations = 0.1;
    SourceSimulator s1(c1), s2(c2);
    const uint64_t n = 2000000;
    std::vector<uint32_t> sum(n);
    for (uint64_t i = 0; i < n; i++) {
        StreamRng r1 = StreamRng::derive(1, i), r2 = StreamRng::derive(2, i);
        sum[i] = static_cast<uint32_t>(s1.sample_write(r1).clicks.size() + s2.sample_write(r2).clicks.size());
    }
    double expected = 1.0 + (0.04 + 0.01) / (0.09);
    EXPECT_NEAR(g2_auto(sum), expected, 0.02);
}

TEST(SourceSim, RejectsUnphysicalCoupling) {
    ExperimentConfig c;
    c.fwm_couplings.chi_r = 400.0;
    EXPECT_THROW(SourceSimulator{c}, ConfigError);
    c = ExperimentConfig{};
    c.dark_rate = -1.0;
    EXPECT_THROW(SourceSimulator{c}, ConfigError);
}

TEST(DeadTime, MergesCloseClicks) {
    std::vector<double> c{0.0, 10e-9, 60e-9, 100e-9, 200e-9};
    apply_dead_time(c, 50e-9);
    EXPECT_EQ(c, (std::vector<double>{0.0, 60e-9, 200e-9}));
    std::vector<double> one{1.0};
    apply_dead_time(one, 1.0);
    EXPECT_EQ(one.size(), 1u);
}
