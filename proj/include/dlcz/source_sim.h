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

#ifndef DLCZ_SOURCE_SIM_H
#define DLCZ_SOURCE_SIM_H

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dlcz/config.h"
#include "dlcz/filter_chain.h"
#include "dlcz/rng.h"
#include "dlcz/shape_model.h"

namespace dlcz {

/// Stored excitations after a write pulse.
struct SpinWaveState {
    int64_t n_symmetric = 0;
    int64_t n_asymmetric = 0;
    /// Emission time (within the write pulse) of the first symmetric photon; 0 if none.
    double creation_time = 0.0;

    bool operator==(const SpinWaveState&) const = default;
};

/// One write/read trial. Click times are relative to the start of the
/// respective window and include the filter-chain delay.
struct TrialRecord {
    uint64_t trial_index = 0;
    double delay = 0.0;
    std::vector<double> write_clicks;
    std::vector<double> read_clicks;

    bool operator==(const TrialRecord&) const = default;
};

struct WriteOutcome {
    SpinWaveState state;
    std::vector<double> clicks;
};

/// Survival of stored excitations over `delay`: symmetric ones with the
/// spin-wave lifetime, asymmetric ones with the (short) asymmetric lifetime.
SpinWaveState evolve_spin_wave(const SpinWaveState& state, double delay, const ExperimentConfig& config,
                               StreamRng& rng);

/// E[n | at least one click] for a thermal photon number of mean `thermal_mean`
/// with each photon detected independently with `detection_efficiency`.
/// Throws std::invalid_argument for non-positive arguments.
double heralded_mean_excitations(double detection_efficiency, double thermal_mean);

/// Merges clicks closer than `dead_time` to the previous registered click. Input must be sorted.
void apply_dead_time(std::vector<double>& sorted_clicks, double dead_time);

/// Generative model of the heralded source.
///
/// Per trial: a thermal number of Stokes photons is scattered by the write
/// pulse, each storing a symmetric (long-lived) or asymmetric (short-lived)
/// excitation. Stored excitations decay over the write-read delay and the
/// survivors are retrieved with the read-photon shape model's retrieval term.
/// Four-wave mixing and drive leakage add Poisson noise during the read pulse
/// and dark counts arrive uniformly. Every photon that reaches the detector
/// carries a random filter-chain delay.
class SourceSimulator {
   public:
    /// Throws ConfigError if the config is invalid or the retrieval
    /// probability over the read pulse exceeds 1.
    explicit SourceSimulator(ExperimentConfig config);

    const ExperimentConfig& config() const { return config_; }
    const FilterChain& filter_chain() const { return chain_; }

    WriteOutcome sample_write(StreamRng& rng) const;
    SpinWaveState evolve(const SpinWaveState& state, double delay, StreamRng& rng) const {
        return evolve_spin_wave(state, delay, config_, rng);
    }
    std::vector<double> sample_read(const SpinWaveState& state, StreamRng& rng) const;

    /// Trial `index` under `master_seed`; depends on nothing else.
    TrialRecord simulate_trial(uint64_t index, uint64_t master_seed) const;

    using ChunkSink = std::function<void(std::span<const TrialRecord>)>;
    /// Simulates trials first_index .. first_index + trials - 1 and hands them
    /// to `sink` in index order. threads == 0 uses the hardware concurrency.
    void simulate(uint64_t trials, uint64_t master_seed, const ChunkSink& sink, unsigned threads = 0,
                  uint64_t first_index = 0) const;
    std::vector<TrialRecord> simulate(uint64_t trials, uint64_t master_seed, unsigned threads = 0,
                                      uint64_t first_index = 0) const;

    /// Mean write clicks per trial.
    double expected_write_clicks() const;
    /// Mean symmetric excitations right after the write pulse, over all trials
    /// or over trials with at least one write click (ignoring dead time).
    double mean_symmetric_excitations(bool heralded) const;
    /// Probability that one stored excitation is converted within [0, tau_r) (before detection).
    double retrieval_probability(double tau_r) const;
    /// Detection probability of a retrieved symmetric-mode photon.
    double narrow_detection_probability() const { return p_narrow_; }

   private:
    double sample_table(const std::vector<double>& cumulative, double target) const;

    ExperimentConfig config_;
    FilterChain chain_;
    ShapeModelParams shape_;
    double p_narrow_ = 0.0;
    double p_pedestal_ = 0.0;
    double cell_width_ = 0.0;
    std::vector<double> retrieval_cum_;  // per excitation, before detection
    std::vector<double> noise_cum_;      // detected FWM + leakage
};

}  // namespace dlcz

#endif
