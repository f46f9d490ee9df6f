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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace dlcz {

namespace {

constexpr size_t kTableCells = 2000;
constexpr uint64_t kChunkTrials = 1 << 14;

int64_t sample_thermal(double mean, StreamRng& rng) {
    if (mean <= 0.0) {
        return 0;
    }
    // P(n >= k) = (mean / (1 + mean))^k
    double q = mean / (1.0 + mean);
    return static_cast<int64_t>(std::floor(std::log1p(-rng.uniform()) / std::log(q)));
}

int64_t sample_poisson(double mean, StreamRng& rng) {
    if (mean <= 0.0) {
        return 0;
    }
    std::poisson_distribution<int64_t> dist(mean);
    return dist(rng);
}

int64_t sample_survivors(int64_t n, double p, StreamRng& rng) {
    int64_t k = 0;
    for (int64_t i = 0; i < n; i++) {
        if (rng.uniform() < p) k++;
    }
    return k;
}

}  // namespace

SpinWaveState evolve_spin_wave(const SpinWaveState& state, double delay, const ExperimentConfig& config,
                               StreamRng& rng) {
    if (delay < 0.0) {
        throw std::invalid_argument("evolve_spin_wave: negative delay");
    }
    if (delay == 0.0) {
        return state;
    }
    SpinWaveState out = state;
    out.n_symmetric = sample_survivors(state.n_symmetric, std::exp(-delay / config.spin_wave_lifetime), rng);
    out.n_asymmetric = sample_survivors(state.n_asymmetric, std::exp(-delay / config.asymmetric_lifetime), rng);
    return out;
}

double heralded_mean_excitations(double detection_efficiency, double thermal_mean) {
    if (!(detection_efficiency > 0.0) || !(thermal_mean > 0.0)) {
        throw std::invalid_argument("heralded_mean_excitations: means and efficiency must be positive");
    }
    // Bayes over the geometric prior; P(>=1 click | n) = 1 - (1 - eta)^n.
    double eta = detection_efficiency, mu = thermal_mean;
    return (1.0 + 2.0 * mu + eta * mu * mu) / (1.0 + eta * mu);
}

void apply_dead_time(std::vector<double>& clicks, double dead_time) {
    if (clicks.size() < 2 || dead_time <= 0.0) {
        return;
    }
    size_t kept = 1;
    for (size_t k = 1; k < clicks.size(); k++) {
        if (clicks[k] - clicks[kept - 1] >= dead_time) {
            clicks[kept++] = clicks[k];
        }
    }
    clicks.resize(kept);
}

SourceSimulator::SourceSimulator(ExperimentConfig config)
    : config_(std::move(config)), chain_(config_.filter_chain) {
    auto violations = validate(config_);
    if (!violations.empty()) {
        throw ConfigError("invalid config: " + violations.front().field + " " + violations.front().rule);
    }
    shape_ = ShapeModelParams::from_config(config_, 1.0);
    const double eta = config_.collection_efficiency();
    const double det = config_.filter_detuning;
    p_narrow_ = eta * chain_.relative_suppression(det);
    p_pedestal_ = eta * config_.pedestal_pass * lorentzian(det, config_.pedestal_width);

    // Leakage sits at the read drive frequency, one Zeeman splitting above the
    // scattered line; its coefficients are calibrated at zero filter detuning.
    double leak_scale = chain_.relative_suppression(det - config_.zeeman_splitting) /
                        chain_.relative_suppression(config_.zeeman_splitting);
    cell_width_ = config_.read_duration / static_cast<double>(kTableCells);
    retrieval_cum_.assign(kTableCells + 1, 0.0);
    noise_cum_.assign(kTableCells + 1, 0.0);
    // Unit excitation, no detection: retrieval is the per-excitation density
    // and fwm the emitted rate; both get thinned by p_narrow_ here or per photon.
    ShapeModelParams unit = shape_;
    unit.detection_efficiency = 1.0;
    for (size_t k = 0; k < kTableCells; k++) {
        double a = cell_width_ * static_cast<double>(k), b = a + cell_width_;
        ShapeTerms terms = shape_integrate_terms(unit, a, b);
        retrieval_cum_[k + 1] = retrieval_cum_[k] + terms.retrieval;
        noise_cum_[k + 1] = noise_cum_[k] + terms.fwm * p_narrow_ + terms.leakage * leak_scale;
    }
    if (retrieval_cum_.back() > 1.0 + 1e-12) {
        throw ConfigError("fwm_couplings.chi_r: retrieval probability over the read pulse exceeds 1 (" +
                          std::to_string(retrieval_cum_.back()) + ")");
    }
}

double SourceSimulator::sample_table(const std::vector<double>& cum, double target) const {
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    size_t k = static_cast<size_t>(std::distance(cum.begin(), it));
    k = std::clamp<size_t>(k, 1, cum.size() - 1) - 1;
    double span = cum[k + 1] - cum[k];
    double frac = span > 0.0 ? (target - cum[k]) / span : 0.0;
    return cell_width_ * (static_cast<double>(k) + std::clamp(frac, 0.0, 1.0));
}

WriteOutcome SourceSimulator::sample_write(StreamRng& rng) const {
    WriteOutcome out;
    if (!config_.write_enabled) {
        return out;
    }
    int64_t n = sample_thermal(config_.mean_write_excitations, rng);
    bool first_symmetric = true;
    for (int64_t i = 0; i < n; i++) {
        bool symmetric = rng.uniform() < config_.write_efficiency;
        double emitted = rng.uniform() * config_.write_duration;
        if (symmetric) {
            out.state.n_symmetric++;
            if (first_symmetric) {
                out.state.creation_time = emitted;
                first_symmetric = false;
            }
        } else {
            out.state.n_asymmetric++;
        }
        double p_detect = symmetric ? p_narrow_ : p_pedestal_;
        if (rng.uniform() < p_detect) {
            out.clicks.push_back(emitted + chain_.sample_delay(rng));
        }
    }
    std::sort(out.clicks.begin(), out.clicks.end());
    apply_dead_time(out.clicks, config_.dead_time);
    return out;
}

std::vector<double> SourceSimulator::sample_read(const SpinWaveState& state, StreamRng& rng) const {
    std::vector<double> clicks;
    const double retrieval_total = retrieval_cum_.back();
    auto retrieve = [&](int64_t n, double p_detect) {
        for (int64_t i = 0; i < n; i++) {
            double u = rng.uniform();
            if (u >= retrieval_total) {
                continue;
            }
            double t = sample_table(retrieval_cum_, u);
            if (rng.uniform() < p_detect) {
                clicks.push_back(t + chain_.sample_delay(rng));
            }
        }
    };
    retrieve(state.n_symmetric, p_narrow_);
    retrieve(state.n_asymmetric, p_pedestal_);

    const double noise_total = noise_cum_.back();
    int64_t n_noise = sample_poisson(noise_total, rng);
    for (int64_t i = 0; i < n_noise; i++) {
        double t = sample_table(noise_cum_, rng.uniform() * noise_total);
        clicks.push_back(t + chain_.sample_delay(rng));
    }
    int64_t n_dark = sample_poisson(config_.dark_rate * config_.read_duration, rng);
    for (int64_t i = 0; i < n_dark; i++) {
        clicks.push_back(rng.uniform() * config_.read_duration);
    }
    std::sort(clicks.begin(), clicks.end());
    apply_dead_time(clicks, config_.dead_time);
    return clicks;
}

TrialRecord SourceSimulator::simulate_trial(uint64_t index, uint64_t master_seed) const {
    StreamRng rng = StreamRng::derive(master_seed, index);
    TrialRecord rec;
    rec.trial_index = index;
    rec.delay = config_.write_read_delay;
    WriteOutcome w = sample_write(rng);
    rec.write_clicks = std::move(w.clicks);
    SpinWaveState stored = evolve(w.state, config_.write_read_delay, rng);
    rec.read_clicks = sample_read(stored, rng);
    return rec;
}

void SourceSimulator::simulate(uint64_t trials, uint64_t master_seed, const ChunkSink& sink, unsigned threads,
                               uint64_t first_index) const {
    if (trials == 0) {
        throw std::invalid_argument("simulate: trials must be >= 1");
    }
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    const uint64_t n_chunks = (trials + kChunkTrials - 1) / kChunkTrials;
    auto run_chunk = [&](uint64_t chunk, std::vector<TrialRecord>& out) {
        uint64_t lo = chunk * kChunkTrials;
        uint64_t hi = std::min(trials, lo + kChunkTrials);
        out.clear();
        out.reserve(hi - lo);
        for (uint64_t i = lo; i < hi; i++) {
            out.push_back(simulate_trial(first_index + i, master_seed));
        }
    };
    std::vector<std::vector<TrialRecord>> batch(threads);
    for (uint64_t base = 0; base < n_chunks; base += threads) {
        uint64_t count = std::min<uint64_t>(threads, n_chunks - base);
        if (count == 1) {
            run_chunk(base, batch[0]);
        } else {
            std::vector<std::jthread> workers;
            for (uint64_t j = 0; j < count; j++) {
                workers.emplace_back([&, j] { run_chunk(base + j, batch[j]); });
            }
        }
        for (uint64_t j = 0; j < count; j++) {
            sink(batch[j]);
        }
    }
}

std::vector<TrialRecord> SourceSimulator::simulate(uint64_t trials, uint64_t master_seed, unsigned threads,
                                                   uint64_t first_index) const {
    std::vector<TrialRecord> all;
    all.reserve(trials);
    simulate(
        trials, master_seed,
        [&](std::span<const TrialRecord> chunk) { all.insert(all.end(), chunk.begin(), chunk.end()); },
        threads, first_index);
    return all;
}

double SourceSimulator::expected_write_clicks() const {
    if (!config_.write_enabled) {
        return 0.0;
    }
    double eps = config_.write_efficiency;
    return config_.mean_write_excitations * (eps * p_narrow_ + (1.0 - eps) * p_pedestal_);
}

double SourceSimulator::mean_symmetric_excitations(bool heralded) const {
    const double mu = config_.mean_write_excitations, eps = config_.write_efficiency;
    if (!heralded) {
        return config_.write_enabled ? mu * eps : 0.0;
    }
    if (!config_.write_enabled || mu == 0.0) {
        throw std::invalid_argument("mean_symmetric_excitations: no heralds without write photons");
    }
    // Geometric prior P(n) = (1 - r) r^n; q is the chance a photon goes undetected.
    const double r = mu / (1.0 + mu);
    const double q = eps * (1.0 - p_narrow_) + (1.0 - eps) * (1.0 - p_pedestal_);
    const double p_silent = (1.0 - r) / (1.0 - r * q);
    const double silent_sym = eps * (1.0 - p_narrow_) * (1.0 - r) * r / ((1.0 - r * q) * (1.0 - r * q));
    return (mu * eps - silent_sym) / (1.0 - p_silent);
}

double SourceSimulator::retrieval_probability(double tau_r) const {
    double t = std::clamp(tau_r, 0.0, config_.read_duration);
    ShapeModelParams p = shape_;
    p.detection_efficiency = 1.0;
    return shape_integrate_terms(p, 0.0, t).retrieval;
}

}  // namespace dlcz
