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

#ifndef DLCZ_STATS_H
#define DLCZ_STATS_H

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dlcz/rng.h"
#include "dlcz/shape_model.h"
#include "dlcz/source_sim.h"

namespace dlcz {

/// Raised when a statistic has no defined value on the given data (zero mean,
/// no heralded trials, ...). Never replaced by NaN.
class UndefinedStatistic : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

/// Half-open time window [start, end).
struct Window {
    double start = 0.0;
    double end = std::numeric_limits<double>::infinity();

    /// Throws std::invalid_argument if end < start.
    static Window between(double start, double end);
    bool contains(double t) const { return t >= start && t < end; }
};

struct WindowCounts {
    uint32_t n_w = 0;
    uint32_t n_r = 0;

    bool heralded() const { return n_w > 0; }
    bool operator==(const WindowCounts&) const = default;
};

WindowCounts window_counts(const TrialRecord& record, const Window& write_window, const Window& read_window);
std::vector<WindowCounts> window_counts(std::span<const TrialRecord> records, const Window& write_window,
                                        const Window& read_window);

/// <n (n - 1)> / <n>^2.
double g2_auto(std::span<const uint32_t> counts);
/// <n_w n_r> / (<n_w> <n_r>). Lists must have equal length.
double g2_cross(std::span<const uint32_t> counts_w, std::span<const uint32_t> counts_r);
/// (g2_wr)^2 / (g2_ww g2_rr); values above 1 are impossible for classical fields.
double cauchy_schwarz(double g2_ww, double g2_rr, double g2_wr);

struct RetrievalEfficiency {
    double eta_r = 0.0;
    double eta_r_intrinsic = 0.0;
};

/// eta_R = <n_r | heralded> - <n_r>; intrinsic value divides by the detection efficiency.
RetrievalEfficiency retrieval_efficiency(std::span<const WindowCounts> counts, std::span<const bool> heralded,
                                         double detection_efficiency);
/// Heralded means at least one write click.
RetrievalEfficiency retrieval_efficiency(std::span<const WindowCounts> counts, double detection_efficiency);

/// Rate at the source: rate / (detection_efficiency * escape_efficiency).
double correct_for_detection(double count_rate, double detection_efficiency, double escape_efficiency);

/// g2_auto of read counts over trials with at least one write click.
double conditional_g2_rr(std::span<const WindowCounts> counts);
double conditional_g2_rr(std::span<const TrialRecord> records, double tau_r, const Window& write_window = {});

/// Joint histogram of (n_w, n_r) over trials. Every correlation statistic is a
/// function of this table, which makes trial-level bootstrap cheap.
class CountTable {
   public:
    struct Entry {
        WindowCounts counts;
        uint64_t multiplicity = 0;
    };

    CountTable() = default;
    explicit CountTable(std::span<const WindowCounts> counts);

    void add(const WindowCounts& c, uint64_t multiplicity = 1);
    const std::vector<Entry>& entries() const { return entries_; }
    uint64_t trials() const { return trials_; }
    uint64_t heralds() const;

    /// Same categories with the given multiplicities.
    CountTable with_multiplicities(const std::vector<uint64_t>& m) const;

   private:
    std::vector<Entry> entries_;
    uint64_t trials_ = 0;
};

/// Moments of a count table (sums over trials).
struct CountMoments {
    double n = 0, n_h = 0;
    double sum_w = 0, sum_ww = 0;  // n_w, n_w (n_w - 1)
    double sum_r = 0, sum_rr = 0;  // n_r, n_r (n_r - 1)
    double sum_wr = 0;
    double sum_r_h = 0, sum_rr_h = 0;  // over heralded trials

    explicit CountMoments(const CountTable& table);
};

double g2_ww(const CountTable& table);
double g2_rr(const CountTable& table);
double g2_wr(const CountTable& table);
double g2_rr_given_w(const CountTable& table);
double cauchy_schwarz(const CountTable& table);
double retrieval_efficiency(const CountTable& table);
double mean_read_given_write(const CountTable& table);

struct BootstrapEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    size_t resamples = 0;
    size_t redraws = 0;
};

/// Nonparametric bootstrap at the granularity of `items` (whole trials).
///
/// estimate = statistic(items); std_error = sample standard deviation of the
/// statistic over `n_resamples` same-size resamples drawn with replacement.
/// Resample r, attempt k uses stream (seed, r, k), so results do not depend on
/// evaluation order. A resample on which the statistic is undefined is redrawn;
/// more than 10 * n_resamples attempts in total raises UndefinedStatistic.
template <class T, class Statistic>
BootstrapEstimate bootstrap(std::span<const T> items, Statistic&& statistic, size_t n_resamples, uint64_t seed);

/// Same contract for statistics of a CountTable; resamples the table
/// multinomially, which is distributed exactly like resampling trials.
BootstrapEstimate bootstrap(const CountTable& table, const std::function<double(const CountTable&)>& statistic,
                            size_t n_resamples, uint64_t seed);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct CorrelationResult {
    std::optional<Estimate> g2_ww, g2_rr, g2_wr, g2_rr_given_w, R, eta_r, eta_r_intrinsic;
    uint64_t n_trials = 0;
    uint64_t n_heralds = 0;
    double mean_n_w = 0.0;
    double mean_n_r = 0.0;
    /// Names of statistics that were undefined on this data.
    std::vector<std::string> undefined;
};

/// All correlation statistics of a table with bootstrap errors. Undefined
/// statistics are left empty and listed in `undefined`.
CorrelationResult correlate(const CountTable& table, double detection_efficiency, size_t n_resamples,
                            uint64_t seed);

/// Histogram of read-click times in [t_start, t_start + bins * bin_width).
/// With `heralded_only`, counts and n_pulses cover only trials with a click in `write_window`.
BinnedCounts histogram_read_clicks(std::span<const TrialRecord> records, double t_start, double bin_width,
                                   size_t bins, bool heralded_only = false, const Window& write_window = {});

// ---------------------------------------------------------------------------

template <class T, class Statistic>
BootstrapEstimate bootstrap(std::span<const T> items, Statistic&& statistic, size_t n_resamples, uint64_t seed) {
    if (n_resamples < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 resamples");
    }
    if (items.empty()) {
        throw UndefinedStatistic("bootstrap of an empty dataset");
    }
    BootstrapEstimate out;
    out.estimate = statistic(items);
    const size_t n = items.size();
    const size_t cap = 10 * n_resamples;
    size_t attempts = 0;
    std::vector<T> sample(n);
    double mean = 0.0, m2 = 0.0;
    for (size_t r = 0; r < n_resamples; r++) {
        for (uint64_t k = 0;; k++) {
            if (++attempts > cap) {
                throw UndefinedStatistic("bootstrap: statistic undefined on too many resamples");
            }
            StreamRng rng = StreamRng::derive(seed, r, k);
            for (size_t i = 0; i < n; i++) {
                sample[i] = items[static_cast<size_t>(rng.uniform() * static_cast<double>(n))];
            }
            try {
                double v = statistic(std::span<const T>(sample));
                double d = v - mean;
                mean += d / static_cast<double>(r + 1);
                m2 += d * (v - mean);
                break;
            } catch (const UndefinedStatistic&) {
                out.redraws++;
            }
        }
    }
    out.resamples = n_resamples;
    out.std_error = std::sqrt(m2 / static_cast<double>(n_resamples - 1));
    return out;
}

}  // namespace dlcz

#endif
