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

#include "dlcz/stats.h"

#include <algorithm>
#include <map>
#include <memory>

namespace dlcz {

Window Window::between(double start, double end) {
    if (!(end >= start)) {
        throw std::invalid_argument("window end must not precede its start");
    }
    return Window{start, end};
}

WindowCounts window_counts(const TrialRecord& record, const Window& write_window, const Window& read_window) {
    if (!(write_window.end >= write_window.start) || !(read_window.end >= read_window.start)) {
        throw std::invalid_argument("window end must not precede its start");
    }
    WindowCounts c;
    for (double t : record.write_clicks) {
        c.n_w += write_window.contains(t) ? 1 : 0;
    }
    for (double t : record.read_clicks) {
        c.n_r += read_window.contains(t) ? 1 : 0;
    }
    return c;
}

std::vector<WindowCounts> window_counts(std::span<const TrialRecord> records, const Window& write_window,
                                        const Window& read_window) {
    std::vector<WindowCounts> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(window_counts(r, write_window, read_window));
    }
    return out;
}

double g2_auto(std::span<const uint32_t> counts) {
    double s1 = 0.0, s2 = 0.0;
    for (uint32_t n : counts) {
        s1 += n;
        s2 += static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    }
    if (counts.empty() || s1 == 0.0) {
        throw UndefinedStatistic("g2_auto: mean count is zero");
    }
    double m = static_cast<double>(counts.size());
    return (s2 / m) / ((s1 / m) * (s1 / m));
}

double g2_cross(std::span<const uint32_t> counts_w, std::span<const uint32_t> counts_r) {
    if (counts_w.size() != counts_r.size()) {
        throw std::invalid_argument("g2_cross: lists differ in length");
    }
    double sw = 0.0, sr = 0.0, swr = 0.0;
    for (size_t k = 0; k < counts_w.size(); k++) {
        sw += counts_w[k];
        sr += counts_r[k];
        swr += static_cast<double>(counts_w[k]) * static_cast<double>(counts_r[k]);
    }
    if (counts_w.empty() || sw == 0.0 || sr == 0.0) {
        throw UndefinedStatistic("g2_cross: zero mean count");
    }
    double m = static_cast<double>(counts_w.size());
    return (swr / m) / ((sw / m) * (sr / m));
}

double cauchy_schwarz(double g2_ww, double g2_rr, double g2_wr) {
    double den = g2_ww * g2_rr;
    if (!(den > 0.0)) {
        throw UndefinedStatistic("cauchy_schwarz: auto-correlation product is not positive");
    }
    return g2_wr * g2_wr / den;
}

RetrievalEfficiency retrieval_efficiency(std::span<const WindowCounts> counts, std::span<const bool> heralded,
                                         double detection_efficiency) {
    if (counts.size() != heralded.size()) {
        throw std::invalid_argument("retrieval_efficiency: flag list length differs");
    }
    if (!(detection_efficiency > 0.0)) {
        throw std::invalid_argument("retrieval_efficiency: detection efficiency must be positive");
    }
    double sum_r = 0.0, sum_rh = 0.0, n_h = 0.0;
    for (size_t k = 0; k < counts.size(); k++) {
        sum_r += counts[k].n_r;
        if (heralded[k]) {
            sum_rh += counts[k].n_r;
            n_h += 1.0;
        }
    }
    if (n_h == 0.0) {
        throw UndefinedStatistic("retrieval_efficiency: no heralded trials");
    }
    RetrievalEfficiency out;
    out.eta_r = sum_rh / n_h - sum_r / static_cast<double>(counts.size());
    out.eta_r_intrinsic = out.eta_r / detection_efficiency;
    return out;
}

RetrievalEfficiency retrieval_efficiency(std::span<const WindowCounts> counts, double detection_efficiency) {
    std::unique_ptr<bool[]> h(new bool[counts.size()]);
    for (size_t k = 0; k < counts.size(); k++) {
        h[k] = counts[k].heralded();
    }
    return retrieval_efficiency(counts, std::span<const bool>(h.get(), counts.size()), detection_efficiency);
}

double correct_for_detection(double count_rate, double detection_efficiency, double escape_efficiency) {
    if (!(detection_efficiency > 0.0 && detection_efficiency <= 1.0) ||
        !(escape_efficiency > 0.0 && escape_efficiency <= 1.0)) {
        throw std::invalid_argument("correct_for_detection: efficiencies must be in (0, 1]");
    }
    return count_rate / (detection_efficiency * escape_efficiency);
}

double conditional_g2_rr(std::span<const WindowCounts> counts) {
    std::vector<uint32_t> reads;
    for (const auto& c : counts) {
        if (c.heralded()) {
            reads.push_back(c.n_r);
        }
    }
    if (reads.empty()) {
        throw UndefinedStatistic("conditional_g2_rr: no heralded trials");
    }
    return g2_auto(reads);
}

double conditional_g2_rr(std::span<const TrialRecord> records, double tau_r, const Window& write_window) {
    auto counts = window_counts(records, write_window, Window::between(0.0, tau_r));
    return conditional_g2_rr(counts);
}

CountTable::CountTable(std::span<const WindowCounts> counts) {
    std::map<std::pair<uint32_t, uint32_t>, uint64_t> acc;
    for (const auto& c : counts) {
        acc[{c.n_w, c.n_r}]++;
    }
    for (const auto& [key, m] : acc) {
        entries_.push_back({{key.first, key.second}, m});
        trials_ += m;
    }
}

void CountTable::add(const WindowCounts& c, uint64_t multiplicity) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), c, [](const Entry& e, const WindowCounts& v) {
        return std::pair(e.counts.n_w, e.counts.n_r) < std::pair(v.n_w, v.n_r);
    });
    if (it != entries_.end() && it->counts == c) {
        it->multiplicity += multiplicity;
    } else {
        entries_.insert(it, Entry{c, multiplicity});
    }
    trials_ += multiplicity;
}

uint64_t CountTable::heralds() const {
    uint64_t h = 0;
    for (const auto& e : entries_) {
        if (e.counts.heralded()) h += e.multiplicity;
    }
    return h;
}

CountTable CountTable::with_multiplicities(const std::vector<uint64_t>& m) const {
    if (m.size() != entries_.size()) {
        throw std::invalid_argument("with_multiplicities: size mismatch");
    }
    CountTable out;
    for (size_t k = 0; k < m.size(); k++) {
        if (m[k] > 0) {
            out.entries_.push_back({entries_[k].counts, m[k]});
            out.trials_ += m[k];
        }
    }
    return out;
}

CountMoments::CountMoments(const CountTable& table) {
    for (const auto& e : table.entries()) {
        double m = static_cast<double>(e.multiplicity);
        double w = e.counts.n_w, r = e.counts.n_r;
        n += m;
        sum_w += m * w;
        sum_ww += m * w * (w - 1.0);
        sum_r += m * r;
        sum_rr += m * r * (r - 1.0);
        sum_wr += m * w * r;
        if (e.counts.heralded()) {
            n_h += m;
            sum_r_h += m * r;
            sum_rr_h += m * r * (r - 1.0);
        }
    }
}

namespace {

double auto_from(double n, double s1, double s2, const char* what) {
    if (n == 0.0 || s1 == 0.0) {
        throw UndefinedStatistic(std::string(what) + ": mean count is zero");
    }
    return (s2 / n) / ((s1 / n) * (s1 / n));
}

}  // namespace

double g2_ww(const CountTable& t) {
    CountMoments m(t);
    return auto_from(m.n, m.sum_w, m.sum_ww, "g2_ww");
}

double g2_rr(const CountTable& t) {
    CountMoments m(t);
    return auto_from(m.n, m.sum_r, m.sum_rr, "g2_rr");
}

double g2_wr(const CountTable& t) {
    CountMoments m(t);
    if (m.n == 0.0 || m.sum_w == 0.0 || m.sum_r == 0.0) {
        throw UndefinedStatistic("g2_wr: zero mean count");
    }
    return (m.sum_wr / m.n) / ((m.sum_w / m.n) * (m.sum_r / m.n));
}

double g2_rr_given_w(const CountTable& t) {
    CountMoments m(t);
    if (m.n_h == 0.0) {
        throw UndefinedStatistic("g2_rr_given_w: no heralded trials");
    }
    return auto_from(m.n_h, m.sum_r_h, m.sum_rr_h, "g2_rr_given_w");
}

double cauchy_schwarz(const CountTable& t) {
    CountMoments m(t);
    double ww = auto_from(m.n, m.sum_w, m.sum_ww, "g2_ww");
    double rr = auto_from(m.n, m.sum_r, m.sum_rr, "g2_rr");
    if (m.sum_r == 0.0) {
        throw UndefinedStatistic("g2_wr: zero mean count");
    }
    double wr = (m.sum_wr / m.n) / ((m.sum_w / m.n) * (m.sum_r / m.n));
    return cauchy_schwarz(ww, rr, wr);
}

double retrieval_efficiency(const CountTable& t) {
    CountMoments m(t);
    if (m.n_h == 0.0) {
        throw UndefinedStatistic("retrieval_efficiency: no heralded trials");
    }
    return m.sum_r_h / m.n_h - m.sum_r / m.n;
}

double mean_read_given_write(const CountTable& t) {
    CountMoments m(t);
    if (m.n_h == 0.0) {
        throw UndefinedStatistic("mean_read_given_write: no heralded trials");
    }
    return m.sum_r_h / m.n_h;
}

BootstrapEstimate bootstrap(const CountTable& table, const std::function<double(const CountTable&)>& statistic,
                            size_t n_resamples, uint64_t seed) {
    if (n_resamples < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 resamples");
    }
    if (table.trials() == 0) {
        throw UndefinedStatistic("bootstrap of an empty dataset");
    }
    BootstrapEstimate out;
    out.estimate = statistic(table);
    const auto& entries = table.entries();
    const size_t cap = 10 * n_resamples;
    size_t attempts = 0;
    std::vector<uint64_t> mult(entries.size());
    double mean = 0.0, m2 = 0.0;
    for (size_t r = 0; r < n_resamples; r++) {
        for (uint64_t k = 0;; k++) {
            if (++attempts > cap) {
                throw UndefinedStatistic("bootstrap: statistic undefined on too many resamples");
            }
            StreamRng rng = StreamRng::derive(seed, r, k);
            // Multinomial(N, c_k / N) through conditional binomials.
            uint64_t remaining = table.trials();
            uint64_t mass = table.trials();
            for (size_t i = 0; i < entries.size(); i++) {
                if (remaining == 0 || mass == 0) {
                    mult[i] = 0;
                    continue;
                }
                uint64_t c = entries[i].multiplicity;
                if (c >= mass) {
                    mult[i] = remaining;
                } else {
                    std::binomial_distribution<int64_t> dist(static_cast<int64_t>(remaining),
                                                             static_cast<double>(c) / static_cast<double>(mass));
                    mult[i] = static_cast<uint64_t>(dist(rng));
                }
                remaining -= mult[i];
                mass -= c;
            }
            try {
                double v = statistic(table.with_multiplicities(mult));
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

CorrelationResult correlate(const CountTable& table, double detection_efficiency, size_t n_resamples,
                            uint64_t seed) {
    if (!(detection_efficiency > 0.0)) {
        throw std::invalid_argument("correlate: detection efficiency must be positive");
    }
    CorrelationResult out;
    out.n_trials = table.trials();
    out.n_heralds = table.heralds();
    CountMoments m(table);
    if (m.n > 0.0) {
        out.mean_n_w = m.sum_w / m.n;
        out.mean_n_r = m.sum_r / m.n;
    }
    auto run = [&](const char* name, std::optional<Estimate>& dst, uint64_t salt,
                   const std::function<double(const CountTable&)>& stat) {
        try {
            BootstrapEstimate b = bootstrap(table, stat, n_resamples, StreamRng::mix(seed + salt));
            dst = Estimate{b.estimate, b.std_error};
        } catch (const UndefinedStatistic&) {
            out.undefined.emplace_back(name);
        }
    };
    run("g2_ww", out.g2_ww, 1, [](const CountTable& t) { return g2_ww(t); });
    run("g2_rr", out.g2_rr, 2, [](const CountTable& t) { return g2_rr(t); });
    run("g2_wr", out.g2_wr, 3, [](const CountTable& t) { return g2_wr(t); });
    run("g2_rr_given_w", out.g2_rr_given_w, 4, [](const CountTable& t) { return g2_rr_given_w(t); });
    run("R", out.R, 5, [](const CountTable& t) { return cauchy_schwarz(t); });
    run("eta_r", out.eta_r, 6, [](const CountTable& t) { return retrieval_efficiency(t); });
    if (out.eta_r) {
        out.eta_r_intrinsic = Estimate{out.eta_r->value / detection_efficiency,
                                       out.eta_r->std_error / detection_efficiency};
    } else {
        out.undefined.emplace_back("eta_r_intrinsic");
    }
    return out;
}

BinnedCounts histogram_read_clicks(std::span<const TrialRecord> records, double t_start, double bin_width,
                                   size_t bins, bool heralded_only, const Window& write_window) {
    if (!(bin_width > 0.0) || bins == 0) {
        throw std::invalid_argument("histogram_read_clicks: need positive bin width and bin count");
    }
    BinnedCounts h;
    h.t_start = t_start;
    h.bin_width = bin_width;
    h.counts.assign(bins, 0.0);
    for (const auto& r : records) {
        if (heralded_only) {
            bool heralded = std::any_of(r.write_clicks.begin(), r.write_clicks.end(),
                                        [&](double t) { return write_window.contains(t); });
            if (!heralded) continue;
        }
        h.n_pulses += 1.0;
        for (double t : r.read_clicks) {
            double pos = (t - t_start) / bin_width;
            if (pos >= 0.0 && pos < static_cast<double>(bins)) {
                h.counts[static_cast<size_t>(pos)] += 1.0;
            }
        }
    }
    return h;
}

}  // namespace dlcz
