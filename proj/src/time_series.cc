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

#include "dlcz/time_series.h"

#include <algorithm>
#include <stdexcept>

namespace dlcz {

TimeSeries::TimeSeries(std::vector<Knot> knots) : knots_(std::move(knots)) {
    for (size_t k = 1; k < knots_.size(); k++) {
        if (!(knots_[k].first > knots_[k - 1].first)) {
            throw std::invalid_argument("time series knots must have strictly increasing times");
        }
    }
}

TimeSeries TimeSeries::constant(double value, double t_begin, double t_end) {
    return TimeSeries({{t_begin, value}, {t_end, value}});
}

TimeSeries TimeSeries::trapezoid(double t_end, double edge, double plateau) {
    return TimeSeries({{0.0, 0.0}, {edge, plateau}, {t_end - edge, plateau}, {t_end, 0.0}});
}

double TimeSeries::operator()(double t) const {
    if (knots_.empty()) {
        throw std::logic_error("evaluating an empty time series");
    }
    if (t <= knots_.front().first) {
        return knots_.front().second;
    }
    if (t >= knots_.back().first) {
        return knots_.back().second;
    }
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double x, const Knot& k) { return x < k.first; });
    auto lo = hi - 1;
    double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

double TimeSeries::t_front() const { return knots_.empty() ? 0.0 : knots_.front().first; }

double TimeSeries::t_back() const { return knots_.empty() ? 0.0 : knots_.back().first; }

bool TimeSeries::covers(double a, double b) const {
    return !knots_.empty() && knots_.front().first <= a && knots_.back().first >= b;
}

double TimeSeries::min_value() const {
    double m = knots_.empty() ? 0.0 : knots_.front().second;
    for (const auto& k : knots_) {
        m = std::min(m, k.second);
    }
    return m;
}

double TimeSeries::max_value() const {
    double m = knots_.empty() ? 0.0 : knots_.front().second;
    for (const auto& k : knots_) {
        m = std::max(m, k.second);
    }
    return m;
}

TimeSeries TimeSeries::rescaled_time(double factor) const {
    std::vector<Knot> out = knots_;
    for (auto& k : out) {
        k.first *= factor;
    }
    return TimeSeries(std::move(out));
}

}  // namespace dlcz
