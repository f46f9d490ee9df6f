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

#ifndef DLCZ_TIME_SERIES_H
#define DLCZ_TIME_SERIES_H

#include <initializer_list>
#include <utility>
#include <vector>

namespace dlcz {

/// Piecewise-linear function of time given by (t, value) knots.
///
/// Evaluation interpolates linearly between knots and clamps to the first or
/// last value outside the knot range. Knot times must be strictly increasing.
class TimeSeries {
   public:
    using Knot = std::pair<double, double>;

    TimeSeries() = default;
    explicit TimeSeries(std::vector<Knot> knots);
    TimeSeries(std::initializer_list<Knot> knots) : TimeSeries(std::vector<Knot>(knots)) {}

    static TimeSeries constant(double value, double t_begin, double t_end);
    /// Trapezoid rising from 0 to `plateau` over `edge`, falling back to 0 at `t_end`.
    static TimeSeries trapezoid(double t_end, double edge, double plateau = 1.0);

    double operator()(double t) const;

    bool empty() const { return knots_.empty(); }
    double t_front() const;
    double t_back() const;
    /// True when the knots span [a, b].
    bool covers(double a, double b) const;
    double min_value() const;
    double max_value() const;

    const std::vector<Knot>& knots() const { return knots_; }

    /// Same curve with time axis multiplied by `factor` (values unchanged).
    TimeSeries rescaled_time(double factor) const;

    bool operator==(const TimeSeries&) const = default;

   private:
    std::vector<Knot> knots_;
};

}  // namespace dlcz

#endif
