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

// Independent reference implementations used by the unit and acceptance tests.
// They follow the defining formulas directly and share no code with the library.

#ifndef DLCZ_TESTS_ORACLES_H
#define DLCZ_TESTS_ORACLES_H

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// <n (n - delta)> / <n>^2 by explicit pair enumeration: for a trial with n clicks
// the number of ordered pairs of distinct clicks is n (n - 1).
inline double g2_auto(const std::vector<uint32_t>& n) {
    double pairs = 0.0, total = 0.0;
    for (uint32_t k : n) {
        for (uint32_t a = 0; a < k; a++) {
            for (uint32_t b = 0; b < k; b++) {
                if (a != b) pairs += 1.0;
            }
        }
        total += k;
    }
    double m = static_cast<double>(n.size());
    return (pairs / m) / ((total / m) * (total / m));
}

inline double g2_cross(const std::vector<uint32_t>& w, const std::vector<uint32_t>& r) {
    double pairs = 0.0, sw = 0.0, sr = 0.0;
    for (size_t i = 0; i < w.size(); i++) {
        for (uint32_t a = 0; a < w[i]; a++) {
            for (uint32_t b = 0; b < r[i]; b++) pairs += 1.0;
        }
        sw += w[i];
        sr += r[i];
    }
    double m = static_cast<double>(w.size());
    return (pairs / m) / ((sw / m) * (sr / m));
}

inline double lorentzian_transmission(double peak, double fwhm, double detuning) {
    double u = detuning / (fwhm / 2.0);
    return peak / (1.0 + u * u);
}

// Sum of two independent exponentials with distinct rates.
inline double hypoexponential_cdf(double rate1, double rate2, double t) {
    if (t <= 0.0) return 0.0;
    return 1.0 - (rate2 * std::exp(-rate1 * t) - rate1 * std::exp(-rate2 * t)) / (rate2 - rate1);
}

// E[n | >= 1 click] for a geometric prior of mean mu and per-photon efficiency eta, by direct summation.
inline double heralded_mean(double eta, double mu, int terms = 4000) {
    double r = mu / (1.0 + mu);
    double num = 0.0, den = 0.0, p = 1.0 - r;
    for (int n = 0; n < terms; n++) {
        double click = 1.0 - std::pow(1.0 - eta, n);
        num += p * n * click;
        den += p * click;
        p *= r;
    }
    return num / den;
}

// E[symmetric | >= 1 click] when each photon is symmetric with probability eps and
// detected with p_sym or p_asym, by summing over (n_sym, n_asym).
inline double heralded_symmetric_mean(double mu, double eps, double p_sym, double p_asym, int terms = 300) {
    double r = mu / (1.0 + mu);
    double num = 0.0, den = 0.0;
    for (int n = 0; n < terms; n++) {
        double pn = (1.0 - r) * std::pow(r, n);
        double binom = 1.0;  // C(n, s)
        for (int s = 0; s <= n; s++) {
            if (s > 0) binom *= static_cast<double>(n - s + 1) / s;
            double ps = binom * std::pow(eps, s) * std::pow(1.0 - eps, n - s);
            double silent = std::pow(1.0 - p_sym, s) * std::pow(1.0 - p_asym, n - s);
            num += pn * ps * s * (1.0 - silent);
            den += pn * ps * (1.0 - silent);
        }
    }
    return num / den;
}

// Closed form of the retrieval integral for constant drive, alpha = 1 and no leakage:
// chi^2 n_ce T1 (1 - exp(-tau / T1)).
inline double constant_drive_retrieval(double chi, double n_ce, double t1, double tau) {
    return chi * chi * n_ce * t1 * (1.0 - std::exp(-tau / t1));
}

}  // namespace oracle

#endif
