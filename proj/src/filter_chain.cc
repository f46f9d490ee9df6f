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

#include "dlcz/filter_chain.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace dlcz {

double lorentzian(double detuning, double fwhm) {
    double x = 2.0 * detuning / fwhm;
    return 1.0 / (1.0 + x * x);
}

double cavity_transmission(const CavitySpec& cavity, double detuning) {
    return cavity.peak_transmission * lorentzian(detuning, cavity.fwhm);
}

double photon_lifetime(const CavitySpec& cavity) { return 1.0 / (2.0 * std::numbers::pi * cavity.fwhm); }

double FilterChain::transmission(double detuning) const {
    double t = 1.0;
    for (const auto& cav : cavities_) {
        t *= cavity_transmission(cav, detuning);
    }
    return t;
}

double FilterChain::relative_suppression(double detuning) const {
    double r = 1.0;
    for (const auto& cav : cavities_) {
        r *= lorentzian(detuning, cav.fwhm);
    }
    return r;
}

double FilterChain::mean_delay() const {
    double m = 0.0;
    for (const auto& cav : cavities_) {
        m += photon_lifetime(cav);
    }
    return m;
}

namespace {

// Phase-type representation: the photon walks through the cavities in order,
// leaving cavity k at rate 1/lifetime_k. Handles repeated rates.
Eigen::MatrixXd subgenerator(const std::vector<CavitySpec>& cavities) {
    const auto n = static_cast<Eigen::Index>(cavities.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; k++) {
        double rate = 1.0 / photon_lifetime(cavities[k]);
        s(k, k) = -rate;
        if (k + 1 < n) {
            s(k, k + 1) = rate;
        }
    }
    return s;
}

}  // namespace

double FilterChain::delay_cdf(double t) const {
    if (t < 0.0) {
        return 0.0;
    }
    if (cavities_.empty()) {
        return 1.0;
    }
    Eigen::MatrixXd e = (subgenerator(cavities_) * t).exp();
    double survive = e.row(0).sum();
    return std::clamp(1.0 - survive, 0.0, 1.0);
}

double FilterChain::delay_pdf(double t) const {
    if (t < 0.0 || cavities_.empty()) {
        return 0.0;
    }
    Eigen::MatrixXd e = (subgenerator(cavities_) * t).exp();
    double last_rate = 1.0 / photon_lifetime(cavities_.back());
    return e(0, e.cols() - 1) * last_rate;
}

}  // namespace dlcz
