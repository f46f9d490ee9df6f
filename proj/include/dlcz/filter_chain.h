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

#ifndef DLCZ_FILTER_CHAIN_H
#define DLCZ_FILTER_CHAIN_H

#include <vector>

#include "dlcz/config.h"
#include "dlcz/rng.h"

namespace dlcz {

/// Lorentzian T_peak / (1 + (2 detuning / fwhm)^2).
double cavity_transmission(const CavitySpec& cavity, double detuning);

/// Unit-height Lorentzian line shape with the given FWHM.
double lorentzian(double detuning, double fwhm);

/// Intensity ringdown time of a cavity, 1 / (2 pi fwhm).
double photon_lifetime(const CavitySpec& cavity);

/// Cascaded spectral filter cavities.
///
/// Besides spectral selection the chain delays each transmitted photon by a
/// random amount: one exponential ringdown per cavity. This is the delay that
/// erases which-atom information (motional averaging).
class FilterChain {
   public:
    FilterChain() = default;
    explicit FilterChain(std::vector<CavitySpec> cavities) : cavities_(std::move(cavities)) {}

    const std::vector<CavitySpec>& cavities() const { return cavities_; }
    bool empty() const { return cavities_.empty(); }

    /// Product of member transmissions; 1 for the empty chain.
    double transmission(double detuning) const;
    /// transmission(detuning) / transmission(0).
    double relative_suppression(double detuning) const;

    /// Sum of independent exponential ringdown delays, one per cavity.
    double sample_delay(StreamRng& rng) const {
        double d = 0.0;
        for (const auto& cav : cavities_) {
            d += rng.exponential(photon_lifetime(cav));
        }
        return d;
    }

    double mean_delay() const;
    /// Analytic (hypoexponential) distribution of sample_delay.
    double delay_cdf(double t) const;
    double delay_pdf(double t) const;

   private:
    std::vector<CavitySpec> cavities_;
};

}  // namespace dlcz

#endif
