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

#ifndef DLCZ_CONFIG_H
#define DLCZ_CONFIG_H

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dlcz/time_series.h"

namespace dlcz {

/// One spectral filter cavity, modeled as a single Lorentzian mode.
struct CavitySpec {
    double fwhm = 0.0;               // Hz
    double peak_transmission = 1.0;  // on-resonance intensity transmission

    bool operator==(const CavitySpec&) const = default;
};

struct LeakageCoeffs {
    double l0 = 0.0;  // detected counts/s at unit drive, at the end of the write pulse
    double l1 = 0.0;  // counts/s^2, growth with time since the end of the write pulse

    bool operator==(const LeakageCoeffs&) const = default;
};

struct FwmCouplings {
    /// Read coupling. chi_r^2 * Omega^2 is a rate in 1/s (Omega^2 normalized to 1).
    double chi_r = 0.0;
    /// xi_r / chi_r versus time in the read window.
    TimeSeries alpha_table;

    bool operator==(const FwmCouplings&) const = default;
};

/// Every physical and sequencing parameter of the source, noise and detection chain.
///
/// Times are in seconds and frequencies in Hz. A default-constructed value is
/// the nominal room-temperature experiment.
struct ExperimentConfig {
    double zeeman_splitting = 2.4e6;
    double write_duration = 33e-6;
    double read_duration = 200e-6;
    double write_read_delay = 30e-6;
    int64_t cycles_per_sequence = 55;
    double spin_wave_lifetime = 0.27e-3;
    double population_decay = 1.1e-3;
    double spin_coherence = 0.8e-3;
    double mean_write_excitations = 0.235;
    double write_efficiency = 0.63;
    double detection_efficiency = 0.096;
    double escape_efficiency = 0.62;
    double polarization_extinction = 1e-4;
    double dark_rate = 10.0;
    LeakageCoeffs leakage_coeffs{40.0, 3.0e5};
    FwmCouplings fwm_couplings{44.0, TimeSeries::constant(1.3, 0.0, 200e-6)};
    TimeSeries drive_profile = TimeSeries::trapezoid(200e-6, 5e-6);
    std::vector<CavitySpec> filter_chain{{66e3, 0.66}, {900e3, 0.90}};
    uint64_t rng_master_seed = 20180226;

    double asymmetric_lifetime = 1e-6;
    double pedestal_pass = 1.0;
    double pedestal_width = 1.5e6;  // FWHM, Hz
    double filter_detuning = 0.0;   // Hz, filter resonance relative to the scattered-photon line
    double dead_time = 50e-9;
    bool write_enabled = true;

    bool operator==(const ExperimentConfig&) const = default;

    /// escape_efficiency * detection_efficiency.
    double collection_efficiency() const { return escape_efficiency * detection_efficiency; }
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Checks every invariant; an empty result means the config is usable.
std::vector<Violation> validate(const ExperimentConfig& config);

/// Parses a JSON document of overrides on top of the nominal config.
/// Throws ConfigError on malformed JSON, unknown keys, wrong types or invariant violations.
ExperimentConfig load_config(std::istream& source);
ExperimentConfig load_config(std::string_view text);
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& doc);

nlohmann::json config_to_json(const ExperimentConfig& config);
std::string serialize(const ExperimentConfig& config);

/// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace dlcz

#endif
