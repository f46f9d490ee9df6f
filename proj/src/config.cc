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

#include "dlcz/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dlcz {

namespace {

using nlohmann::json;

void check_fraction(std::vector<Violation>& out, const char* field, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        out.push_back({field, "must be a fraction in [0, 1]"});
    }
}

void check_positive(std::vector<Violation>& out, const char* field, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        out.push_back({field, "must be strictly positive and finite"});
    }
}

void check_non_negative(std::vector<Violation>& out, const char* field, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        out.push_back({field, "must be non-negative and finite"});
    }
}

json series_to_json(const TimeSeries& s) {
    json arr = json::array();
    for (const auto& [t, v] : s.knots()) {
        arr.push_back(json::array({t, v}));
    }
    return arr;
}

TimeSeries series_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(field + ": expected a non-empty array of [t_seconds, value] pairs");
    }
    std::vector<TimeSeries::Knot> knots;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ConfigError(field + ": each entry must be a [t_seconds, value] pair");
        }
        knots.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    try {
        return TimeSeries(std::move(knots));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.contains(it.key())) {
            throw ConfigError("unknown key '" + where + it.key() + "'");
        }
    }
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) {
        throw ConfigError(field + ": expected a number");
    }
    return j.get<double>();
}

}  // namespace

std::vector<Violation> validate(const ExperimentConfig& c) {
    std::vector<Violation> out;
    check_positive(out, "zeeman_splitting", c.zeeman_splitting);
    check_positive(out, "write_duration", c.write_duration);
    check_positive(out, "read_duration", c.read_duration);
    check_non_negative(out, "write_read_delay", c.write_read_delay);
    if (c.cycles_per_sequence < 1) {
        out.push_back({"cycles_per_sequence", "must be >= 1"});
    }
    check_positive(out, "spin_wave_lifetime", c.spin_wave_lifetime);
    check_positive(out, "population_decay", c.population_decay);
    check_positive(out, "spin_coherence", c.spin_coherence);
    check_non_negative(out, "mean_write_excitations", c.mean_write_excitations);
    check_fraction(out, "write_efficiency", c.write_efficiency);
    check_fraction(out, "detection_efficiency", c.detection_efficiency);
    check_fraction(out, "escape_efficiency", c.escape_efficiency);
    check_fraction(out, "polarization_extinction", c.polarization_extinction);
    check_non_negative(out, "dark_rate", c.dark_rate);

    check_non_negative(out, "leakage_coeffs.l0", c.leakage_coeffs.l0);
    double late = c.write_read_delay + c.read_duration;
    if (!std::isfinite(c.leakage_coeffs.l1) || c.leakage_coeffs.l0 + c.leakage_coeffs.l1 * late < 0.0) {
        out.push_back({"leakage_coeffs.l1", "leakage rate must stay non-negative over the read window"});
    }

    check_non_negative(out, "fwm_couplings.chi_r", c.fwm_couplings.chi_r);
    const TimeSeries& alpha = c.fwm_couplings.alpha_table;
    if (!alpha.covers(0.0, c.read_duration)) {
        out.push_back({"fwm_couplings.alpha_table", "must cover [0, read_duration]"});
    } else if (!(alpha.min_value() > 0.0)) {
        out.push_back({"fwm_couplings.alpha_table", "values must be strictly positive"});
    }
    if (!c.drive_profile.covers(0.0, c.read_duration)) {
        out.push_back({"drive_profile", "must cover [0, read_duration]"});
    } else if (c.drive_profile.min_value() < 0.0) {
        out.push_back({"drive_profile", "values must be non-negative"});
    }

    for (size_t k = 0; k < c.filter_chain.size(); k++) {
        const auto& cav = c.filter_chain[k];
        std::string prefix = "filter_chain[" + std::to_string(k) + "]";
        if (!(cav.fwhm > 0.0) || !std::isfinite(cav.fwhm)) {
            out.push_back({prefix + ".fwhm", "must be strictly positive"});
        }
        if (!(cav.peak_transmission > 0.0 && cav.peak_transmission <= 1.0)) {
            out.push_back({prefix + ".peak_transmission", "must be in (0, 1]"});
        }
    }

    check_positive(out, "asymmetric_lifetime", c.asymmetric_lifetime);
    check_fraction(out, "pedestal_pass", c.pedestal_pass);
    check_positive(out, "pedestal_width", c.pedestal_width);
    if (!std::isfinite(c.filter_detuning)) {
        out.push_back({"filter_detuning", "must be finite"});
    }
    check_non_negative(out, "dead_time", c.dead_time);
    return out;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    json chain = json::array();
    for (const auto& cav : c.filter_chain) {
        chain.push_back({{"fwhm", cav.fwhm}, {"peak_transmission", cav.peak_transmission}});
    }
    return json{
        {"zeeman_splitting", c.zeeman_splitting},
        {"write_duration", c.write_duration},
        {"read_duration", c.read_duration},
        {"write_read_delay", c.write_read_delay},
        {"cycles_per_sequence", c.cycles_per_sequence},
        {"spin_wave_lifetime", c.spin_wave_lifetime},
        {"population_decay", c.population_decay},
        {"spin_coherence", c.spin_coherence},
        {"mean_write_excitations", c.mean_write_excitations},
        {"write_efficiency", c.write_efficiency},
        {"detection_efficiency", c.detection_efficiency},
        {"escape_efficiency", c.escape_efficiency},
        {"polarization_extinction", c.polarization_extinction},
        {"dark_rate", c.dark_rate},
        {"leakage_coeffs", {{"l0", c.leakage_coeffs.l0}, {"l1", c.leakage_coeffs.l1}}},
        {"fwm_couplings",
         {{"chi_r", c.fwm_couplings.chi_r}, {"alpha_table", series_to_json(c.fwm_couplings.alpha_table)}}},
        {"drive_profile", series_to_json(c.drive_profile)},
        {"filter_chain", chain},
        {"rng_master_seed", c.rng_master_seed},
        {"asymmetric_lifetime", c.asymmetric_lifetime},
        {"pedestal_pass", c.pedestal_pass},
        {"pedestal_width", c.pedestal_width},
        {"filter_detuning", c.filter_detuning},
        {"dead_time", c.dead_time},
        {"write_enabled", c.write_enabled},
    };
}

ExperimentConfig config_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config document must be a JSON object");
    }
    static const std::set<std::string> kKnown = {
        "zeeman_splitting", "write_duration", "read_duration", "write_read_delay",
        "cycles_per_sequence", "spin_wave_lifetime", "population_decay", "spin_coherence",
        "mean_write_excitations", "write_efficiency", "detection_efficiency", "escape_efficiency",
        "polarization_extinction", "dark_rate", "leakage_coeffs", "fwm_couplings", "drive_profile",
        "filter_chain", "rng_master_seed", "asymmetric_lifetime", "pedestal_pass", "pedestal_width",
        "filter_detuning", "dead_time", "write_enabled"};
    reject_unknown(doc, kKnown, "");

    ExperimentConfig c;
    auto scalar = [&](const char* key, double& dst) {
        if (doc.contains(key)) {
            dst = number(doc.at(key), key);
        }
    };
    scalar("zeeman_splitting", c.zeeman_splitting);
    scalar("write_duration", c.write_duration);
    scalar("read_duration", c.read_duration);
    scalar("write_read_delay", c.write_read_delay);
    scalar("spin_wave_lifetime", c.spin_wave_lifetime);
    scalar("population_decay", c.population_decay);
    scalar("spin_coherence", c.spin_coherence);
    scalar("mean_write_excitations", c.mean_write_excitations);
    scalar("write_efficiency", c.write_efficiency);
    scalar("detection_efficiency", c.detection_efficiency);
    scalar("escape_efficiency", c.escape_efficiency);
    scalar("polarization_extinction", c.polarization_extinction);
    scalar("dark_rate", c.dark_rate);
    scalar("asymmetric_lifetime", c.asymmetric_lifetime);
    scalar("pedestal_pass", c.pedestal_pass);
    scalar("pedestal_width", c.pedestal_width);
    scalar("filter_detuning", c.filter_detuning);
    scalar("dead_time", c.dead_time);

    if (doc.contains("cycles_per_sequence")) {
        const auto& j = doc.at("cycles_per_sequence");
        if (!j.is_number_integer()) {
            throw ConfigError("cycles_per_sequence: expected an integer");
        }
        c.cycles_per_sequence = j.get<int64_t>();
    }
    if (doc.contains("rng_master_seed")) {
        const auto& j = doc.at("rng_master_seed");
        if (!j.is_number_unsigned()) {
            throw ConfigError("rng_master_seed: expected a non-negative integer");
        }
        c.rng_master_seed = j.get<uint64_t>();
    }
    if (doc.contains("write_enabled")) {
        const auto& j = doc.at("write_enabled");
        if (!j.is_boolean()) {
            throw ConfigError("write_enabled: expected a boolean");
        }
        c.write_enabled = j.get<bool>();
    }
    if (doc.contains("leakage_coeffs")) {
        const auto& j = doc.at("leakage_coeffs");
        if (!j.is_object()) {
            throw ConfigError("leakage_coeffs: expected an object with l0, l1");
        }
        reject_unknown(j, {"l0", "l1"}, "leakage_coeffs.");
        if (j.contains("l0")) c.leakage_coeffs.l0 = number(j.at("l0"), "leakage_coeffs.l0");
        if (j.contains("l1")) c.leakage_coeffs.l1 = number(j.at("l1"), "leakage_coeffs.l1");
    }
    if (doc.contains("fwm_couplings")) {
        const auto& j = doc.at("fwm_couplings");
        if (!j.is_object()) {
            throw ConfigError("fwm_couplings: expected an object with chi_r, alpha_table");
        }
        reject_unknown(j, {"chi_r", "alpha_table"}, "fwm_couplings.");
        if (j.contains("chi_r")) c.fwm_couplings.chi_r = number(j.at("chi_r"), "fwm_couplings.chi_r");
        if (j.contains("alpha_table")) {
            c.fwm_couplings.alpha_table = series_from_json(j.at("alpha_table"), "fwm_couplings.alpha_table");
        }
    }
    if (doc.contains("drive_profile")) {
        c.drive_profile = series_from_json(doc.at("drive_profile"), "drive_profile");
    }
    if (doc.contains("filter_chain")) {
        const auto& j = doc.at("filter_chain");
        if (!j.is_array()) {
            throw ConfigError("filter_chain: expected an array of cavities");
        }
        c.filter_chain.clear();
        for (size_t k = 0; k < j.size(); k++) {
            std::string where = "filter_chain[" + std::to_string(k) + "]";
            if (!j[k].is_object()) {
                throw ConfigError(where + ": expected an object with fwhm, peak_transmission");
            }
            reject_unknown(j[k], {"fwhm", "peak_transmission"}, where + ".");
            if (!j[k].contains("fwhm") || !j[k].contains("peak_transmission")) {
                throw ConfigError(where + ": fwhm and peak_transmission are required");
            }
            c.filter_chain.push_back({number(j[k].at("fwhm"), where + ".fwhm"),
                                      number(j[k].at("peak_transmission"), where + ".peak_transmission")});
        }
    }

    auto violations = validate(c);
    if (!violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto& v : violations) {
            msg += " " + v.field + " " + v.rule + ";";
        }
        throw ConfigError(msg);
    }
    return c;
}

ExperimentConfig load_config(std::istream& source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(doc);
}

ExperimentConfig load_config(std::string_view text) {
    std::istringstream in{std::string(text)};
    return load_config(in);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return load_config(in);
}

std::string serialize(const ExperimentConfig& config) { return config_to_json(config).dump(2); }

std::string config_hash(const ExperimentConfig& config) {
    std::string canonical = config_to_json(config).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dlcz
