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

#include <gtest/gtest.h>

#include <sstream>

#include "dlcz/filter_chain.h"

using namespace dlcz;

TEST(Config, EmptyOverridesGiveNominalValues) {
    ExperimentConfig c = load_config("{}");
    EXPECT_DOUBLE_EQ(c.zeeman_splitting, 2.4e6);
    EXPECT_DOUBLE_EQ(c.spin_wave_lifetime, 0.27e-3);
    EXPECT_DOUBLE_EQ(c.detection_efficiency, 0.096);
    EXPECT_EQ(c.cycles_per_sequence, 55);
    EXPECT_EQ(c, ExperimentConfig{});
}

TEST(Config, DetectionEfficiencyAboveOneRejected) {
    EXPECT_THROW(load_config(R"({"detection_efficiency": 1.2})"), ConfigError);
    ExperimentConfig c;
    c.detection_efficiency = 1.2;
    auto v = validate(c);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].field, "detection_efficiency");
}

TEST(Config, EmptyFilterChainIsValid) {
    ExperimentConfig c = load_config(R"({"filter_chain": []})");
    EXPECT_TRUE(c.filter_chain.empty());
    FilterChain chain(c.filter_chain);
    for (double d : {0.0, 1e3, 2.4e6, -5e7}) {
        EXPECT_EQ(chain.transmission(d), 1.0);
    }
}

TEST(Config, NominalValidates) { EXPECT_TRUE(validate(ExperimentConfig{}).empty()); }

TEST(Config, NegativeDelayIsOneViolation) {
    ExperimentConfig c;
    c.write_read_delay = -1e-6;
    auto v = validate(c);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].field, "write_read_delay");
    EXPECT_FALSE(v[0].rule.empty());
}

TEST(Config, NominalWriteEfficiencyAndMeanValidate) {
    ExperimentConfig c;
    c.write_efficiency = 0.63;
    c.mean_write_excitations = 0.23;
    EXPECT_TRUE(validate(c).empty());
}

TEST(Config, ValidateIsPure) {
    ExperimentConfig c;
    c.dark_rate = -1.0;
    c.cycles_per_sequence = 0;
    EXPECT_EQ(validate(c), validate(c));
    EXPECT_EQ(validate(c).size(), 2u);
}

TEST(Config, RejectsOtherInvariantBreaks) {
    for (const char* doc : {
             R"({"write_duration": 0})",
             R"({"cycles_per_sequence": 0})",
             R"({"write_efficiency": -0.1})",
             R"({"filter_chain": [{"fwhm": 0, "peak_transmission": 0.5}]})",
             R"({"filter_chain": [{"fwhm": 1e5, "peak_transmission": 1.5}]})",
             R"({"drive_profile": [[0, 1], [1e-4, 1]]})",
             R"({"fwm_couplings": {"alpha_table": [[0, 0], [2e-4, 1]]}})",
         }) {
        EXPECT_THROW(load_config(doc), ConfigError) << doc;
    }
}

TEST(Config, UnknownKeysAndMalformedInputRejected) {
    EXPECT_THROW(load_config(R"({"zeeman_spliting": 2e6})"), ConfigError);
    EXPECT_THROW(load_config(R"({"leakage_coeffs": {"l2": 1}})"), ConfigError);
    EXPECT_THROW(load_config("{"), ConfigError);
    EXPECT_THROW(load_config("[1, 2]"), ConfigError);
    EXPECT_THROW(load_config(R"({"dark_rate": "ten"})"), ConfigError);
}

TEST(Config, ViolationMessageNamesField) {
    try {
        load_config(R"({"escape_efficiency": 2})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("escape_efficiency"), std::string::npos);
    }
}

TEST(Config, SerializeRoundTrips) {
    ExperimentConfig c;
    c.write_read_delay = 123.456e-6;
    c.filter_chain = {{50e3, 0.5}};
    c.drive_profile = TimeSeries{{0.0, 0.0}, {1e-5, 0.7}, {2e-4, 0.9}};
    c.fwm_couplings.alpha_table = TimeSeries{{0.0, 1.1}, {2e-4, 1.7}};
    c.rng_master_seed = 0xfedcba9876543210ULL;
    c.write_enabled = false;
    std::istringstream in(serialize(c));
    ExperimentConfig back = load_config(in);
    EXPECT_EQ(back, c);
    EXPECT_EQ(config_hash(back), config_hash(c));

    ExperimentConfig nominal;
    EXPECT_EQ(load_config(serialize(nominal)), nominal);
}

TEST(Config, HashChangesWithContent) {
    ExperimentConfig a, b;
    b.dark_rate = 11.0;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, MissingFileIsConfigError) {
    EXPECT_THROW(load_config_file("/nonexistent/dir/config.json"), ConfigError);
}

TEST(TimeSeries, InterpolatesAndClamps) {
    TimeSeries s{{0.0, 0.0}, {1.0, 2.0}, {3.0, 2.0}};
    EXPECT_DOUBLE_EQ(s(0.5), 1.0);
    EXPECT_DOUBLE_EQ(s(2.0), 2.0);
    EXPECT_DOUBLE_EQ(s(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(s(10.0), 2.0);
    EXPECT_TRUE(s.covers(0.0, 3.0));
    EXPECT_FALSE(s.covers(0.0, 3.5));
    EXPECT_THROW((TimeSeries{{1.0, 0.0}, {1.0, 1.0}}), std::invalid_argument);
}

TEST(TimeSeries, TrapezoidShape) {
    TimeSeries t = TimeSeries::trapezoid(200e-6, 5e-6);
    EXPECT_DOUBLE_EQ(t(0.0), 0.0);
    EXPECT_DOUBLE_EQ(t(2.5e-6), 0.5);
    EXPECT_DOUBLE_EQ(t(100e-6), 1.0);
    EXPECT_DOUBLE_EQ(t(200e-6), 0.0);
}
