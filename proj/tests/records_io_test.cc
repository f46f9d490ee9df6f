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

#include "dlcz/records_io.h"

#include <gtest/gtest.h>

#include <sstream>

#include "dlcz/config.h"

using namespace dlcz;

namespace {

RecordsHeader sample_header() {
    RecordsHeader h;
    h.config_hash = config_hash(ExperimentConfig{});
    h.seed = 9;
    h.trials = 2;
    h.delays = {30e-6};
    h.config = config_to_json(ExperimentConfig{});
    h.manifest = "run.jsonl.manifest.json";
    return h;
}

}  // namespace

TEST(RecordsIo, RoundTripIsExact) {
    std::vector<TrialRecord> recs{{0, 30e-6, {1.0 / 3.0 * 1e-6}, {}},
                                  {1, 30e-6, {}, {2.5e-6, (0.1 + 0.2) * 1e-4, 199.99999e-6}}};
    std::ostringstream out;
    write_records_header(out, sample_header());
    for (const auto& r : recs) write_record(out, r);
    std::istringstream in(out.str());
    RecordsHeader h;
    auto back = read_all_records(in, &h);
    EXPECT_EQ(back, recs);
    EXPECT_EQ(h.seed, 9u);
    EXPECT_EQ(h.delays, std::vector<double>{30e-6});
    EXPECT_EQ(h.manifest, "run.jsonl.manifest.json");
    EXPECT_EQ(config_from_json(h.config), ExperimentConfig{});
}

TEST(RecordsIo, OutputIsByteStable) {
    TrialRecord r{7, 1e-5, {1.23456789012345e-6}, {4e-5}};
    std::ostringstream a, b;
    write_record(a, r);
    write_record(b, r);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().back(), '\n');
}

TEST(RecordsIo, MalformedInput) {
    std::istringstream empty("");
    EXPECT_THROW(RecordsReader{empty}, DataError);
    std::istringstream not_json("hello\n");
    EXPECT_THROW(RecordsReader{not_json}, DataError);
    std::istringstream wrong_format("{\"format\":\"other\",\"version\":1}\n");
    EXPECT_THROW(RecordsReader{wrong_format}, DataError);

    std::ostringstream good;
    write_records_header(good, sample_header());
    std::istringstream bad_line(good.str() + "{\"trial\":0}\n");
    RecordsReader reader(bad_line);
    TrialRecord r;
    EXPECT_THROW(reader.next(r), DataError);

    std::istringstream bad_clicks(good.str() + "{\"trial\":0,\"delay_s\":0,\"write_clicks_s\":[\"x\"],\"read_clicks_s\":[]}\n");
    RecordsReader reader2(bad_clicks);
    EXPECT_THROW(reader2.next(r), DataError);
}

TEST(RecordsIo, SkipsBlankLines) {
    std::ostringstream out;
    write_records_header(out, sample_header());
    write_record(out, TrialRecord{0, 0.0, {}, {}});
    std::istringstream in(out.str() + "\n\n");
    EXPECT_EQ(read_all_records(in).size(), 1u);
}
