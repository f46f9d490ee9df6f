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

#ifndef DLCZ_RECORDS_IO_H
#define DLCZ_RECORDS_IO_H

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlcz/source_sim.h"

namespace dlcz {

class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// First line of a click-record file.
struct RecordsHeader {
    std::string config_hash;
    uint64_t seed = 0;
    uint64_t trials = 0;
    int64_t cycles_per_sequence = 1;
    std::vector<double> delays;
    nlohmann::json config;
    std::string manifest;
};

/// JSON Lines: one header object, then one
/// {"trial": int, "delay_s": float, "write_clicks_s": [...], "read_clicks_s": [...]} per line.
/// Doubles are written in shortest round-trip form so output is byte-reproducible.
void write_records_header(std::ostream& out, const RecordsHeader& header);
void write_record(std::ostream& out, const TrialRecord& record);

class RecordsReader {
   public:
    /// Reads and checks the header line. Throws DataError.
    explicit RecordsReader(std::istream& in);

    const RecordsHeader& header() const { return header_; }
    /// Next record, or false at end of input. Throws DataError on malformed lines.
    bool next(TrialRecord& record);
    uint64_t line_number() const { return line_; }

   private:
    std::istream& in_;
    RecordsHeader header_;
    uint64_t line_ = 0;
    std::string buffer_;
};

std::vector<TrialRecord> read_all_records(std::istream& in, RecordsHeader* header = nullptr);

}  // namespace dlcz

#endif
