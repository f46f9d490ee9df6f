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

#include <algorithm>
#include <charconv>

namespace dlcz {

namespace {

constexpr const char* kFormat = "dlcz-records";
constexpr int kVersion = 1;

void put_double(std::string& s, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    s.append(buf, res.ptr);
}

void put_list(std::string& s, const std::vector<double>& values) {
    s.push_back('[');
    for (size_t k = 0; k < values.size(); k++) {
        if (k) s.push_back(',');
        put_double(s, values[k]);
    }
    s.push_back(']');
}

std::vector<double> get_list(const nlohmann::json& j, const char* key, uint64_t line) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        throw DataError("line " + std::to_string(line) + ": missing array '" + key + "'");
    }
    std::vector<double> out;
    out.reserve(j.at(key).size());
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) {
            throw DataError("line " + std::to_string(line) + ": non-numeric timestamp in '" + key + "'");
        }
        out.push_back(v.get<double>());
    }
    if (!std::is_sorted(out.begin(), out.end())) {
        throw DataError("line " + std::to_string(line) + ": timestamps in '" + key + "' are not sorted");
    }
    return out;
}

}  // namespace

void write_records_header(std::ostream& out, const RecordsHeader& h) {
    nlohmann::json j = {
        {"format", kFormat},
        {"version", kVersion},
        {"config_hash", h.config_hash},
        {"seed", h.seed},
        {"trials", h.trials},
        {"cycles_per_sequence", h.cycles_per_sequence},
        {"sequences", h.cycles_per_sequence > 0
                          ? (h.trials + static_cast<uint64_t>(h.cycles_per_sequence) - 1) /
                                static_cast<uint64_t>(h.cycles_per_sequence)
                          : 0},
        {"delays_s", h.delays},
        {"manifest", h.manifest},
        {"config", h.config},
    };
    out << j.dump() << '\n';
}

void write_record(std::ostream& out, const TrialRecord& r) {
    std::string s;
    s.reserve(96);
    s += "{\"trial\":";
    s += std::to_string(r.trial_index);
    s += ",\"delay_s\":";
    put_double(s, r.delay);
    s += ",\"write_clicks_s\":";
    put_list(s, r.write_clicks);
    s += ",\"read_clicks_s\":";
    put_list(s, r.read_clicks);
    s += "}\n";
    out << s;
}

RecordsReader::RecordsReader(std::istream& in) : in_(in) {
    if (!std::getline(in_, buffer_)) {
        throw DataError("records file is empty");
    }
    line_ = 1;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buffer_);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("records header is not JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kFormat) {
        throw DataError("records header missing format \"dlcz-records\"");
    }
    if (j.value("version", 0) != kVersion) {
        throw DataError("unsupported records version");
    }
    header_.config_hash = j.value("config_hash", "");
    header_.seed = j.value("seed", uint64_t{0});
    header_.trials = j.value("trials", uint64_t{0});
    header_.cycles_per_sequence = j.value("cycles_per_sequence", int64_t{1});
    if (j.contains("delays_s")) {
        header_.delays = j.at("delays_s").get<std::vector<double>>();
    }
    header_.manifest = j.value("manifest", "");
    if (j.contains("config")) {
        header_.config = j.at("config");
    }
}

bool RecordsReader::next(TrialRecord& record) {
    while (std::getline(in_, buffer_)) {
        line_++;
        if (buffer_.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(buffer_);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(line_) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("trial") || !j.at("trial").is_number_unsigned() ||
            !j.contains("delay_s") || !j.at("delay_s").is_number()) {
            throw DataError("line " + std::to_string(line_) + ": expected trial and delay_s fields");
        }
        record.trial_index = j.at("trial").get<uint64_t>();
        record.delay = j.at("delay_s").get<double>();
        record.write_clicks = get_list(j, "write_clicks_s", line_);
        record.read_clicks = get_list(j, "read_clicks_s", line_);
        return true;
    }
    return false;
}

std::vector<TrialRecord> read_all_records(std::istream& in, RecordsHeader* header) {
    RecordsReader reader(in);
    if (header) {
        *header = reader.header();
    }
    std::vector<TrialRecord> out;
    TrialRecord r;
    while (reader.next(r)) {
        out.push_back(r);
    }
    return out;
}

}  // namespace dlcz
