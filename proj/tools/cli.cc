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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dlcz/config.h"
#include "dlcz/decay_fit.h"
#include "dlcz/least_squares.h"
#include "dlcz/records_io.h"
#include "dlcz/scan_fit.h"
#include "dlcz/shape_model.h"
#include "dlcz/source_sim.h"
#include "dlcz/stats.h"

namespace dlcz::cli {

const char* const kToolVersion = "0.3.0";

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

double parse_number(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s == "inf" || s == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) {
        throw UsageError("not a number: '" + s + "'");
    }
    return v;
}

double parse_us(const std::string& s) { return parse_number(s) * 1e-6; }

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        out.push_back(item);
    }
    if (!text.empty() && text.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    return out;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return in;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

json manifest_base(const std::string& command, const std::vector<std::string>& args) {
    return json{{"tool", "dlcz"}, {"tool_version", kToolVersion}, {"command", command}, {"args", args}};
}

void write_manifest(const std::string& out_path, json manifest, Clock::time_point started) {
    manifest["wall_clock_s"] = std::chrono::duration<double>(Clock::now() - started).count();
    auto f = open_output(manifest_path(out_path));
    f << manifest.dump(2) << "\n";
    if (!f) {
        throw DataError("failed writing manifest for '" + out_path + "'");
    }
}

std::string fmt(double v) {
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

/// Minimal comma-separated table with a header row.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    size_t column(const std::string& name) const {
        auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) {
            throw DataError("missing column '" + name + "'");
        }
        return static_cast<size_t>(it - columns.begin());
    }
    double number(size_t row, size_t col) const {
        const std::string& s = rows[row][col];
        if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
        try {
            size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw DataError("row " + std::to_string(row + 2) + ": '" + s + "' is not a number");
        }
    }
};

CsvTable read_csv(const std::string& path) {
    auto in = open_input(path);
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, ',');
        if (t.columns.empty()) {
            t.columns = std::move(cells);
            continue;
        }
        if (cells.size() != t.columns.size()) {
            throw DataError(path + ": row with " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.columns.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.columns.empty()) {
        throw DataError(path + ": empty table");
    }
    return t;
}

ExperimentConfig config_or_nominal(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config_file(path);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config;
    std::string out;
    uint64_t trials = 0;
    uint64_t seed = 0;
    bool seed_given = false;
    std::string delays_us;
    bool no_write = false;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    auto started = Clock::now();
    if (a.trials == 0) {
        throw UsageError("--trials must be at least 1");
    }
    ExperimentConfig cfg = config_or_nominal(a.config);
    if (a.no_write) {
        cfg.write_enabled = false;
    }
    uint64_t seed = a.seed_given ? a.seed : cfg.rng_master_seed;
    std::vector<double> delays = a.delays_us.empty() ? std::vector<double>{cfg.write_read_delay}
                                                     : parse_list_us(a.delays_us);
    for (double d : delays) {
        if (!(d >= 0.0)) throw UsageError("--delays-us entries must be non-negative");
    }

    RecordsHeader header;
    header.config_hash = config_hash(cfg);
    header.seed = seed;
    header.trials = a.trials;
    header.cycles_per_sequence = cfg.cycles_per_sequence;
    header.delays = delays;
    header.config = config_to_json(cfg);
    header.manifest = std::filesystem::path(manifest_path(a.out)).filename().string();

    auto f = open_output(a.out);
    write_records_header(f, header);
    uint64_t heralds = 0, read_clicks = 0;
    for (size_t k = 0; k < delays.size(); k++) {
        ExperimentConfig at = cfg;
        at.write_read_delay = delays[k];
        SourceSimulator sim(at);
        sim.simulate(
            a.trials, seed,
            [&](std::span<const TrialRecord> chunk) {
                for (const auto& r : chunk) {
                    write_record(f, r);
                    heralds += r.write_clicks.empty() ? 0 : 1;
                    read_clicks += r.read_clicks.size();
                }
            },
            a.threads, k * a.trials);
    }
    f.flush();
    if (!f) {
        throw DataError("failed writing '" + a.out + "'");
    }

    json m = manifest_base("simulate", args);
    m["config_hash"] = header.config_hash;
    m["seed"] = seed;
    m["trials_per_delay"] = a.trials;
    m["delays_s"] = delays;
    m["inputs"] = a.config.empty() ? json::array() : json::array({a.config});
    m["outputs"] = json::array({a.out});
    m["config"] = header.config;
    write_manifest(a.out, m, started);

    out << "simulate: " << a.trials * delays.size() << " trials over " << delays.size() << " delay(s), "
        << heralds << " heralds, " << read_clicks << " read clicks -> " << a.out << " (config "
        << header.config_hash << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
    std::string config;
    std::string out;
    std::string kind = "write";
    std::string detunings_mhz = "-6,-4,-3,-2,-1.5,-1,-0.5,-0.25,0,0.25,0.5,1,1.5,2,3,4,6";
    uint64_t trials = 0;
    uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 0;
};

int cmd_scan(const ScanArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    auto started = Clock::now();
    if (a.trials == 0) {
        throw UsageError("--trials must be at least 1");
    }
    ScanKind kind;
    try {
        kind = parse_scan_kind(a.kind);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    ExperimentConfig cfg = config_or_nominal(a.config);
    if (kind == ScanKind::read_no_write) {
        cfg.write_enabled = false;
    }
    uint64_t seed = a.seed_given ? a.seed : cfg.rng_master_seed;
    std::vector<double> detunings;
    for (const auto& s : split(a.detunings_mhz, ',')) {
        detunings.push_back(parse_number(s) * 1e6);
    }

    auto f = open_output(a.out);
    f << "detuning_hz,counts,pulses\n";
    for (size_t k = 0; k < detunings.size(); k++) {
        ExperimentConfig at = cfg;
        at.filter_detuning = detunings[k];
        SourceSimulator sim(at);
        uint64_t counts = 0;
        if (kind == ScanKind::write) {
            // Same streams as full trials; the read pulse is not needed.
            for (uint64_t i = 0; i < a.trials; i++) {
                StreamRng rng = StreamRng::derive(seed, k * a.trials + i);
                counts += sim.sample_write(rng).clicks.size();
            }
        } else {
            sim.simulate(
                a.trials, seed,
                [&](std::span<const TrialRecord> chunk) {
                    for (const auto& r : chunk) counts += r.read_clicks.size();
                },
                a.threads, k * a.trials);
        }
        f << fmt(detunings[k]) << "," << counts << "," << a.trials << "\n";
    }
    if (!f) {
        throw DataError("failed writing '" + a.out + "'");
    }
    json m = manifest_base("scan", args);
    m["config_hash"] = config_hash(cfg);
    m["seed"] = seed;
    m["scan_kind"] = scan_kind_name(kind);
    m["inputs"] = a.config.empty() ? json::array() : json::array({a.config});
    m["outputs"] = json::array({a.out});
    m["config"] = config_to_json(cfg);
    write_manifest(a.out, m, started);
    out << "scan: " << scan_kind_name(kind) << " scan, " << detunings.size() << " detunings x " << a.trials
        << " trials -> " << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string records;
    std::string out;
    std::string write_window = "0,inf";
    std::string read_window = "0,40";
    std::string tau_r;
    size_t bootstrap = 1000;
    uint64_t seed = 1;
    double detection_efficiency = 0.0;
};

const char* const kStatNames[] = {"g2_ww", "g2_rr", "g2_wr", "g2_rr_given_w", "R", "eta_r", "eta_r_intrinsic"};

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    auto started = Clock::now();
    if (a.bootstrap < 100) {
        throw UsageError("--bootstrap must be at least 100");
    }
    auto [w0, w1] = parse_window_us(a.write_window);
    auto [r0, r1] = parse_window_us(a.read_window);
    Window write_window{w0, w1};
    std::vector<Window> read_windows;
    if (a.tau_r.empty()) {
        read_windows.push_back({r0, r1});
    } else {
        // Integration times counted from the read-window start; they replace its end.
        for (double t : parse_list_us(a.tau_r)) {
            if (!(t > 0.0)) throw UsageError("--tau-r entries must be positive");
            read_windows.push_back({r0, r0 + t});
        }
    }

    auto in = open_input(a.records);
    RecordsReader reader(in);
    double eta = a.detection_efficiency;
    if (eta == 0.0) {
        const auto& cfg = reader.header().config;
        eta = cfg.is_object() ? cfg.value("detection_efficiency", ExperimentConfig{}.detection_efficiency)
                              : ExperimentConfig{}.detection_efficiency;
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw UsageError("--detection-efficiency must be in (0, 1]");
    }

    std::map<double, std::vector<CountTable>> tables;
    TrialRecord rec;
    uint64_t n = 0;
    while (reader.next(rec)) {
        auto& row = tables[rec.delay];
        if (row.empty()) row.resize(read_windows.size());
        for (size_t k = 0; k < read_windows.size(); k++) {
            row[k].add(window_counts(rec, write_window, read_windows[k]));
        }
        n++;
    }
    if (n == 0) {
        throw DataError(a.records + ": no trial records");
    }

    auto f = open_output(a.out);
    f << "delay_us,tau_r_us,n_trials,n_heralds,mean_n_w,mean_n_r";
    for (const char* s : kStatNames) f << "," << s << "," << s << "_se";
    f << ",undefined\n";
    std::string first_r;
    uint64_t row_index = 0;
    size_t undefined_cells = 0;
    for (const auto& [delay, row] : tables) {
        for (size_t k = 0; k < row.size(); k++) {
            CorrelationResult c = correlate(row[k], eta, a.bootstrap, StreamRng::mix(a.seed + row_index++));
            f << fmt(delay * 1e6) << "," << fmt((read_windows[k].end - read_windows[k].start) * 1e6) << "," << c.n_trials << ","
              << c.n_heralds << "," << fmt(c.mean_n_w) << "," << fmt(c.mean_n_r);
            for (const auto* e : {&c.g2_ww, &c.g2_rr, &c.g2_wr, &c.g2_rr_given_w, &c.R, &c.eta_r,
                                  &c.eta_r_intrinsic}) {
                double nan = std::numeric_limits<double>::quiet_NaN();
                f << "," << fmt(*e ? (*e)->value : nan) << "," << fmt(*e ? (*e)->std_error : nan);
            }
            std::string undef;
            for (const auto& u : c.undefined) undef += (undef.empty() ? "" : ";") + u;
            undefined_cells += c.undefined.size();
            f << "," << undef << "\n";
            if (first_r.empty()) first_r = c.R ? fmt(c.R->value) : "undefined";
        }
    }
    if (!f) {
        throw DataError("failed writing '" + a.out + "'");
    }

    json m = manifest_base("analyze", args);
    m["config_hash"] = reader.header().config_hash;
    m["seed"] = a.seed;
    m["bootstrap"] = a.bootstrap;
    m["inputs"] = json::array({a.records});
    m["outputs"] = json::array({a.out});
    write_manifest(a.out, m, started);
    out << "analyze: " << n << " trials, " << tables.size() << " delay(s) x " << read_windows.size()
        << " read window(s), R=" << first_r << " (first row), " << undefined_cells << " undefined cell(s) -> "
        << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string model;
    std::string out;
    std::string in;
    std::string column = "eta_r";
    std::string decay_model;
    std::string tau_r;
    std::string records;
    std::string records_nowrite;
    double bin_us = 2.0;
    std::string write_window = "0,inf";
    bool unconditional_only = false;
    std::string decomposition;
    std::string config;
    std::string scan_kind = "write";
};

json fit_decay(const FitArgs& a, std::string& summary) {
    if (a.in.empty()) throw UsageError("--in is required for --model decay");
    CsvTable t = read_csv(a.in);
    size_t c_delay = t.column("delay_us");
    size_t c_val = t.column(a.column);
    size_t c_se = t.column(a.column + "_se");
    std::optional<double> tau_r_sel;
    if (!a.tau_r.empty()) tau_r_sel = parse_number(a.tau_r);
    std::set<std::string> tau_r_values;
    bool has_tau_r = std::find(t.columns.begin(), t.columns.end(), "tau_r_us") != t.columns.end();
    if (has_tau_r) {
        for (const auto& r : t.rows) tau_r_values.insert(r[t.column("tau_r_us")]);
    }
    if (tau_r_values.size() > 1 && !tau_r_sel) {
        throw UsageError("table holds several read windows; choose one with --tau-r");
    }
    DecayModel model = a.decay_model.empty()
                           ? (a.column.rfind("eta", 0) == 0 ? DecayModel::pure : DecayModel::offset)
                           : parse_decay_model(a.decay_model);
    std::vector<DecayPoint> pts;
    size_t skipped = 0;
    for (size_t i = 0; i < t.rows.size(); i++) {
        if (tau_r_sel && has_tau_r && std::abs(t.number(i, t.column("tau_r_us")) - *tau_r_sel) > 1e-9) continue;
        double v = t.number(i, c_val), se = t.number(i, c_se);
        if (!std::isfinite(v) || !(se > 0.0)) {
            skipped++;
            continue;
        }
        pts.push_back({t.number(i, c_delay) * 1e-6, v, se});
    }
    json j{{"model", "decay"}, {"decay_model", decay_model_name(model)}, {"column", a.column},
           {"points", pts.size()}, {"skipped_points", skipped}};
    DecayFitResult r = fit_exp_decay(pts, model);
    j["amplitude"] = r.amplitude;
    j["amplitude_std_error"] = r.amplitude_std_error;
    j["tau_s"] = r.tau;
    j["tau_std_error_s"] = r.tau_std_error;
    j["offset"] = r.offset;
    j["covariance"] = {{r.covariance(0, 0), r.covariance(0, 1)}, {r.covariance(1, 0), r.covariance(1, 1)}};
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = true;
    j["message"] = r.message;
    summary = "fit decay: tau = " + fmt(r.tau * 1e6) + " +- " + fmt(r.tau_std_error * 1e6) + " us (" +
              std::to_string(pts.size()) + " points)";
    return j;
}

BinnedCounts empty_histogram(double read_duration, double bin) {
    auto bins = static_cast<size_t>(std::floor(read_duration / bin + 1e-9));
    if (bins == 0) throw UsageError("--bin-us larger than the read window");
    BinnedCounts h;
    h.bin_width = bin;
    h.counts.assign(bins, 0.0);
    return h;
}

void accumulate(BinnedCounts& h, const TrialRecord& r) {
    h.n_pulses += 1.0;
    for (double t : r.read_clicks) {
        double pos = (t - h.t_start) / h.bin_width;
        if (pos >= 0.0 && pos < static_cast<double>(h.size())) h.counts[static_cast<size_t>(pos)] += 1.0;
    }
}

json fit_shape(const FitArgs& a, std::string& summary) {
    if (a.records.empty() || a.records_nowrite.empty()) {
        throw UsageError("--records and --records-nowrite are required for --model shape");
    }
    if (!(a.bin_us > 0.0)) throw UsageError("--bin-us must be positive");
    auto [w0, w1] = parse_window_us(a.write_window);
    Window write_window{w0, w1};

    auto in_w = open_input(a.records);
    RecordsReader with(in_w);
    if (with.header().delays.size() != 1) {
        throw DataError(a.records + ": shape fits need records at a single write-read delay");
    }
    ExperimentConfig cfg = config_from_json(with.header().config);
    cfg.write_read_delay = with.header().delays.front();
    const double bin = a.bin_us * 1e-6;

    BinnedCounts all = empty_histogram(cfg.read_duration, bin), heralded = all, nowrite = all;
    TrialRecord rec;
    while (with.next(rec)) {
        accumulate(all, rec);
        bool h = std::any_of(rec.write_clicks.begin(), rec.write_clicks.end(),
                             [&](double t) { return write_window.contains(t); });
        if (h) accumulate(heralded, rec);
    }
    auto in_n = open_input(a.records_nowrite);
    RecordsReader without(in_n);
    while (without.next(rec)) accumulate(nowrite, rec);
    if (all.n_pulses == 0 || nowrite.n_pulses == 0) {
        throw DataError("shape fit: empty records");
    }

    SourceSimulator sim(cfg);
    const double survive = std::exp(-cfg.write_read_delay / cfg.spin_wave_lifetime);
    std::vector<ChiFitDataset> sets;
    sets.push_back({all, nowrite, sim.mean_symmetric_excitations(false) * survive, "unconditional"});
    if (!a.unconditional_only && heralded.n_pulses > 0) {
        sets.push_back({heralded, nowrite, sim.mean_symmetric_excitations(true) * survive, "heralded"});
    }
    ShapeModelParams fixed = ShapeModelParams::from_config(cfg, sets.front().n_ce);

    json j{{"model", "shape"}, {"configured_chi_r", cfg.fwm_couplings.chi_r}, {"bin_width_s", bin}};
    for (const auto& s : sets) {
        j["datasets"].push_back({{"label", s.label}, {"n_ce", s.n_ce}, {"pulses_with_write", s.with_write.n_pulses},
                                 {"pulses_without_write", s.without_write.n_pulses}});
    }
    ChiFitResult r = fit_chi_r(sets, fixed);
    j["chi_r"] = r.chi_r;
    j["chi_r_std_error"] = r.chi_r_stderr;
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["bins_used"] = r.bins_used;
    j["converged"] = r.converged;
    j["message"] = r.message;

    fixed.chi_r = r.chi_r;
    ShapeDecomposition d = decompose_shape(fixed, all, FilterChain(cfg.filter_chain));
    std::string dpath = a.decomposition.empty() ? a.out + ".decomposition.csv" : a.decomposition;
    auto f = open_output(dpath);
    f << "bin_start_us,bin_width_us,data,retrieval,fwm,leakage,background,residual\n";
    for (size_t k = 0; k < d.data.size(); k++) {
        f << fmt(d.bin_start[k] * 1e6) << "," << fmt(d.bin_width[k] * 1e6) << "," << fmt(d.data[k]) << ","
          << fmt(d.retrieval[k]) << "," << fmt(d.fwm[k]) << "," << fmt(d.leakage[k]) << "," << fmt(d.background[k])
          << "," << fmt(d.residual[k]) << "\n";
    }
    j["decomposition"] = dpath;
    summary = "fit shape: chi_r = " + fmt(r.chi_r) + " +- " + fmt(r.chi_r_stderr) + " (configured " +
              fmt(cfg.fwm_couplings.chi_r) + ")";
    return j;
}

json fit_scan_cmd(const FitArgs& a, std::string& summary) {
    if (a.in.empty()) throw UsageError("--in is required for --model scan");
    ScanModel model;
    try {
        model.kind = parse_scan_kind(a.scan_kind);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    ExperimentConfig cfg = config_or_nominal(a.config);
    model.chain = FilterChain(cfg.filter_chain);
    model.zeeman_splitting = cfg.zeeman_splitting;
    CsvTable t = read_csv(a.in);
    size_t cd = t.column("detuning_hz"), cc = t.column("counts"), cp = t.column("pulses");
    std::vector<ScanPoint> pts;
    for (size_t i = 0; i < t.rows.size(); i++) {
        pts.push_back({t.number(i, cd), t.number(i, cc), t.number(i, cp)});
    }
    json j{{"model", "scan"}, {"scan_kind", scan_kind_name(model.kind)}, {"points", pts.size()}};
    ScanFit r = fit_scan(pts, model);
    const char* names[] = {"peak_amplitude", "pedestal_amplitude", "pedestal_width_hz", "leakage_amplitude",
                           "background"};
    double vals[] = {r.params.peak_amplitude, r.params.pedestal_amplitude, r.params.pedestal_width,
                     r.params.leakage_amplitude, r.params.background};
    for (int i = 0; i < 5; i++) {
        j[names[i]] = vals[i];
        j[std::string(names[i]) + "_std_error"] = std::isfinite(r.std_errors[i]) ? json(r.std_errors[i]) : json();
    }
    j["leakage_center_hz"] = r.leakage_center;
    j["write_efficiency"] = r.write_efficiency;
    j["write_efficiency_std_error"] = r.write_efficiency_std_error;
    j["counts_at_zero_detuning"] = scan_forward(model, r.params, 0.0);
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = true;
    j["message"] = r.message;
    summary = "fit scan: write_efficiency = " + fmt(r.write_efficiency) + " +- " +
              fmt(r.write_efficiency_std_error) + ", peak " + fmt(r.params.peak_amplitude) + " counts/pulse";
    return j;
}

int cmd_fit(const FitArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    auto started = Clock::now();
    json m = manifest_base("fit", args);
    std::vector<std::string> inputs;
    for (const auto* s : {&a.in, &a.records, &a.records_nowrite, &a.config}) {
        if (!s->empty()) inputs.push_back(*s);
    }
    m["inputs"] = inputs;
    m["outputs"] = json::array({a.out});

    std::string summary;
    json report;
    int code = kExitOk;
    try {
        if (a.model == "decay") {
            report = fit_decay(a, summary);
        } else if (a.model == "shape") {
            report = fit_shape(a, summary);
        } else if (a.model == "scan") {
            report = fit_scan_cmd(a, summary);
        } else {
            throw UsageError("--model must be decay, shape or scan");
        }
    } catch (const ConvergenceError& e) {
        report = json{{"model", a.model}, {"converged", false}, {"message", e.what()}};
        summary = std::string("fit ") + a.model + ": did not converge: " + e.what();
        code = kExitConvergence;
    }
    report["manifest"] = std::filesystem::path(manifest_path(a.out)).filename().string();
    auto f = open_output(a.out);
    f << report.dump(2) << "\n";
    if (!f) {
        throw DataError("failed writing '" + a.out + "'");
    }
    write_manifest(a.out, m, started);
    out << summary << "\n";
    return code;
}

}  // namespace

std::pair<double, double> parse_window_us(const std::string& text) {
    auto parts = split(text, ',');
    if (parts.size() != 2) {
        throw UsageError("window '" + text + "' must be given as A,B");
    }
    double a = parse_us(parts[0]), b = parse_us(parts[1]);
    if (!(b >= a)) {
        throw UsageError("window '" + text + "' ends before it starts");
    }
    return {a, b};
}

std::vector<double> parse_list_us(const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) {
        out.push_back(parse_us(s));
    }
    if (out.empty()) {
        throw UsageError("empty list");
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte Carlo simulation and photon-counting analysis of a heralded single-photon source"};
    app.name("dlcz");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate write/read trials and write JSONL click records");
    s->add_option("--config", sim.config, "Experiment config JSON (default: nominal)");
    s->add_option("--trials", sim.trials, "Trials per delay")->required();
    s->add_option("--seed", sim.seed, "Master seed (default: from config)");
    s->add_option("--out", sim.out, "Output JSONL path")->required();
    s->add_option("--delays-us", sim.delays_us, "Comma-separated write-read delays in us");
    s->add_flag("--no-write", sim.no_write, "Disable the write pulse");
    s->add_option("--threads", sim.threads, "Worker threads (0 = hardware concurrency)");

    ScanArgs scan;
    auto* sc = app.add_subcommand("scan", "Simulate a filter-detuning scan and write counts per detuning");
    sc->add_option("--config", scan.config, "Experiment config JSON (default: nominal)");
    sc->add_option("--kind", scan.kind, "write, read or read-no-write");
    sc->add_option("--detunings-mhz", scan.detunings_mhz, "Comma-separated filter detunings in MHz");
    sc->add_option("--trials", scan.trials, "Trials per detuning")->required();
    sc->add_option("--seed", scan.seed, "Master seed (default: from config)");
    sc->add_option("--out", scan.out, "Output CSV path")->required();
    sc->add_option("--threads", scan.threads, "Worker threads (0 = hardware concurrency)");

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "Correlation functions and retrieval efficiency from click records");
    a->add_option("--records", an.records, "Input JSONL records")->required();
    a->add_option("--out", an.out, "Output CSV path")->required();
    a->add_option("--write-window", an.write_window, "Write window A,B in us")->capture_default_str();
    a->add_option("--read-window", an.read_window, "Read window A,B in us")->capture_default_str();
    a->add_option("--tau-r", an.tau_r, "Comma-separated read-window lengths in us (one row each)");
    a->add_option("--bootstrap", an.bootstrap, "Bootstrap resamples (>= 100)")->capture_default_str();
    a->add_option("--seed", an.seed, "Bootstrap seed")->capture_default_str();
    a->add_option("--detection-efficiency", an.detection_efficiency,
                  "Detection efficiency for the intrinsic efficiency (default: from records)");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit decay, temporal-shape or spectral-scan models");
    f->add_option("--model", fit.model, "decay, shape or scan")->required();
    f->add_option("--out", fit.out, "Output JSON report")->required();
    f->add_option("--in", fit.in, "Input CSV (analyze output for decay, scan table for scan)");
    f->add_option("--column", fit.column, "Decay: column to fit")->capture_default_str();
    f->add_option("--decay-model", fit.decay_model, "Decay: pure or offset (default by column)");
    f->add_option("--tau-r", fit.tau_r, "Decay: select rows with this read-window length in us");
    f->add_option("--records", fit.records, "Shape: records with write");
    f->add_option("--records-nowrite", fit.records_nowrite, "Shape: records without write");
    f->add_option("--bin-us", fit.bin_us, "Shape: histogram bin width in us")->capture_default_str();
    f->add_option("--write-window", fit.write_window, "Shape: herald window A,B in us")->capture_default_str();
    f->add_flag("--unconditional-only", fit.unconditional_only, "Shape: skip the heralded dataset");
    f->add_option("--decomposition", fit.decomposition, "Shape: decomposition CSV (default: <out>.decomposition.csv)");
    f->add_option("--config", fit.config, "Scan: config with the filter chain (default: nominal)");
    f->add_option("--scan-kind", fit.scan_kind, "Scan: write, read or read-no-write")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& x : args) argv.push_back(x.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitUsage;
    }
    sim.seed_given = s->count("--seed") > 0;
    scan.seed_given = sc->count("--seed") > 0;

    std::vector<std::string> recorded(args.begin() + (args.empty() ? 0 : 1), args.end());
    try {
        if (s->parsed()) return cmd_simulate(sim, recorded, out);
        if (sc->parsed()) return cmd_scan(scan, recorded, out);
        if (a->parsed()) return cmd_analyze(an, recorded, out);
        if (f->parsed()) return cmd_fit(fit, recorded, out);
    } catch (const UsageError& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const ConfigError& e) {
        err << "dlcz: config: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitData;
    } catch (const std::out_of_range& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "dlcz: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace dlcz::cli
