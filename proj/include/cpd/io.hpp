#pragma once

// File formats.
//
// Series file: UTF-8 text, one sample per line, '.' decimal point. Lines whose
// first non-blank character is '#' are comments; blank lines are ignored.
// Samples are written in shortest round-trip form.
//
// Result file (JSON, "schema": 1):
//   {schema, n, method, params, change_points: [int], pvalues: [real] | null,
//    levels: [real], runtime_seconds}
// Change points are 0-based: the first sample of each new segment.
//
// Truth sidecar (JSON, "schema": 1): {schema, kind, n, sigma, seed,
//   boundaries, levels}; written next to simulated series as <path>.truth.json.
//
// Index map sidecar (JSON, "schema": 1): {schema, wavelet, scale,
//   centre_offset, shifts: [int]}; Y_i corresponds to shift shifts[i] and time
//   shifts[i] + centre_offset.
//
// Bench config (JSON): any subset of {n, replications, sigma, seed, methods,
//   sweep, jobs, timing_runs, min_run_seconds, memory_budget_bytes,
//   spec: {boundaries, levels}, fdpv: {window, kmax, alpha_critic, min_gap},
//   plsc: {penalty, kmax, memory_mode}}; missing keys keep their defaults.

#include "cpd/bench.hpp"
#include "cpd/core.hpp"
#include "cpd/metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace cpd::io {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes via a sibling temporary file and rename.
inline void write_atomic(const std::filesystem::path &path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

inline std::vector<double> parse_series(std::string_view text) {
    std::vector<double> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos) continue;
        line.remove_prefix(first);
        if (line.front() == '#') continue;
        line = line.substr(0, line.find_last_not_of(" \t\r,") + 1);
        if (line.front() == '+') line.remove_prefix(1);

        double v = 0.0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size() || !std::isfinite(v))
            throw Error(ErrorKind::NonFinite,
                        "line " + std::to_string(line_no) + ": '" + std::string(line) + "' is not a finite number");
        out.push_back(v);
    }
    return out;
}

inline TimeSeries read_series(const std::filesystem::path &path) {
    TimeSeries s;
    s.values = parse_series(read_file(path));
    return s;
}

inline std::string format_series(std::span<const double> values, std::string_view header = {}) {
    std::string out;
    out.reserve(values.size() * 20 + header.size() + 4);
    if (!header.empty()) {
        out += "# ";
        out += header;
        out += '\n';
    }
    for (double v : values) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

inline void write_series(const std::filesystem::path &path, std::span<const double> values,
                         std::string_view header = {}) {
    write_atomic(path, format_series(values, header));
}

// ---------------------------------------------------------------------------
// JSON documents

inline Json to_json(const FdpvParams &p) {
    return Json{{"window", p.window},
                {"kmax", p.kmax},
                {"alpha_critic", p.alpha_critic},
                {"min_gap", p.effective_min_gap()}};
}

inline Json to_json(const PlscParams &p, double penalty) {
    return Json{{"penalty", penalty},
                {"kmax", p.kmax},
                {"memory_mode", p.memory_mode == MemoryMode::FullMatrix ? "full-matrix" : "lean"}};
}

struct ResultFile {
    std::size_t n = 0;
    std::string method;
    Json params = Json::object();
    Segmentation segmentation;
    double runtime_seconds = 0.0;
};

inline Json to_json(const ResultFile &r) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["n"] = r.n;
    j["method"] = r.method;
    j["params"] = r.params;
    j["change_points"] = r.segmentation.change_points;
    j["pvalues"] = r.segmentation.pvalues ? Json(*r.segmentation.pvalues) : Json(nullptr);
    j["levels"] = r.segmentation.levels;
    j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

inline void check_schema(const Json &j, std::string_view what) {
    if (!j.is_object() || !j.contains("schema") || j.at("schema") != kSchemaVersion)
        throw IoError(std::string(what) + ": missing or unsupported schema version");
}

inline ResultFile result_from_json(const Json &j) {
    check_schema(j, "result file");
    ResultFile r;
    r.n = j.at("n").get<std::size_t>();
    r.method = j.at("method").get<std::string>();
    r.params = j.value("params", Json::object());
    r.segmentation.change_points = j.at("change_points").get<std::vector<std::size_t>>();
    if (j.contains("pvalues") && !j.at("pvalues").is_null())
        r.segmentation.pvalues = j.at("pvalues").get<std::vector<double>>();
    r.segmentation.levels = j.at("levels").get<std::vector<double>>();
    r.runtime_seconds = j.value("runtime_seconds", 0.0);
    validate_segmentation(r.segmentation, r.n);
    return r;
}

struct TruthFile {
    std::string kind; ///< "mean" or "hurst"
    std::size_t n = 0;
    double sigma = 0.0;
    Seed seed = 0;
    PiecewiseSpec spec;
};

inline Json to_json(const TruthFile &t) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = t.kind;
    j["n"] = t.n;
    j["sigma"] = t.sigma;
    j["seed"] = t.seed;
    j["boundaries"] = t.spec.boundaries;
    j["levels"] = t.spec.levels;
    return j;
}

inline TruthFile truth_from_json(const Json &j) {
    check_schema(j, "truth file");
    TruthFile t;
    t.kind = j.at("kind").get<std::string>();
    t.n = j.at("n").get<std::size_t>();
    t.sigma = j.value("sigma", 0.0);
    t.seed = j.value("seed", Seed{0});
    t.spec.boundaries = j.at("boundaries").get<std::vector<std::size_t>>();
    t.spec.levels = j.at("levels").get<std::vector<double>>();
    validate_spec(t.spec, t.n);
    return t;
}

struct IndexMap {
    std::string wavelet;
    double scale = 0.0;
    double centre_offset = 0.0;
    std::vector<std::size_t> shifts;

    /// Time index of Y_i, rounded to the nearest sample.
    std::size_t time_of(std::size_t i) const {
        return static_cast<std::size_t>(std::llround(static_cast<double>(shifts.at(i)) + centre_offset));
    }
};

inline Json to_json(const IndexMap &m) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["wavelet"] = m.wavelet;
    j["scale"] = m.scale;
    j["centre_offset"] = m.centre_offset;
    j["shifts"] = m.shifts;
    return j;
}

inline IndexMap index_map_from_json(const Json &j) {
    check_schema(j, "index map");
    IndexMap m;
    m.wavelet = j.at("wavelet").get<std::string>();
    m.scale = j.at("scale").get<double>();
    m.centre_offset = j.at("centre_offset").get<double>();
    m.shifts = j.at("shifts").get<std::vector<std::size_t>>();
    return m;
}

inline Json read_json(const std::filesystem::path &path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::filesystem::path &path, const Json &j) {
    write_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Bench reports

inline Json to_json(const MethodReport &m) {
    Json hist = Json::object();
    for (const auto &[k, count] : m.k_histogram)
        hist[std::to_string(k)] = count;
    Json failures = Json::array();
    for (const auto &[r, msg] : m.failures)
        failures.push_back(Json{{"replication", r}, {"error", msg}});
    Json j;
    j["method"] = m.method;
    j["replications"] = m.replications;
    j["true_k"] = m.true_k;
    j["k_histogram"] = hist;
    j["correct_k_fraction"] = m.correct_k_fraction;
    j["mise"] = m.mise;
    j["secp"] = m.secp ? Json(*m.secp) : Json(nullptr);
    j["secp_raw"] = m.secp_raw ? Json(*m.secp_raw) : Json(nullptr);
    j["runtime_seconds"] = Json{{"mean", m.runtime.mean},
                                {"median", m.runtime.median},
                                {"min", m.runtime.min},
                                {"max", m.runtime.max}};
    j["peak_memory_bytes"] = m.peak_memory_bytes;
    j["failures"] = failures;
    return j;
}

inline MethodReport method_report_from_json(const Json &j) {
    MethodReport m;
    m.method = j.at("method").get<std::string>();
    m.replications = j.at("replications").get<std::size_t>();
    m.true_k = j.at("true_k").get<std::size_t>();
    for (const auto &[k, v] : j.at("k_histogram").items())
        m.k_histogram[std::stoul(k)] = v.get<std::size_t>();
    m.correct_k_fraction = j.at("correct_k_fraction").get<double>();
    m.mise = j.at("mise").get<double>();
    if (!j.at("secp").is_null()) m.secp = j.at("secp").get<double>();
    if (!j.at("secp_raw").is_null()) m.secp_raw = j.at("secp_raw").get<double>();
    const auto &rt = j.at("runtime_seconds");
    m.runtime = {rt.at("mean").get<double>(), rt.at("median").get<double>(), rt.at("min").get<double>(),
                 rt.at("max").get<double>()};
    m.peak_memory_bytes = j.at("peak_memory_bytes").get<std::size_t>();
    for (const auto &f : j.at("failures"))
        m.failures.emplace_back(f.at("replication").get<std::size_t>(), f.at("error").get<std::string>());
    return m;
}

inline Json to_json(const MonteCarloReport &r) {
    Json methods = Json::array();
    for (const auto &m : r.methods)
        methods.push_back(to_json(m));
    return Json{{"replications", r.replications}, {"n", r.n}, {"true_k", r.true_k}, {"methods", methods}};
}

inline MonteCarloReport report_from_json(const Json &j) {
    MonteCarloReport r;
    r.replications = j.at("replications").get<std::size_t>();
    r.n = j.at("n").get<std::size_t>();
    r.true_k = j.at("true_k").get<std::size_t>();
    for (const auto &m : j.at("methods"))
        r.methods.push_back(method_report_from_json(m));
    return r;
}

inline Json to_json(const SweepRow &row) {
    return Json{{"n", row.n},
                {"method", row.method},
                {"feasible", row.feasible},
                {"seconds", row.seconds},
                {"peak_bytes", row.peak_bytes},
                {"note", row.note}};
}

inline std::string to_string(MemoryMode m) {
    return m == MemoryMode::FullMatrix ? "full-matrix" : "lean";
}

inline MemoryMode memory_mode_from_string(std::string_view s) {
    if (s == "lean") return MemoryMode::Lean;
    if (s == "full-matrix") return MemoryMode::FullMatrix;
    throw Error(ErrorKind::InvalidArgument, "memory mode must be 'lean' or 'full-matrix'");
}

inline Json to_json(const BenchConfig &c) {
    Json j;
    j["n"] = c.n;
    j["replications"] = c.replications;
    j["sigma"] = c.sigma;
    j["seed"] = c.seed;
    j["methods"] = c.methods;
    j["sweep"] = c.sweep;
    j["jobs"] = c.jobs;
    j["timing_runs"] = c.timing_runs;
    j["min_run_seconds"] = c.min_run_seconds;
    j["memory_budget_bytes"] = c.memory_budget_bytes;
    const PiecewiseSpec spec = bench_spec(c);
    j["spec"] = Json{{"boundaries", spec.boundaries}, {"levels", spec.levels}};
    j["fdpv"] = to_json(c.fdpv);
    j["plsc"] = Json{{"penalty", c.plsc.penalty ? Json(*c.plsc.penalty) : Json(nullptr)},
                     {"kmax", c.plsc.kmax},
                     {"memory_mode", to_string(c.plsc.memory_mode)}};
    return j;
}

inline BenchConfig bench_config_from_json(const Json &j) {
    if (!j.is_object()) throw IoError("bench config must be a JSON object");
    BenchConfig c;
    c.n = j.value("n", c.n);
    c.replications = j.value("replications", c.replications);
    c.sigma = j.value("sigma", c.sigma);
    c.seed = j.value("seed", c.seed);
    c.methods = j.value("methods", c.methods);
    c.sweep = j.value("sweep", c.sweep);
    c.jobs = j.value("jobs", c.jobs);
    c.timing_runs = j.value("timing_runs", c.timing_runs);
    c.min_run_seconds = j.value("min_run_seconds", c.min_run_seconds);
    c.memory_budget_bytes = j.value("memory_budget_bytes", c.memory_budget_bytes);
    if (j.contains("spec") && !j.at("spec").is_null()) {
        const auto &s = j.at("spec");
        c.spec = PiecewiseSpec{s.at("boundaries").get<std::vector<std::size_t>>(),
                               s.at("levels").get<std::vector<double>>()};
    }
    if (j.contains("fdpv")) {
        const auto &f = j.at("fdpv");
        c.fdpv.window = f.value("window", c.fdpv.window);
        c.fdpv.kmax = f.value("kmax", c.fdpv.kmax);
        c.fdpv.alpha_critic = f.value("alpha_critic", c.fdpv.alpha_critic);
        c.fdpv.min_gap = f.value("min_gap", c.fdpv.min_gap);
    }
    if (j.contains("plsc")) {
        const auto &p = j.at("plsc");
        if (p.contains("penalty") && !p.at("penalty").is_null()) c.plsc.penalty = p.at("penalty").get<double>();
        c.plsc.kmax = p.value("kmax", c.plsc.kmax);
        if (p.contains("memory_mode")) c.plsc.memory_mode = memory_mode_from_string(p.at("memory_mode").get<std::string>());
    }
    return c;
}

inline std::string monte_carlo_csv(const MonteCarloReport &r) {
    std::string out = "method,replications,true_k,correct_k_fraction,mise,secp,secp_raw,mean_seconds,"
                      "peak_memory_bytes,failures,k_histogram\n";
    for (const auto &m : r.methods) {
        std::string hist;
        for (const auto &[k, c] : m.k_histogram) {
            if (!hist.empty()) hist += ';';
            hist += std::to_string(k) + ":" + std::to_string(c);
        }
        out += m.method + "," + std::to_string(m.replications) + "," + std::to_string(m.true_k) + "," +
               format_double(m.correct_k_fraction) + "," + format_double(m.mise) + "," +
               (m.secp ? format_double(*m.secp) : "") + "," + (m.secp_raw ? format_double(*m.secp_raw) : "") +
               "," + format_double(m.runtime.mean) + "," + std::to_string(m.peak_memory_bytes) + "," +
               std::to_string(m.failures.size()) + "," + hist + "\n";
    }
    return out;
}

inline std::string sweep_csv(const std::vector<SweepRow> &rows) {
    std::string out = "n,method,feasible,seconds,peak_bytes,note\n";
    for (const auto &row : rows)
        out += std::to_string(row.n) + "," + row.method + "," + (row.feasible ? "true" : "false") + "," +
               format_double(row.seconds) + "," + std::to_string(row.peak_bytes) + "," + row.note + "\n";
    return out;
}

} // namespace cpd::io
