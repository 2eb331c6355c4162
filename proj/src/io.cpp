#include "kfl/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "kfl/errors.hpp"
#include "kfl/util.hpp"

namespace kfl {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::ordered_json;

constexpr char kGridMagic[5] = {'K', 'F', 'L', 'G', '1'};
constexpr std::size_t kGridHeaderBytes = 26;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

GeometryPtr make_geometry(BackendKind kind, int resolution) {
    return kind == BackendKind::FlatTorus ? Geometry::make_torus(resolution)
                                          : Geometry::make_p1(resolution);
}

double parse_double_strict(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != s.size())
        throw IoError(what + ": not a number: '" + s + "'");
    return v;
}

std::string snapshot_name(const char* stem, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.grid", stem, index);
    return buf;
}

// Every stride-th index plus the last one, so endpoints always persist.
std::vector<std::size_t> strided_indices(std::size_t n, int stride) {
    if (stride < 1) throw DomainError("snapshot_stride must be >= 1");
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < n; j += static_cast<std::size_t>(stride)) keep.push_back(j);
    if (n > 0 && keep.back() != n - 1) keep.push_back(n - 1);
    return keep;
}

json key_values_to_json(const KeyValues& kv) {
    json obj = json::object();
    for (const auto& [k, v] : kv) obj[k] = v;
    return obj;
}

KeyValues key_values_from_json(const json& obj, const std::string& what) {
    if (!obj.is_object()) throw IoError(what + ": expected a JSON object");
    KeyValues out;
    for (const auto& [k, v] : obj.items()) {
        if (!v.is_string()) throw IoError(what + ": values must be strings");
        out.emplace_back(k, v.get<std::string>());
    }
    return out;
}

json parse_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw IoError("malformed JSON in " + path);
    return j;
}

const char* flow_kind_name(FlowKind k) {
    return k == FlowKind::KahlerRicci ? "kahler-ricci" : "calabi";
}

FlowKind flow_kind_from_name(const std::string& s) {
    if (s == "kahler-ricci") return FlowKind::KahlerRicci;
    if (s == "calabi") return FlowKind::Calabi;
    throw IoError("unknown flow kind '" + s + "'");
}

// Restores a stored potential without re-projecting, so bytes round-trip;
// admissibility and the zero-mean invariant are still re-checked.
Potential restore_potential(const GeometryPtr& geom, ArrayXd values, const std::string& path) {
    geom->measure().check_shape(values, "stored potential");
    if (!values.isFinite().all()) throw NumericError("non-finite stored potential: " + path);
    double scale = std::max(1.0, values.abs().maxCoeff());
    if (std::abs(geom->mean(values)) > 1e-10 * scale)
        throw InconsistencyError("stored potential is not zero-mean: " + path);
    ArrayXd rho = 1.0 + geom->laplace(values);
    if (!(rho.minCoeff() > kPositivityFloor))
        throw NotKahlerError("stored potential is not admissible: " + path);
    return Potential{geom, std::move(values)};
}

std::string join(const std::string& dir, const std::string& rel) {
    return (fs::path(dir) / rel).string();
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path);
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

void write_grid_binary(const std::string& path, const GeometryPtr& geom, const ArrayXd& values) {
    if (!geom) throw InconsistencyError("write_grid_binary: missing geometry handle");
    if (values.size() != geom->sites())
        throw ShapeError("write_grid_binary: value count does not match the geometry");
    std::string buf;
    buf.reserve(kGridHeaderBytes + 8 * static_cast<std::size_t>(values.size()));
    buf.append(kGridMagic, sizeof kGridMagic);
    buf.push_back(geom->kind() == BackendKind::FlatTorus ? '\0' : '\1');
    put_u32(buf, static_cast<std::uint32_t>(geom->resolution()));
    put_f64(buf, geom->volume());
    put_u64(buf, static_cast<std::uint64_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) put_f64(buf, values[i]);
    write_text_file(path, buf);
}

std::pair<GeometryPtr, ArrayXd> read_grid_binary(const std::string& path) {
    std::string buf = read_text_file(path);
    if (buf.size() < kGridHeaderBytes) throw IoError("grid file too short: " + path);
    if (std::memcmp(buf.data(), kGridMagic, sizeof kGridMagic) != 0)
        throw IoError("bad grid magic in " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    if (p[5] != 0 && p[5] != 1) throw IoError("unknown backend byte in " + path);
    BackendKind kind = p[5] == 0 ? BackendKind::FlatTorus : BackendKind::RoundP1;
    int resolution = static_cast<int>(get_u32(p + 6));
    double volume = get_f64(p + 10);
    std::uint64_t count = get_u64(p + 18);
    GeometryPtr geom = make_geometry(kind, resolution);
    if (count != static_cast<std::uint64_t>(geom->sites()))
        throw IoError("site count mismatch in " + path);
    if (buf.size() != kGridHeaderBytes + 8 * count) throw IoError("truncated grid payload in " + path);
    if (std::abs(volume - geom->volume()) > 1e-12 * std::max(1.0, geom->volume()))
        throw InconsistencyError("recorded volume disagrees with the backend in " + path);
    ArrayXd values(static_cast<Eigen::Index>(count));
    for (std::uint64_t i = 0; i < count; ++i)
        values[static_cast<Eigen::Index>(i)] = get_f64(p + kGridHeaderBytes + 8 * i);
    return {std::move(geom), std::move(values)};
}

void write_grid_csv(const std::string& path, const GeometryPtr& geom, const ArrayXd& values) {
    if (!geom) throw InconsistencyError("write_grid_csv: missing geometry handle");
    if (values.size() != geom->sites())
        throw ShapeError("write_grid_csv: value count does not match the geometry");
    std::string out = "backend,resolution,volume\n";
    out += backend_name(geom->kind());
    out += ',';
    out += std::to_string(geom->resolution());
    out += ',';
    out += format_double(geom->volume());
    out += "\nvalue\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out += format_double(values[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

std::pair<GeometryPtr, ArrayXd> read_grid_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "backend,resolution,volume")
        throw IoError("bad grid CSV header in " + path);
    if (!std::getline(in, line)) throw IoError("missing grid CSV metadata row in " + path);
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw IoError("malformed grid CSV metadata row in " + path);
    BackendKind kind = backend_from_name(line.substr(0, c1));
    int resolution = static_cast<int>(
        parse_double_strict(line.substr(c1 + 1, c2 - c1 - 1), "grid CSV resolution"));
    double volume = parse_double_strict(line.substr(c2 + 1), "grid CSV volume");
    if (!std::getline(in, line) || line != "value")
        throw IoError("missing grid CSV value header in " + path);
    GeometryPtr geom = make_geometry(kind, resolution);
    if (std::abs(volume - geom->volume()) > 1e-12 * std::max(1.0, geom->volume()))
        throw InconsistencyError("recorded volume disagrees with the backend in " + path);
    std::vector<double> raw;
    raw.reserve(static_cast<std::size_t>(geom->sites()));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        raw.push_back(parse_double_strict(line, "grid CSV value"));
    }
    if (raw.size() != static_cast<std::size_t>(geom->sites()))
        throw IoError("site count mismatch in " + path);
    ArrayXd values = Eigen::Map<const ArrayXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    return {std::move(geom), std::move(values)};
}

StatsTable criterion_stats(const LengthCriterionReport& rep) {
    StatsTable t{{"t", "g", "running_integral"}, {}};
    for (const auto& r : rep.rows) t.add_row({r.time, r.g, r.running_integral});
    return t;
}

void write_trajectory_dir(const std::string& dir, const FlowTrajectory& traj, int snapshot_stride,
                          const KeyValues& extra) {
    if (traj.states.empty()) throw ShapeError("write_trajectory_dir: empty trajectory");
    if (traj.times.size() != traj.states.size())
        throw InconsistencyError("write_trajectory_dir: times and states disagree");
    const GeometryPtr& geom = traj.states.front().geom;
    fs::create_directories(fs::path(dir) / "snapshots");

    json meta;
    meta["format"] = "kfl-trajectory-1";
    meta["flow_kind"] = flow_kind_name(traj.flow_kind);
    meta["backend"] = backend_name(geom->kind());
    meta["resolution"] = geom->resolution();
    meta["scheme"] = traj.flow_kind == FlowKind::KahlerRicci
                         ? "semi-implicit: (L + I) implicit, log remainder explicit"
                         : "semi-implicit: (L^2 + S_bar L) implicit";
    json snaps = json::array();
    for (std::size_t j : strided_indices(traj.states.size(), snapshot_stride)) {
        std::string name = snapshot_name("state", j);
        write_grid_binary(join(dir, "snapshots/" + name), geom, traj.states[j].values);
        json entry;
        entry["index"] = j;
        entry["time"] = format_double(traj.times[j]);
        entry["file"] = "snapshots/" + name;
        snaps.push_back(std::move(entry));
    }
    meta["snapshots"] = std::move(snaps);
    meta["extra"] = key_values_to_json(extra);
    write_text_file(join(dir, "metadata.json"), meta.dump(2) + "\n");

    StatsTable diag{{"time", "dt", "residual", "min_density", "rejects"}, {}};
    for (const auto& d : traj.diagnostics)
        diag.add_row({d.time, d.dt, d.residual, d.min_density, static_cast<double>(d.rejects)});
    write_text_file(join(dir, "diagnostics.csv"), diag.to_csv());
}

FlowTrajectory read_trajectory_dir(const std::string& dir) {
    json meta = parse_json_file(join(dir, "metadata.json"));
    if (!meta.is_object() || meta.value("format", std::string()) != "kfl-trajectory-1")
        throw IoError("not a trajectory directory: " + dir);
    FlowTrajectory traj;
    traj.flow_kind = flow_kind_from_name(meta.at("flow_kind").get<std::string>());
    BackendKind backend = backend_from_name(meta.at("backend").get<std::string>());
    int resolution = meta.at("resolution").get<int>();
    const json& snaps = meta.at("snapshots");
    if (!snaps.is_array() || snaps.empty())
        throw IoError("trajectory directory without snapshots: " + dir);

    GeometryPtr geom;
    for (const json& entry : snaps) {
        std::string file = entry.at("file").get<std::string>();
        auto [g, values] = read_grid_binary(join(dir, file));
        if (g->kind() != backend || g->resolution() != resolution)
            throw InconsistencyError("snapshot header disagrees with metadata: " + file);
        if (!geom) geom = g;
        traj.times.push_back(
            parse_double_strict(entry.at("time").get<std::string>(), "snapshot time"));
        traj.states.push_back(restore_potential(geom, std::move(values), join(dir, file)));
    }

    StatsTable diag = stats_table_from_csv(read_text_file(join(dir, "diagnostics.csv")));
    const std::vector<std::string> expect = {"time", "dt", "residual", "min_density", "rejects"};
    if (diag.columns != expect) throw IoError("unexpected diagnostics columns in " + dir);
    for (const auto& r : diag.rows)
        traj.diagnostics.push_back({r[0], r[1], r[2], r[3], static_cast<int>(r[4])});
    return traj;
}

KeyValues read_trajectory_extra(const std::string& dir) {
    json meta = parse_json_file(join(dir, "metadata.json"));
    if (!meta.is_object() || meta.value("format", std::string()) != "kfl-trajectory-1")
        throw IoError("not a trajectory directory: " + dir);
    return key_values_from_json(meta.at("extra"), "trajectory extra");
}

void write_experiment_dir(const std::string& dir, const SequenceExperiment& ex,
                          int snapshot_stride, const KeyValues& extra) {
    if (!ex.geom) throw InconsistencyError("write_experiment_dir: missing geometry handle");
    fs::create_directories(fs::path(dir) / "snapshots");

    json params;
    params["format"] = "kfl-experiment-1";
    params["name"] = ex.name;
    params["backend"] = backend_name(ex.geom->kind());
    params["resolution"] = ex.geom->resolution();
    params["params"] = key_values_to_json(ex.params);
    json snaps = json::array();
    if (!ex.sequence.empty()) {
        for (std::size_t j : strided_indices(ex.sequence.size(), snapshot_stride)) {
            std::string name = snapshot_name("potential", j);
            write_grid_binary(join(dir, "snapshots/" + name), ex.geom, ex.sequence[j].values);
            json entry;
            entry["index"] = j;
            entry["file"] = "snapshots/" + name;
            snaps.push_back(std::move(entry));
        }
    }
    params["snapshots"] = std::move(snaps);
    params["extra"] = key_values_to_json(extra);
    write_text_file(join(dir, "params.json"), params.dump(2) + "\n");
    write_text_file(join(dir, "stats.csv"), ex.stats.to_csv());
    write_text_file(join(dir, "verdict.json"), ex.verdicts.to_json());
}

SequenceExperiment read_experiment_dir(const std::string& dir, bool load_snapshots) {
    json params = parse_json_file(join(dir, "params.json"));
    if (!params.is_object() || params.value("format", std::string()) != "kfl-experiment-1")
        throw IoError("not an experiment directory: " + dir);
    SequenceExperiment ex;
    ex.name = params.at("name").get<std::string>();
    BackendKind backend = backend_from_name(params.at("backend").get<std::string>());
    int resolution = params.at("resolution").get<int>();
    ex.geom = make_geometry(backend, resolution);
    ex.params = key_values_from_json(params.at("params"), "experiment params");
    ex.stats = stats_table_from_csv(read_text_file(join(dir, "stats.csv")));
    ex.verdicts = verdict_set_from_json(read_text_file(join(dir, "verdict.json")));
    if (load_snapshots) {
        for (const json& entry : params.at("snapshots")) {
            std::string file = entry.at("file").get<std::string>();
            auto [g, values] = read_grid_binary(join(dir, file));
            if (g->kind() != backend || g->resolution() != resolution)
                throw InconsistencyError("snapshot header disagrees with params: " + file);
            ex.sequence.push_back(restore_potential(ex.geom, std::move(values), join(dir, file)));
        }
    }
    return ex;
}

namespace {

std::string trim(const std::string& s) {
    auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
    std::size_t b = 0, e = s.size();
    while (b < e && issp(s[b])) ++b;
    while (e > b && issp(s[e - 1])) --e;
    return s.substr(b, e - b);
}

}  // namespace

bool Config::has(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return true;
    return false;
}

std::string Config::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw UsageError("missing config key '" + key + "'");
}

std::string Config::get_or(const std::string& key, std::string fallback) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    std::string s = get(key);
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != s.size())
        throw UsageError("config value for '" + key + "' is not a number: '" + s + "'");
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    std::string s = get(key);
    const char* begin = s.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin || static_cast<std::size_t>(end - begin) != s.size())
        throw UsageError("config value for '" + key + "' is not an integer: '" + s + "'");
    return v;
}

void Config::set(const std::string& key, const std::string& value) {
    overrides.emplace_back(key, value);
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries.emplace_back(key, value);
}

Config parse_config(const std::string& text) {
    Config cfg;
    cfg.raw_text = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.size() < 3 || t.back() != ']')
                throw UsageError("config line " + std::to_string(lineno) +
                                 ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw UsageError("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        bool replaced = false;
        for (auto& [k, v] : cfg.entries) {
            if (k == full) {
                v = value;
                replaced = true;
                break;
            }
        }
        if (!replaced) cfg.entries.emplace_back(full, value);
    }
    return cfg;
}

}  // namespace kfl
