#include "kfl/report.hpp"

#include <cstdlib>
#include <utility>

#include <json.hpp>

#include "kfl/errors.hpp"
#include "kfl/util.hpp"

namespace kfl {

namespace {

using json = nlohmann::ordered_json;

double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw InconsistencyError("parse_double: not a number: '" + s + "'");
    return v;
}

void check_token(const std::string& name) {
    if (name.empty() || name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
        throw ShapeError("csv token must be nonempty and contain no comma or newline: '" + name +
                         "'");
}

json parse_json(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(std::string(what) + ": malformed JSON");
    return j;
}

}  // namespace

void StatsTable::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw ShapeError("StatsTable::add_row: row width does not match the header");
    rows.push_back(std::move(row));
}

std::size_t StatsTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InconsistencyError("StatsTable: no column named '" + name + "'");
}

std::vector<double> StatsTable::column(const std::string& name) const {
    std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

double StatsTable::at(std::size_t row, const std::string& name) const {
    if (row >= rows.size()) throw ShapeError("StatsTable::at: row out of range");
    return rows[row][column_index(name)];
}

std::string StatsTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        check_token(columns[i]);
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += format_double(r[i]);
        }
        out += '\n';
    }
    return out;
}

StatsTable stats_table_from_csv(const std::string& text) {
    StatsTable t;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t f = 0;
        while (true) {
            std::size_t c = line.find(',', f);
            if (c == std::string::npos) {
                fields.push_back(line.substr(f));
                break;
            }
            fields.push_back(line.substr(f, c - f));
            f = c + 1;
        }
        if (header) {
            t.columns = std::move(fields);
            header = false;
        } else {
            std::vector<double> row;
            row.reserve(fields.size());
            for (const auto& s : fields) row.push_back(parse_double(s));
            t.add_row(std::move(row));
        }
    }
    if (t.columns.empty()) throw ShapeError("stats_table_from_csv: missing header line");
    return t;
}

bool VerdictSet::all_pass() const {
    for (const auto& v : items)
        if (!v.pass) return false;
    return true;
}

std::string VerdictSet::to_json() const {
    json arr = json::array();
    for (const auto& v : items) {
        json o;
        o["name"] = v.name;
        o["pass"] = v.pass;
        // Numbers as shortest round-trip strings so non-finite values survive.
        o["value"] = format_double(v.value);
        o["threshold"] = format_double(v.threshold);
        o["note"] = v.note;
        arr.push_back(std::move(o));
    }
    json root;
    root["all_pass"] = all_pass();
    root["verdicts"] = std::move(arr);
    return root.dump(2) + "\n";
}

VerdictSet verdict_set_from_json(const std::string& text) {
    json root = parse_json(text, "verdict_set_from_json");
    VerdictSet out;
    for (const auto& o : root.at("verdicts")) {
        Verdict v;
        v.name = o.at("name").get<std::string>();
        v.pass = o.at("pass").get<bool>();
        v.value = parse_double(o.at("value").get<std::string>());
        v.threshold = parse_double(o.at("threshold").get<std::string>());
        v.note = o.at("note").get<std::string>();
        out.items.push_back(std::move(v));
    }
    return out;
}

void MetricReport::validate() const {
    if (!(bracket_lower <= bracket_upper))
        throw InconsistencyError("MetricReport: bracket lower exceeds upper");
}

std::string MetricReport::to_json() const {
    validate();
    json root;
    root["p"] = format_double(p);
    root["q"] = format_double(q);
    root["p_prime"] = format_double(p_prime);
    root["calabi_bracket"] = {format_double(bracket_lower), format_double(bracket_upper)};
    root["mabuchi_length"] = format_double(mabuchi_length);
    json stats = json::array();
    for (const auto& s : cauchy_stats) {
        json o;
        o["j"] = s.j;
        o["k"] = s.k;
        o["stat_name"] = s.stat_name;
        o["value"] = format_double(s.value);
        stats.push_back(std::move(o));
    }
    root["cauchy_stats"] = std::move(stats);
    json ent = json::array();
    for (double e : entropies) ent.push_back(format_double(e));
    root["entropies"] = std::move(ent);
    return root.dump(2) + "\n";
}

std::string MetricReport::cauchy_csv() const {
    std::string out = "j,k,stat_name,value\n";
    for (const auto& s : cauchy_stats) {
        check_token(s.stat_name);
        out += std::to_string(s.j) + ',' + std::to_string(s.k) + ',' + s.stat_name + ',' +
               format_double(s.value) + '\n';
    }
    return out;
}

MetricReport metric_report_from_json(const std::string& text) {
    json root = parse_json(text, "metric_report_from_json");
    MetricReport r;
    r.p = parse_double(root.at("p").get<std::string>());
    r.q = parse_double(root.at("q").get<std::string>());
    r.p_prime = parse_double(root.at("p_prime").get<std::string>());
    r.bracket_lower = parse_double(root.at("calabi_bracket").at(0).get<std::string>());
    r.bracket_upper = parse_double(root.at("calabi_bracket").at(1).get<std::string>());
    r.mabuchi_length = parse_double(root.at("mabuchi_length").get<std::string>());
    for (const auto& o : root.at("cauchy_stats")) {
        PairStat s;
        s.j = o.at("j").get<int>();
        s.k = o.at("k").get<int>();
        s.stat_name = o.at("stat_name").get<std::string>();
        s.value = parse_double(o.at("value").get<std::string>());
        r.cauchy_stats.push_back(std::move(s));
    }
    for (const auto& e : root.at("entropies"))
        r.entropies.push_back(parse_double(e.get<std::string>()));
    r.validate();
    return r;
}

}  // namespace kfl
