#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kfl {

// Column-named table of doubles; the exchange format for every numeric
// series. CSV payloads use shortest round-trip decimals, so re-serializing a
// parsed table is byte-identical.
struct StatsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    double at(std::size_t row, const std::string& name) const;
    std::string to_csv() const;
};

StatsTable stats_table_from_csv(const std::string& text);

// One machine-checkable claim with the measured value it was judged on.
struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct VerdictSet {
    std::vector<Verdict> items;

    void add(Verdict v) { items.push_back(std::move(v)); }
    bool all_pass() const;
    std::string to_json() const;
};

VerdictSet verdict_set_from_json(const std::string& text);

// Per-pair Cauchy statistic entry (CSV columns: j, k, stat_name, value).
struct PairStat {
    int j = 0;
    int k = 0;
    std::string stat_name;
    double value = 0.0;
};

// Summary of one metric computation between potentials: distance bracket,
// Mabuchi length, pairwise statistics, entropies, and the exponents used.
struct MetricReport {
    double p = 2.0;
    double q = 1.0;
    double p_prime = 1.0;
    double bracket_lower = 0.0;
    double bracket_upper = 0.0;
    double mabuchi_length = 0.0;
    std::vector<PairStat> cauchy_stats;
    std::vector<double> entropies;

    // InconsistencyError when bracket_lower > bracket_upper.
    void validate() const;
    std::string to_json() const;
    std::string cauchy_csv() const;
};

MetricReport metric_report_from_json(const std::string& text);

}  // namespace kfl
