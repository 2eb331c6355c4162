#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kfl/experiments.hpp"
#include "kfl/flows.hpp"
#include "kfl/geometry.hpp"
#include "kfl/report.hpp"

namespace kfl {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Whole-file text helpers. Throw IoError on open or write failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Grid file, binary variant. All multi-byte fields are little-endian
// regardless of host order:
//   bytes 0..4    magic "KFLG1"
//   byte  5       backend kind: 0 flat torus, 1 round sphere
//   bytes 6..9    resolution, unsigned 32-bit
//   bytes 10..17  total volume, IEEE 754 binary64
//   bytes 18..25  site count, unsigned 64-bit
//   then one binary64 per site, in the geometry's native site order
//   (row-major: site = row * resolution + column).
// The reader rebuilds the geometry from the header, checks the site count,
// and checks the recorded volume against the rebuilt one (IoError or
// InconsistencyError on mismatch). Values round-trip bit-exactly.
void write_grid_binary(const std::string& path, const GeometryPtr& geom, const ArrayXd& values);
std::pair<GeometryPtr, ArrayXd> read_grid_binary(const std::string& path);

// Grid file, CSV variant. Line 1 is the header "backend,resolution,volume",
// line 2 its values, line 3 the column header "value", then one site value
// per line in native site order. Doubles use the shortest decimal form that
// round-trips, so reading back is exact.
void write_grid_csv(const std::string& path, const GeometryPtr& geom, const ArrayXd& values);
std::pair<GeometryPtr, ArrayXd> read_grid_csv(const std::string& path);

// Criterion table with columns t, g, running_integral, one row per sample.
StatsTable criterion_stats(const LengthCriterionReport& rep);

// Trajectory directory layout:
//   metadata.json     format tag, flow kind, backend, resolution, scheme,
//                     stored snapshot times and file names, extra key=value
//                     pairs passed by the caller (dt, horizon, seeds)
//   diagnostics.csv   time, dt, residual, min_density, rejects per step
//   snapshots/state_NNNNNN.grid
// snapshot_stride keeps every k-th stored state; first and last always kept.
void write_trajectory_dir(const std::string& dir, const FlowTrajectory& traj,
                          int snapshot_stride = 1, const KeyValues& extra = {});

// Rebuilds a trajectory from a directory. States are the stored subset;
// diagnostics come back in full. Throws IoError on missing or malformed
// files and InconsistencyError on disagreeing headers.
FlowTrajectory read_trajectory_dir(const std::string& dir);

// Extra key=value pairs recorded in a trajectory's metadata.
KeyValues read_trajectory_extra(const std::string& dir);

// Experiment directory layout:
//   params.json   format tag, name, backend, resolution, ordered parameter
//                 list, snapshot file names, extra key=value pairs
//   stats.csv     the experiment's stats table
//   verdict.json  the experiment's verdict set
//   snapshots/potential_NNNNNN.grid
void write_experiment_dir(const std::string& dir, const SequenceExperiment& ex,
                          int snapshot_stride = 1, const KeyValues& extra = {});

// Rebuilds an experiment from a directory; with load_snapshots = false the
// sequence is left empty and only the geometry is rebuilt.
SequenceExperiment read_experiment_dir(const std::string& dir, bool load_snapshots = true);

// Run configuration, parsed from one human-editable file:
//   '[section]' headers, 'key = value' entries, '#' or ';' comment lines.
// Keys flatten to "section.key" ("key" alone before any section header).
// Later assignments to the same key win. The raw text is kept verbatim so
// output directories can mirror the exact input file.
struct Config {
    std::string raw_text;
    KeyValues entries;
    KeyValues overrides;  // set() calls, in order, for provenance

    bool has(const std::string& key) const;
    // Value of the key; UsageError when absent.
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, std::string fallback) const;
    // Numeric views; UsageError on absent key or unparsable value.
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    // Overrides or inserts, and records the assignment in `overrides`.
    void set(const std::string& key, const std::string& value);
};

// Parses config text. UsageError on a malformed line.
Config parse_config(const std::string& text);

}  // namespace kfl
