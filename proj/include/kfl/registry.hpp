#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kfl/geometry.hpp"
#include "kfl/io.hpp"
#include "kfl/report.hpp"

namespace kfl {

extern const char* const kVersion;

// Typed view of the merged configuration for one run. Schedule-like keys
// (eps ladder, level count, dt, horizon) stay in `cfg` under per-experiment
// sections; the fields here are the ones every experiment shares.
struct RunConfig {
    std::string experiment;
    BackendKind backend = BackendKind::FlatTorus;
    int resolution = 64;
    double p = 2.0;
    double q = 1.0;
    double p_prime = 1.0;
    std::uint64_t seed = 1;
    int stride = 1;  // snapshot persistence stride
    std::string out_dir;
    Config cfg;  // merged key=value view: defaults, then file, then flags

    // UsageError naming the violated invariant: experiment set, finite
    // q with 1 <= q <= p, p' >= 1, resolution within the supported range
    // (torus even 8..1024, sphere 16..1024), stride >= 1.
    void validate() const;
};

struct ExperimentDef {
    std::string name;
    std::string summary;    // one line for `list`
    std::string mechanism;  // plain-language description for `describe`
    KeyValues defaults;     // every config key the experiment reads
    VerdictSet (*run)(const RunConfig& rc);        // writes artifacts to rc.out_dir
    VerdictSet (*verify)(const std::string& dir);  // recomputes a directory's verdicts
};

const std::vector<ExperimentDef>& experiment_registry();

// nullptr when the name is unknown.
const ExperimentDef* find_experiment(const std::string& name);

// Merges per-experiment defaults, the config source, and flag overrides (in
// that order, later wins) into a validated RunConfig. out_flag, when
// nonempty, beats the run.out key; the fallback is runs/<name>.
RunConfig make_run_config(const ExperimentDef& def, const Config& source,
                          const KeyValues& flag_overrides, const std::string& out_flag);

// Config from a path: either a key=value file or a params.json written by a
// previous run, whose embedded config text and recorded overrides are
// replayed. Run directories are therefore self-reproducing.
Config load_run_input(const std::string& path);

}  // namespace kfl
