#include "kfl/cli.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kfl/errors.hpp"
#include "kfl/registry.hpp"
#include "kfl/report.hpp"
#include "kfl/util.hpp"

namespace kfl {

namespace {

namespace fs = std::filesystem;

std::string valid_names() {
    std::string s;
    for (const auto& def : experiment_registry()) {
        if (!s.empty()) s += ", ";
        s += def.name;
    }
    return s;
}

const ExperimentDef& need_experiment(const std::string& name) {
    const ExperimentDef* def = find_experiment(name);
    if (!def)
        throw UsageError("unknown experiment '" + name + "' (valid: " + valid_names() + ")");
    return *def;
}

void print_verdicts(std::ostream& out, const VerdictSet& vs) {
    for (const Verdict& v : vs.items)
        out << (v.pass ? "PASS " : "FAIL ") << v.name << "  value=" << format_double(v.value)
            << " threshold=" << format_double(v.threshold) << "  (" << v.note << ")\n";
}

// Prints failing claim names to err; exit status per the verdicts.
int settle(std::ostream& out, std::ostream& err, const VerdictSet& vs) {
    print_verdicts(out, vs);
    if (vs.all_pass()) return 0;
    std::string failed;
    for (const Verdict& v : vs.items)
        if (!v.pass) failed += (failed.empty() ? "" : ", ") + v.name;
    err << "failed invariants: " << failed << "\n";
    return 1;
}

// The output directory must exist and accept writes before any computation.
void prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::string probe = (fs::path(dir) / ".write_probe").string();
    bool ok = !ec;
    if (ok) {
        try {
            write_text_file(probe, "probe\n");
            fs::remove(probe);
        } catch (const IoError&) {
            ok = false;
        }
    }
    if (!ok)
        throw UsageError("invariant violated: output directory not writable: " + dir);
}

void describe_one(std::ostream& out, const ExperimentDef& def) {
    out << def.name << "\n  " << def.summary << "\n\n  " << def.mechanism << "\n\n  defaults:\n";
    for (const auto& [k, v] : def.defaults) out << "    " << k << " = " << v << "\n";
}

int do_list(std::ostream& out) {
    for (const auto& def : experiment_registry()) {
        out << def.name;
        for (std::size_t i = def.name.size(); i < 22; ++i) out << ' ';
        out << def.summary << "\n";
    }
    return 0;
}

int do_describe(std::ostream& out, const std::string& name) {
    if (name == "all") {
        bool first = true;
        for (const auto& def : experiment_registry()) {
            if (!first) out << "\n";
            first = false;
            describe_one(out, def);
        }
        return 0;
    }
    describe_one(out, need_experiment(name));
    return 0;
}

int do_run(std::ostream& out, std::ostream& err, const std::string& positional,
           const std::string& config_path, const std::string& out_flag,
           const std::vector<std::string>& sets, const std::string& seed,
           const std::string& resolution) {
    Config source;
    if (!config_path.empty()) {
        if (!fs::exists(config_path))
            throw UsageError("config file not found: " + config_path);
        source = load_run_input(config_path);
    }

    std::string name = !positional.empty() ? positional : source.get_or("run.experiment", "");
    if (name.empty())
        throw UsageError("no experiment named; pass one or set run.experiment (valid: " +
                         valid_names() + ")");
    const ExperimentDef& def = need_experiment(name);

    KeyValues flags;
    for (const std::string& kv : sets) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--set needs KEY=VALUE, got '" + kv + "'");
        flags.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) flags.emplace_back("run.seed", seed);
    if (!resolution.empty()) flags.emplace_back("run.resolution", resolution);
    // A positional name is recorded as an override so the params.json echo
    // replays to the same experiment with the same bytes.
    if (!positional.empty()) flags.emplace_back("run.experiment", positional);

    RunConfig rc = make_run_config(def, source, flags, out_flag);
    prepare_out_dir(rc.out_dir);

    VerdictSet vs = def.run(rc);
    int status = settle(out, err, vs);
    out << "artifacts: " << rc.out_dir << "\n";
    return status;
}

int do_verify(std::ostream& out, std::ostream& err, const std::string& dir) {
    if (!fs::is_directory(dir) || !fs::exists(fs::path(dir) / "params.json"))
        throw UsageError("not a run directory (missing params.json): " + dir);
    SequenceExperiment ex = read_experiment_dir(dir, false);
    const ExperimentDef* def = find_experiment(ex.name);
    if (!def)
        throw InconsistencyError("params.json names unknown experiment '" + ex.name + "'");
    return settle(out, err, def->verify(dir));
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finsler-geometry experiment runner for potential families and flows"};
    app.name("kfl");
    app.footer("Environment:\n  KFL_THREADS   worker threads for parallel loops (default 1)\n"
               "Exit codes: 0 all claims pass, 1 claim or computation failure, 2 usage.");
    bool version = false;
    app.add_flag("--version", version, "print the tool version");

    std::string run_name, config_path, out_flag, seed, resolution, describe_name, verify_dir;
    std::vector<std::string> sets;

    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment and write its artifacts");
    run_cmd->add_option("experiment", run_name,
                        "experiment name (else the config's run.experiment)");
    run_cmd->add_option("--config", config_path,
                        "key=value config file, or a previous run's params.json to replay");
    run_cmd->add_option("--out", out_flag, "output directory (default runs/<experiment>)");
    run_cmd->add_option("--seed", seed, "override run.seed");
    run_cmd->add_option("--resolution", resolution, "override run.resolution");
    run_cmd->add_option("--set", sets, "override any config key, KEY=VALUE (repeatable)");

    app.add_subcommand("list", "list the registered experiments");
    CLI::App* describe_cmd =
        app.add_subcommand("describe", "explain an experiment's mechanism, defaults, and checks");
    describe_cmd->add_option("name", describe_name, "experiment name, or 'all'")->required();
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "recompute an existing run directory's verdicts");
    verify_cmd->add_option("dir", verify_dir, "run directory with params.json")->required();

    try {
        app.parse(argc, argv);
        if (version) {
            out << kVersion << "\n";
            return 0;
        }
        if (run_cmd->parsed())
            return do_run(out, err, run_name, config_path, out_flag, sets, seed, resolution);
        if (app.get_subcommand("list")->parsed()) return do_list(out);
        if (describe_cmd->parsed()) return do_describe(out, describe_name);
        if (verify_cmd->parsed()) return do_verify(out, err, verify_dir);
        err << app.help();
        return 2;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace kfl
