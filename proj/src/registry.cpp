#include "kfl/registry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

#include <json.hpp>

#include "kfl/errors.hpp"
#include "kfl/experiments.hpp"
#include "kfl/finsler.hpp"
#include "kfl/flows.hpp"
#include "kfl/measure.hpp"
#include "kfl/util.hpp"

namespace kfl {

const char* const kVersion = "kfl 1.0.0";

namespace {

using json = nlohmann::ordered_json;

GeometryPtr make_geometry(BackendKind kind, int resolution) {
    return kind == BackendKind::FlatTorus ? Geometry::make_torus(resolution)
                                          : Geometry::make_p1(resolution);
}

std::string fmt(double x) { return format_double(x); }

double parse_double_strict(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != s.size())
        throw InconsistencyError(what + ": not a number: '" + s + "'");
    return v;
}

// ---- potential generators ------------------------------------------------

// Low-mode random potential scaled so sup |laplace u| = amplitude.
Potential seeded_potential(const GeometryPtr& g, std::uint64_t seed, double amplitude) {
    Rng rng(seed);
    ArrayXd u = ArrayXd::Zero(g->sites());
    if (g->kind() == BackendKind::FlatTorus) {
        for (int k = 1; k <= 3; ++k)
            for (int l = 0; l <= 3; ++l) {
                double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
                u += a * (2.0 * M_PI * k * g->x()).cos() * (2.0 * M_PI * l * g->y()).cos() +
                     b * (2.0 * M_PI * k * g->x()).sin() * (2.0 * M_PI * l * g->y()).sin();
            }
    } else {
        ArrayXd c = g->theta().cos();
        for (unsigned l = 1; l <= 4; ++l) {
            double a = rng.uniform(-1.0, 1.0);
            for (Eigen::Index i = 0; i < c.size(); ++i) u[i] += a * std::legendre(l, c[i]);
        }
    }
    double top = g->laplace(u).abs().maxCoeff();
    if (top > 0.0) u *= amplitude / top;
    return Potential::make(g, std::move(u));
}

// Zonal Legendre mode, same normalization.
Potential zonal(const GeometryPtr& g, int ell, double amplitude) {
    ArrayXd c = g->theta().cos();
    ArrayXd u(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
        u[i] = std::legendre(static_cast<unsigned>(ell), c[i]);
    double top = g->laplace(u).abs().maxCoeff();
    u *= amplitude / top;
    return Potential::make(g, std::move(u));
}

// Potential whose density is the pure oscillation 1 + amp cos(2 pi k x).
Potential mode_density_potential(const GeometryPtr& g, int k, double amp) {
    ArrayXd rho = 1.0 + amp * (2.0 * M_PI * k * g->x()).cos();
    return calabi_yau_inverse(Density::make(g, std::move(rho)));
}

// Transversal crossing pair: the difference a cos(2 pi x) - (a/2) sin(2 pi y)
// has full gradient bounded below on its zero set.
std::pair<Potential, Potential> crossing_pair(const GeometryPtr& g, double a) {
    Potential v0 = Potential::make(g, ArrayXd(a * (2.0 * M_PI * g->x()).cos()));
    Potential v1 = Potential::make(g, ArrayXd(0.5 * a * (2.0 * M_PI * g->y()).sin()));
    return {std::move(v0), std::move(v1)};
}

// ---- shared plumbing -------------------------------------------------------

// Config echo recorded in every params.json: tool version, the verbatim
// input file, the flag overrides, and the merged effective key=value view.
KeyValues config_echo(const RunConfig& rc) {
    std::string effective, overrides;
    for (const auto& [k, v] : rc.cfg.entries) effective += k + " = " + v + "\n";
    for (const auto& [k, v] : rc.cfg.overrides) overrides += k + " = " + v + "\n";
    return {{"version", kVersion},
            {"config_text", rc.cfg.raw_text},
            {"overrides", overrides},
            {"effective", effective}};
}

std::string param_of(const SequenceExperiment& ex, const std::string& key) {
    for (const auto& [k, v] : ex.params)
        if (k == key) return v;
    throw InconsistencyError("experiment directory lacks parameter '" + key + "'");
}

double param_double(const SequenceExperiment& ex, const std::string& key) {
    return parse_double_strict(param_of(ex, key), "parameter " + key);
}

// Appends the generic re-verification claims: the stats table re-serializes
// to identical bytes and the recomputed core verdicts equal the stored
// verdict.json. `extras` are verification-only claims, kept out of the
// byte comparison because the stored file predates them.
VerdictSet finish_verify(const std::string& dir, VerdictSet recomputed,
                         std::vector<Verdict> extras = {}) {
    std::string csv = read_text_file(dir + "/stats.csv");
    bool canonical = stats_table_from_csv(csv).to_csv() == csv;
    bool match = recomputed.to_json() == read_text_file(dir + "/verdict.json");
    VerdictSet out = std::move(recomputed);
    for (Verdict& v : extras) out.add(std::move(v));
    out.add({"stats-csv-canonical", canonical, canonical ? 1.0 : 0.0, 1.0,
             "stats.csv re-serializes to identical bytes"});
    out.add({"stored-verdicts-match", match, match ? 1.0 : 0.0, 1.0,
             "recomputed verdicts equal the stored verdict.json"});
    return out;
}

double auto_double(const Config& cfg, const std::string& key, double auto_value) {
    std::string s = cfg.get_or(key, "auto");
    if (s == "auto") return auto_value;
    return cfg.get_double(key, auto_value);
}

void require_backend(const RunConfig& rc, BackendKind kind, const char* why) {
    if (rc.backend != kind)
        throw UsageError("invariant violated: " + rc.experiment + " needs run.backend = " +
                         backend_name(kind) + " (" + why + ")");
}

// ---- max-smoothing ---------------------------------------------------------

VerdictSet run_max_smoothing(const RunConfig& rc) {
    require_backend(rc, BackendKind::FlatTorus, "the crossing pair is a torus construction");
    auto g = make_geometry(rc.backend, rc.resolution);
    double amplitude = rc.cfg.get_double("smoothing.amplitude", 0.02);
    double eps_first = rc.cfg.get_double("smoothing.eps_first", 0.015);
    double eps_ratio = rc.cfg.get_double("smoothing.eps_ratio", 0.5);
    long long count = rc.cfg.get_int("smoothing.eps_count", 7);
    if (!(eps_ratio > 0.0 && eps_ratio < 1.0))
        throw UsageError("invariant violated: smoothing.eps_ratio must lie in (0, 1)");
    if (count < 2) throw UsageError("invariant violated: smoothing.eps_count must be >= 2");

    auto [v0, v1] = crossing_pair(g, amplitude);
    std::vector<double> schedule;
    double e = eps_first;
    for (long long j = 0; j < count; ++j, e *= eps_ratio) schedule.push_back(e);

    SequenceExperiment ex = max_smoothing_family(v0, v1, schedule, rc.p_prime);
    write_experiment_dir(rc.out_dir, ex, rc.stride, config_echo(rc));
    return ex.verdicts;
}

VerdictSet verify_max_smoothing(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    bool identical = param_of(ex, "identical_inputs") == "true";
    return finish_verify(dir, max_smoothing_verdicts(ex.stats, identical));
}

// ---- spike-density ---------------------------------------------------------

VerdictSet run_spike_density(const RunConfig& rc) {
    require_backend(rc, BackendKind::FlatTorus, "band layout uses the periodic column grid");
    auto g = make_geometry(rc.backend, rc.resolution);
    SpikeParams sp;
    sp.eta = rc.cfg.get_double("spike.eta", sp.eta);
    sp.floor_cap = rc.cfg.get_double("spike.floor_cap", sp.floor_cap);
    sp.shallow_level = rc.cfg.get_double("spike.shallow_level", sp.shallow_level);
    sp.band_fraction = rc.cfg.get_double("spike.band_fraction", sp.band_fraction);
    sp.mass_exponent = rc.cfg.get_double("spike.mass_exponent", sp.mass_exponent);
    int levels = static_cast<int>(rc.cfg.get_int("spike.levels", 16));

    SequenceExperiment ex = spike_density_family(g, rc.p_prime, levels, sp);
    write_experiment_dir(rc.out_dir, ex, rc.stride, config_echo(rc));
    return ex.verdicts;
}

VerdictSet verify_spike_density(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    return finish_verify(dir, spike_density_verdicts(ex.stats));
}

// ---- q-domination ----------------------------------------------------------

VerdictSet run_q_domination(const RunConfig& rc) {
    require_backend(rc, BackendKind::FlatTorus, "uses the spike construction");
    auto g = make_geometry(rc.backend, rc.resolution);
    int fam_count = static_cast<int>(rc.cfg.get_int("domination.families", 3));
    int steps = static_cast<int>(rc.cfg.get_int("domination.steps", 7));
    double amplitude = rc.cfg.get_double("domination.amplitude", 0.3);
    double shrink = rc.cfg.get_double("domination.shrink", 4.0);
    int spike_levels = static_cast<int>(rc.cfg.get_int("domination.spike_levels", 12));
    double cal_thr = rc.cfg.get_double("domination.calabi_threshold", 1e-6);
    double mab_thr = rc.cfg.get_double("domination.mabuchi_threshold", 1e-4);
    double sup_thr = rc.cfg.get_double("domination.sup_threshold", 1e-2);
    if (fam_count < 1 || steps < 2)
        throw UsageError("invariant violated: domination needs families >= 1 and steps >= 2");
    if (!(shrink > 1.0))
        throw UsageError("invariant violated: domination.shrink must exceed 1");

    std::vector<std::vector<Potential>> families;
    for (int f = 0; f < fam_count; ++f) {
        Potential base = seeded_potential(g, rc.seed + static_cast<std::uint64_t>(f), amplitude);
        std::vector<Potential> fam;
        double scale = 1.0;
        for (int j = 0; j < steps; ++j, scale /= shrink)
            fam.push_back(Potential::make(g, ArrayXd(base.values * scale)));
        families.push_back(std::move(fam));
    }
    Potential still = seeded_potential(g, rc.seed + 1000, amplitude);
    families.push_back({still, still, still});
    SpikeParams sp;
    sp.mass_exponent = 4.0;  // summable witness; the sweep needs q > 1 pairs
    families.push_back(spike_density_family(g, rc.p_prime, spike_levels, sp).sequence);

    DominationReport rep =
        q_gt_1_domination_sweep(families, rc.p, rc.q, rc.p_prime, cal_thr, mab_thr, sup_thr);

    SequenceExperiment ex;
    ex.name = rc.experiment;
    ex.geom = g;
    ex.stats = rep.rows;
    ex.verdicts = rep.verdicts;
    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"p", fmt(rc.p)},
                 {"q", fmt(rc.q)},
                 {"p_prime", fmt(rc.p_prime)},
                 {"calabi_threshold", fmt(cal_thr)},
                 {"mabuchi_threshold", fmt(mab_thr)},
                 {"sup_threshold", fmt(sup_thr)},
                 {"families", std::to_string(families.size())},
                 {"violations", std::to_string(rep.violations)}};
    write_experiment_dir(rc.out_dir, ex, rc.stride, config_echo(rc));
    write_text_file(rc.out_dir + "/modulus.csv", rep.modulus.to_csv());
    return ex.verdicts;
}

VerdictSet verify_q_domination(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    VerdictSet recomputed =
        domination_verdicts(ex.stats, param_double(ex, "calabi_threshold"),
                            param_double(ex, "mabuchi_threshold"), param_double(ex, "sup_threshold"));
    bool modulus_ok = domination_modulus(ex.stats).to_csv() == read_text_file(dir + "/modulus.csv");
    return finish_verify(dir, std::move(recomputed),
                         {{"modulus-consistent", modulus_ok, modulus_ok ? 1.0 : 0.0, 1.0,
                           "modulus.csv equals the envelope recomputed from the rows"}});
}

// ---- entropy-equivalence ---------------------------------------------------

std::vector<int> parse_mode_list(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t c = text.find(',', pos);
        std::string tok = text.substr(pos, (c == std::string::npos ? text.size() : c) - pos);
        if (!tok.empty()) out.push_back(static_cast<int>(parse_double_strict(tok, "mode list")));
        if (c == std::string::npos) break;
        pos = c + 1;
    }
    if (out.empty()) throw UsageError("invariant violated: equivalence.modes must be nonempty");
    return out;
}

VerdictSet run_entropy_equivalence(const RunConfig& rc) {
    require_backend(rc, BackendKind::FlatTorus, "oscillation densities use torus modes");
    auto g = make_geometry(rc.backend, rc.resolution);
    int fam_count = static_cast<int>(rc.cfg.get_int("equivalence.families", 3));
    int steps = static_cast<int>(rc.cfg.get_int("equivalence.steps", 11));
    double amplitude = rc.cfg.get_double("equivalence.amplitude", 0.3);
    double shrink = rc.cfg.get_double("equivalence.shrink", 4.0);
    std::vector<int> modes = parse_mode_list(rc.cfg.get_or("equivalence.modes", "4,8,16,32"));
    double osc_amp = rc.cfg.get_double("equivalence.osc_amplitude", 0.4);
    double trigger = rc.cfg.get_double("equivalence.trigger", 1e-6);
    double vanish = rc.cfg.get_double("equivalence.vanish", 1e-4);
    if (fam_count < 1 || steps < 2)
        throw UsageError("invariant violated: equivalence needs families >= 1 and steps >= 2");

    Potential flat = Potential::make(g, ArrayXd::Zero(g->sites()));
    std::vector<TaggedFamily> tagged;
    for (int f = 0; f < fam_count; ++f) {
        TaggedFamily fam;
        fam.name = "shrinking-" + std::to_string(f);
        fam.entropy_convergent = true;
        fam.reference = flat;
        Potential base = seeded_potential(g, rc.seed + static_cast<std::uint64_t>(f), amplitude);
        double scale = 1.0;
        for (int j = 0; j < steps; ++j, scale /= shrink)
            fam.seq.push_back(Potential::make(g, ArrayXd(base.values * scale)));
        tagged.push_back(std::move(fam));
    }
    TaggedFamily osc;
    osc.name = "oscillating";
    osc.entropy_convergent = false;
    osc.reference = flat;
    for (int k : modes) osc.seq.push_back(mode_density_potential(g, k, osc_amp));
    tagged.push_back(std::move(osc));

    EquivalenceSweepReport rep =
        entropy_equivalence_sweep(tagged, rc.p, rc.p_prime, trigger, vanish);

    SequenceExperiment ex;
    ex.name = rc.experiment;
    ex.geom = g;
    ex.stats = rep.summary;
    ex.verdicts = rep.verdicts;
    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"p", fmt(rc.p)},
                 {"p_prime", fmt(rc.p_prime)},
                 {"trigger", fmt(trigger)},
                 {"vanish", fmt(vanish)},
                 {"convergent_failures", std::to_string(rep.convergent_failures)},
                 {"divergent_exhibited", rep.divergent_exhibited ? "true" : "false"}};
    for (std::size_t i = 0; i < tagged.size(); ++i)
        ex.params.emplace_back("family_" + std::to_string(i), tagged[i].name);
    write_experiment_dir(rc.out_dir, ex, rc.stride, config_echo(rc));
    return ex.verdicts;
}

VerdictSet verify_entropy_equivalence(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ex.stats.rows.size(); ++i)
        names.push_back(param_of(ex, "family_" + std::to_string(i)));
    return finish_verify(dir,
                         equivalence_verdicts(ex.stats, names, param_double(ex, "vanish")));
}

// ---- kr-criterion ----------------------------------------------------------

// Verdicts derived purely from the persisted (t, g, running_integral) table.
VerdictSet kr_criterion_verdicts(const StatsTable& stats, double rate_floor, double late_g_max) {
    std::vector<double> t = stats.column("t");
    std::vector<double> g = stats.column("g");
    std::vector<double> run = stats.column("running_integral");
    VerdictSet out;

    double acc = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) acc += 0.5 * (g[i] + g[i - 1]) * (t[i] - t[i - 1]);
        worst = std::max(worst, std::abs(acc - run[i]));
    }
    double thr = 1e-12 * (1.0 + std::abs(run.back()));
    out.add({"running-integral-consistent", worst <= thr, worst, thr,
             "trapezoid recomputed from (t, g) matches the stored column"});

    double T = t.back();
    double gmax = 0.0, gmin = kInfinity;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= 0.5 * T) {
            gmax = std::max(gmax, g[i]);
            gmin = std::min(gmin, g[i]);
        }
    bool exhausted = gmax <= 1e-13;
    double rate = 0.0, total = run.back();
    if (!exhausted && gmin > 0.0) {
        std::vector<std::pair<double, double>> series;
        for (std::size_t i = 0; i < t.size(); ++i) series.emplace_back(t[i], g[i]);
        RateFit fit = exp_rate_fit(series, 0.5 * T, T);
        rate = fit.rate;
        if (rate > 0.0) total += g.back() / rate;
    }
    out.add({"tail-rate-positive", exhausted || rate >= rate_floor, rate, rate_floor,
             "fitted decay rate of the speed over the last half horizon"});
    out.add({"criterion-integral-finite",
             std::isfinite(total) && (exhausted || rate >= rate_floor), total, 0.0,
             "trapezoid length plus the extrapolated exponential tail"});
    out.add({"late-speed-small", g.back() <= late_g_max, g.back(), late_g_max,
             "speed at the end of the horizon"});
    return out;
}

VerdictSet run_kr_criterion(const RunConfig& rc) {
    require_backend(rc, BackendKind::RoundP1, "the Ricci-type flow normalizes against the sphere");
    auto g = make_geometry(rc.backend, rc.resolution);
    int ell = static_cast<int>(rc.cfg.get_int("criterion.ell", 2));
    double amplitude = rc.cfg.get_double("criterion.amplitude", 0.1);
    double dt = rc.cfg.get_double("criterion.dt", 2e-3);
    double horizon = rc.cfg.get_double("criterion.horizon", 6.0);
    double rate_floor = rc.cfg.get_double("criterion.rate_floor", 0.05);
    double late_g = rc.cfg.get_double("criterion.late_g", 1e-4);
    if (ell < 1) throw UsageError("invariant violated: criterion.ell must be >= 1");

    Potential u0 = zonal(g, ell, amplitude);
    FlowTrajectory traj = kr_flow_run(u0, dt, horizon);
    LengthCriterionReport rep = flow_length_criterion(traj, rc.p, rc.q);

    SequenceExperiment ex;
    ex.name = rc.experiment;
    ex.geom = g;
    ex.stats = criterion_stats(rep);
    ex.verdicts = kr_criterion_verdicts(ex.stats, rate_floor, late_g);
    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"p", fmt(rc.p)},
                 {"q", fmt(rc.q)},
                 {"ell", std::to_string(ell)},
                 {"amplitude", fmt(amplitude)},
                 {"dt", fmt(dt)},
                 {"horizon", fmt(horizon)},
                 {"rate_floor", fmt(rate_floor)},
                 {"late_g", fmt(late_g)},
                 {"tail_rate", fmt(rep.tail_rate)},
                 {"integral", fmt(rep.integral)},
                 {"speed_identity_gap", fmt(rep.speed_identity_gap)},
                 {"late_cauchy_calabi", fmt(rep.late_cauchy_calabi)},
                 {"late_cauchy_mabuchi", fmt(rep.late_cauchy_mabuchi)}};
    write_experiment_dir(rc.out_dir, ex, 1, config_echo(rc));
    write_trajectory_dir(rc.out_dir + "/trajectory", traj, rc.stride,
                         {{"dt", fmt(dt)},
                          {"horizon", fmt(horizon)},
                          {"seed", std::to_string(rc.seed)}});
    return ex.verdicts;
}

VerdictSet verify_kr_criterion(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    VerdictSet recomputed = kr_criterion_verdicts(ex.stats, param_double(ex, "rate_floor"),
                                                  param_double(ex, "late_g"));

    // Per-state speeds recomputed from the stored snapshots must reproduce
    // the g column at the stored times (g is a per-state quantity).
    FlowTrajectory traj = read_trajectory_dir(dir + "/trajectory");
    LengthCriterionReport sub =
        flow_length_criterion(traj, param_double(ex, "p"), param_double(ex, "q"));
    std::vector<double> t = ex.stats.column("t");
    std::vector<double> g = ex.stats.column("g");
    double worst = 0.0;
    bool found_all = true;
    for (const LengthCriterionRow& row : sub.rows) {
        auto it = std::find(t.begin(), t.end(), row.time);
        if (it == t.end()) {
            found_all = false;
            continue;
        }
        worst = std::max(worst, std::abs(g[static_cast<std::size_t>(it - t.begin())] - row.g));
    }
    return finish_verify(
        dir, std::move(recomputed),
        {{"snapshot-speeds-match", found_all && worst <= 1e-12, worst, 1e-12,
          "speeds recomputed from stored states equal the CSV at stored times"}});
}

// ---- calabi-decay ----------------------------------------------------------

VerdictSet calabi_decay_verdicts(const StatsTable& stats, double gap_threshold,
                                 double decay_factor) {
    std::vector<double> gap = stats.column("density_gap");
    double first = gap.front(), last = gap.back();
    VerdictSet out;
    out.add({"terminal-density-flat", last <= gap_threshold, last, gap_threshold,
             "L1 distance of the final density from the constant one"});
    bool decayed = first <= gap_threshold || last <= decay_factor * first;
    out.add({"density-gap-decayed", decayed, first > 0.0 ? last / first : 0.0, decay_factor,
             "final density gap relative to the initial one"});
    return out;
}

VerdictSet run_calabi_decay(const RunConfig& rc) {
    auto g = make_geometry(rc.backend, rc.resolution);
    bool torus = rc.backend == BackendKind::FlatTorus;
    double dt = auto_double(rc.cfg, "calabi.dt", torus ? 1e-4 : 1e-3);
    double horizon = auto_double(rc.cfg, "calabi.horizon", torus ? 0.03 : 3.0);
    double amplitude = auto_double(rc.cfg, "calabi.amplitude", torus ? 0.005 : 0.3);
    double gap_threshold = auto_double(rc.cfg, "calabi.gap_threshold", 1e-5);
    double decay_factor = rc.cfg.get_double("calabi.decay_factor", 0.01);

    Potential u0 = torus
                       ? Potential::make(g, ArrayXd(amplitude * (2.0 * M_PI * g->x()).cos()))
                       : zonal(g, 2, amplitude);
    FlowTrajectory traj = calabi_flow_run(u0, dt, horizon);

    StatsTable stats{{"t", "density_gap", "entropy"}, {}};
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const Potential& u = traj.states[i];
        double dg = g->measure().integral((density(u).values - 1.0).abs());
        stats.add_row({traj.times[i], dg, entropy(u)});
    }

    SequenceExperiment ex;
    ex.name = rc.experiment;
    ex.geom = g;
    ex.stats = std::move(stats);
    ex.verdicts = calabi_decay_verdicts(ex.stats, gap_threshold, decay_factor);
    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"dt", fmt(dt)},
                 {"horizon", fmt(horizon)},
                 {"amplitude", fmt(amplitude)},
                 {"gap_threshold", fmt(gap_threshold)},
                 {"decay_factor", fmt(decay_factor)}};
    write_experiment_dir(rc.out_dir, ex, 1, config_echo(rc));
    write_trajectory_dir(rc.out_dir + "/trajectory", traj, rc.stride,
                         {{"dt", fmt(dt)},
                          {"horizon", fmt(horizon)},
                          {"seed", std::to_string(rc.seed)}});
    return ex.verdicts;
}

VerdictSet verify_calabi_decay(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    VerdictSet recomputed = calabi_decay_verdicts(ex.stats, param_double(ex, "gap_threshold"),
                                                  param_double(ex, "decay_factor"));

    FlowTrajectory traj = read_trajectory_dir(dir + "/trajectory");
    std::vector<double> t = ex.stats.column("t");
    std::vector<double> gap = ex.stats.column("density_gap");
    const GeometryPtr& g = traj.states.front().geom;
    double worst = 0.0;
    bool found_all = true;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        auto it = std::find(t.begin(), t.end(), traj.times[i]);
        if (it == t.end()) {
            found_all = false;
            continue;
        }
        double dg = g->measure().integral((density(traj.states[i]).values - 1.0).abs());
        worst = std::max(worst,
                         std::abs(gap[static_cast<std::size_t>(it - t.begin())] - dg));
    }
    return finish_verify(dir, std::move(recomputed),
                         {{"snapshot-stats-match", found_all && worst <= 1e-12, worst, 1e-12,
                           "density gaps recomputed from stored states equal the CSV"}});
}

// ---- metric-report ---------------------------------------------------------

VerdictSet metric_report_verdicts(const StatsTable& stats) {
    double lower = stats.at(0, "bracket_lower");
    double upper = stats.at(0, "bracket_upper");
    double cf = stats.at(0, "closed_form");
    double e0 = stats.at(0, "entropy_0"), e1 = stats.at(0, "entropy_1");
    double segments = stats.at(0, "samples") - 1.0;
    VerdictSet out;
    out.add({"bracket-ordered", upper - lower >= -1e-12, upper - lower, 0.0,
             "upper bracket end minus lower"});
    // The polyline upper end underestimates the sampled path length by about
    // L^3 / (24 segments^2); the allowance triples that.
    double scale = std::max({1.0, std::abs(cf), upper});
    double tol = 1e-12 * scale + std::pow(std::max(std::abs(cf), upper), 3) / (8.0 * segments * segments);
    double excess = std::max(lower - cf, cf - upper);
    bool inside = std::isnan(cf) || excess <= tol;
    out.add({"closed-form-inside-bracket", inside, excess, tol,
             "signed distance of the closed form outside the bracket (p=2, q=1 only)"});
    out.add({"entropy-nonnegative", std::min(e0, e1) >= -1e-12, std::min(e0, e1), 0.0,
             "relative entropy of both endpoint densities"});
    return out;
}

VerdictSet run_metric_report(const RunConfig& rc) {
    auto g = make_geometry(rc.backend, rc.resolution);
    double amplitude = rc.cfg.get_double("metric.amplitude", 0.3);
    int samples = static_cast<int>(rc.cfg.get_int("metric.samples", 257));

    Potential u0 = seeded_potential(g, rc.seed, amplitude);
    Potential u1 = seeded_potential(g, rc.seed + 1, amplitude);
    DistanceBracket br = calabi_distance_bracket(u0, u1, rc.p, rc.q, samples);
    bool round21 = rc.p == 2.0 && rc.q == 1.0;
    double closed = round21 ? calabi_distance_round_21(u0, u1) : std::nan("");
    double mlen = mabuchi_length(make_potential_curve({u0, u1}, {0.0, 1.0}), rc.p);
    double cal = calabi_cauchy_stat(u0, u1, rc.q);
    double mab = mabuchi_cauchy_stat(u0, u1, rc.p_prime);
    double e0 = entropy(u0), e1 = entropy(u1);

    MetricReport rep;
    rep.p = rc.p;
    rep.q = rc.q;
    rep.p_prime = rc.p_prime;
    rep.bracket_lower = br.lower;
    rep.bracket_upper = br.upper;
    rep.mabuchi_length = mlen;
    rep.cauchy_stats = {{0, 1, "calabi", cal}, {0, 1, "mabuchi", mab}};
    rep.entropies = {e0, e1};

    SequenceExperiment ex;
    ex.name = rc.experiment;
    ex.geom = g;
    ex.sequence = {u0, u1};
    ex.stats.columns = {"bracket_lower", "bracket_upper", "closed_form", "mabuchi_length",
                        "calabi_stat",   "mabuchi_stat",  "entropy_0",   "entropy_1",
                        "samples"};
    ex.stats.add_row({br.lower, br.upper, closed, mlen, cal, mab, e0, e1, double(samples)});
    ex.verdicts = metric_report_verdicts(ex.stats);
    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"p", fmt(rc.p)},
                 {"q", fmt(rc.q)},
                 {"p_prime", fmt(rc.p_prime)},
                 {"amplitude", fmt(amplitude)},
                 {"samples", std::to_string(samples)},
                 {"seed", std::to_string(rc.seed)}};
    write_experiment_dir(rc.out_dir, ex, rc.stride, config_echo(rc));
    write_text_file(rc.out_dir + "/report.json", rep.to_json());
    write_text_file(rc.out_dir + "/cauchy.csv", rep.cauchy_csv());
    return ex.verdicts;
}

VerdictSet verify_metric_report(const std::string& dir) {
    SequenceExperiment ex = read_experiment_dir(dir, false);
    VerdictSet recomputed = metric_report_verdicts(ex.stats);
    std::string rep_text = read_text_file(dir + "/report.json");
    bool canonical = metric_report_from_json(rep_text).to_json() == rep_text;
    return finish_verify(dir, std::move(recomputed),
                         {{"report-json-canonical", canonical, canonical ? 1.0 : 0.0, 1.0,
                           "report.json re-serializes to identical bytes"}});
}

// ---- registry --------------------------------------------------------------

std::vector<ExperimentDef> build_registry() {
    std::vector<ExperimentDef> reg;

    reg.push_back(
        {"max-smoothing",
         "Smooth-max interpolation between crossing potentials: Mabuchi statistics collapse, "
         "the Calabi one does not",
         "Interpolates two potentials whose difference changes sign transversally through the "
         "smooth maximum u_eps = (v0 + v1 + sqrt((v0 - v1)^2 + eps^2))/2 along a decreasing eps "
         "ladder. The family converges uniformly, so consecutive Mabuchi statistics decrease "
         "toward zero, while the limit density keeps a fixed singular mass on the crossing "
         "collar, so the q = 1 Calabi statistic against the first element stays bounded away "
         "from zero. Checks: consecutive Mabuchi statistics never increase, the first-to-last "
         "Calabi separation is positive, and the density mass inside the collar never falls "
         "below half its terminal value.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "128"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "1"},
          {"run.stride", "1"},
          {"smoothing.amplitude", "0.02"},
          {"smoothing.eps_first", "0.015"},
          {"smoothing.eps_ratio", "0.5"},
          {"smoothing.eps_count", "7"}},
         run_max_smoothing, verify_max_smoothing});

    reg.push_back(
        {"spike-density",
         "Truncated spike densities: the divergence witness grows like the harmonic sum while "
         "consecutive L1 gaps shrink",
         "Builds mirrored column bands of geometrically shrinking width; band k carries density "
         "mass proportional to k^-mass_exponent and model height k + eta. The witness integral "
         "int |u|^{p'} rho_t then tracks sum_{j<=t} j m_j (harmonic growth at the default "
         "exponent 2, so it diverges with the level count) while consecutive densities differ "
         "by about 2 m_t in L1, so the family is Calabi-Cauchy at q = 1 without the witness "
         "staying bounded. Checks: the witness increases and tracks the coefficient sum within "
         "5 percent, and consecutive L1 gaps follow 2 m_t within 10 percent.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "256"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "1"},
          {"run.stride", "1"},
          {"spike.levels", "16"},
          {"spike.eta", "0.01"},
          {"spike.floor_cap", "1e-4"},
          {"spike.shallow_level", "0.01"},
          {"spike.band_fraction", "0.75"},
          {"spike.mass_exponent", "2"}},
         run_spike_density, verify_spike_density});

    reg.push_back(
        {"q-domination",
         "Sweep of consecutive pairs at q > 1: a small Calabi statistic forces small sup gap "
         "and Mabuchi statistic",
         "Generates shrinking random families, an identical triple, and a spike staircase with "
         "a summable mass schedule, then scans every consecutive pair: whenever the Calabi "
         "statistic at q > 1 falls below its threshold, the sup gap and the Mabuchi statistic "
         "must fall below theirs. The empirical modulus (Calabi statistic versus the running "
         "maximum of the Mabuchi one) is tabulated in modulus.csv. Check: zero violating pairs.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "64"},
          {"run.p", "2"},
          {"run.q", "2"},
          {"run.p_prime", "2"},
          {"run.seed", "2026"},
          {"run.stride", "1"},
          {"domination.families", "3"},
          {"domination.steps", "7"},
          {"domination.amplitude", "0.3"},
          {"domination.shrink", "4"},
          {"domination.spike_levels", "12"},
          {"domination.calabi_threshold", "1e-6"},
          {"domination.mabuchi_threshold", "1e-4"},
          {"domination.sup_threshold", "1e-2"}},
         run_q_domination, verify_q_domination});

    reg.push_back(
        {"entropy-equivalence",
         "Convergence statistics co-vanish for entropy-bounded families and decouple for an "
         "oscillating one",
         "Runs convergence diagnostics (potential L1 distance, weak proxy against a fixed "
         "low-mode dictionary, Mabuchi and Calabi statistics) toward a reference for two kinds "
         "of family: shrinking smooth families, whose entropies converge and whose statistics "
         "must all be small together at the end, and a family of ever-faster density "
         "oscillations with entropy bounded away from zero, where the potential-based "
         "statistics vanish while the Calabi one persists. Checks: every entropy-convergent "
         "family co-vanishes without decoupling, and at least one oscillating family decouples, "
         "so the entropy hypothesis is not removable.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "128"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "2026"},
          {"run.stride", "1"},
          {"equivalence.families", "3"},
          {"equivalence.steps", "11"},
          {"equivalence.amplitude", "0.3"},
          {"equivalence.shrink", "4"},
          {"equivalence.modes", "4,8,16,32"},
          {"equivalence.osc_amplitude", "0.4"},
          {"equivalence.trigger", "1e-6"},
          {"equivalence.vanish", "1e-4"}},
         run_entropy_equivalence, verify_entropy_equivalence});

    reg.push_back(
        {"kr-criterion",
         "Ricci-type flow from a zonal start: the speed decays exponentially, so the length "
         "criterion integral is finite",
         "Runs the normalized Ricci-type potential flow on the round backend from a zonal "
         "perturbation and samples the Finsler speed g(t) = ((1/V) int |1 - S|^p rho^q)^{1/p} "
         "along it. The linearization decays the slowest zonal mode exponentially, so the "
         "running integral of g converges: the trajectory has finite length, which is the "
         "integrability certificate for convergence. Checks: the stored running integral is "
         "the trapezoid of (t, g), the fitted tail rate clears the floor, the extrapolated "
         "total length is finite, and the final speed is below late_g.",
         {{"run.backend", "round-p1"},
          {"run.resolution", "64"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "1"},
          {"run.stride", "25"},
          {"criterion.ell", "2"},
          {"criterion.amplitude", "0.1"},
          {"criterion.dt", "0.002"},
          {"criterion.horizon", "6"},
          {"criterion.rate_floor", "0.05"},
          {"criterion.late_g", "1e-4"}},
         run_kr_criterion, verify_kr_criterion});

    reg.push_back(
        {"calabi-decay",
         "Scalar-curvature flow relaxes a perturbed start to the constant-curvature metric",
         "Runs the scalar-curvature flow from a single-mode perturbation (torus mode or zonal "
         "sphere mode, by backend) and tracks the L1 distance of the evolving density from the "
         "constant one together with its entropy. The fourth-order linearization damps every "
         "mode, so the gap decays to the flat or round terminal state. Checks: the final "
         "density gap is below gap_threshold and has decayed to at most decay_factor of the "
         "initial one.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "64"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "1"},
          {"run.stride", "25"},
          {"calabi.dt", "auto"},
          {"calabi.horizon", "auto"},
          {"calabi.amplitude", "auto"},
          {"calabi.gap_threshold", "1e-5"},
          {"calabi.decay_factor", "0.01"}},
         run_calabi_decay, verify_calabi_decay});

    reg.push_back(
        {"metric-report",
         "Distance bracket, Mabuchi length, pair statistics, and entropies for one random pair",
         "Draws two seeded random potentials and reports the Calabi distance bracket (chord "
         "between the embedded densities as the lower end, projected-segment polyline length "
         "as the upper), the two-point Mabuchi length, both unnormalized Cauchy statistics, "
         "and the endpoint entropies; at p = 2, q = 1 the exact great-circle distance is also "
         "computed. Checks: the bracket ends are ordered, the closed form lies inside the "
         "bracket when applicable, and the entropies are nonnegative.",
         {{"run.backend", "flat-torus"},
          {"run.resolution", "64"},
          {"run.p", "2"},
          {"run.q", "1"},
          {"run.p_prime", "1"},
          {"run.seed", "7"},
          {"run.stride", "1"},
          {"metric.amplitude", "0.3"},
          {"metric.samples", "257"}},
         run_metric_report, verify_metric_report});

    return reg;
}

}  // namespace

const std::vector<ExperimentDef>& experiment_registry() {
    static const std::vector<ExperimentDef> reg = build_registry();
    return reg;
}

const ExperimentDef* find_experiment(const std::string& name) {
    for (const auto& def : experiment_registry())
        if (def.name == name) return &def;
    return nullptr;
}

void RunConfig::validate() const {
    if (experiment.empty())
        throw UsageError("invariant violated: an experiment name must be set");
    if (!(q >= 1.0) || !std::isfinite(q))
        throw UsageError("invariant violated: need finite q >= 1 (run.q = " + fmt(q) + ")");
    if (!(q <= p))
        throw UsageError("invariant violated: need q <= p (run.q = " + fmt(q) +
                         ", run.p = " + fmt(p) + ")");
    if (!(p_prime >= 1.0))
        throw UsageError("invariant violated: need run.p_prime >= 1");
    int lo = backend == BackendKind::FlatTorus ? 8 : 16;
    bool bad_parity = backend == BackendKind::FlatTorus && resolution % 2 != 0;
    if (resolution < lo || resolution > 1024 || bad_parity)
        throw UsageError("invariant violated: run.resolution " + std::to_string(resolution) +
                         " outside the supported range (" + backend_name(backend) + ": " +
                         std::to_string(lo) + "..1024" +
                         (backend == BackendKind::FlatTorus ? ", even" : "") + ")");
    if (stride < 1) throw UsageError("invariant violated: run.stride must be >= 1");
}

RunConfig make_run_config(const ExperimentDef& def, const Config& source,
                          const KeyValues& flag_overrides, const std::string& out_flag) {
    Config merged;
    merged.raw_text = source.raw_text;
    merged.entries = def.defaults;
    auto put = [&](const std::string& k, const std::string& v) {
        for (auto& [ek, ev] : merged.entries)
            if (ek == k) {
                ev = v;
                return;
            }
        merged.entries.emplace_back(k, v);
    };
    for (const auto& [k, v] : source.entries) put(k, v);
    // Replayed overrides stay recorded so the next params.json echo keeps
    // them; replay is then a fixed point.
    merged.overrides = source.overrides;
    for (const auto& [k, v] : flag_overrides) merged.set(k, v);

    RunConfig rc;
    rc.experiment = def.name;
    rc.cfg = std::move(merged);
    rc.backend = backend_from_name(rc.cfg.get_or("run.backend", "flat-torus"));
    rc.resolution = static_cast<int>(rc.cfg.get_int("run.resolution", 64));
    rc.p = rc.cfg.get_double("run.p", 2.0);
    rc.q = rc.cfg.get_double("run.q", 1.0);
    rc.p_prime = rc.cfg.get_double("run.p_prime", 1.0);
    long long seed = rc.cfg.get_int("run.seed", 1);
    if (seed < 0) throw UsageError("invariant violated: run.seed must be nonnegative");
    rc.seed = static_cast<std::uint64_t>(seed);
    rc.stride = static_cast<int>(rc.cfg.get_int("run.stride", 1));
    rc.out_dir = !out_flag.empty() ? out_flag : rc.cfg.get_or("run.out", "runs/" + def.name);
    rc.validate();
    return rc;
}

Config load_run_input(const std::string& path) {
    std::string text = read_text_file(path);
    std::size_t i = text.find_first_not_of(" \t\r\n");
    if (i == std::string::npos || text[i] != '{') return parse_config(text);

    // params.json replay: restore the embedded config and its overrides.
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("extra"))
        throw UsageError("not a config file or params.json: " + path);
    const json& extra = j.at("extra");
    Config cfg = parse_config(extra.value("config_text", std::string()));
    Config ov = parse_config(extra.value("overrides", std::string()));
    for (const auto& [k, v] : ov.entries) cfg.set(k, v);
    if (!cfg.has("run.experiment") && j.contains("name"))
        cfg.set("run.experiment", j.at("name").get<std::string>());
    return cfg;
}

}  // namespace kfl
