// Acceptance suite: twelve end-to-end criteria, one printed line each.
// Exit status is the number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "kfl/errors.hpp"
#include "kfl/experiments.hpp"
#include "kfl/finsler.hpp"
#include "kfl/flows.hpp"
#include "kfl/geometry.hpp"
#include "kfl/io.hpp"
#include "kfl/measure.hpp"
#include "kfl/registry.hpp"
#include "kfl/report.hpp"
#include "kfl/sphere.hpp"
#include "kfl/util.hpp"

using namespace kfl;
using kfl_test::random_potential;
using kfl_test::zonal_potential;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome ok(std::string detail) { return {true, std::move(detail)}; }
Outcome bad(std::string detail) { return {false, std::move(detail)}; }

std::string num(double x) { return format_double(x); }

const std::array<std::pair<double, double>, 4> kExponentPairs = {
    {{1.0, 1.0}, {2.0, 1.0}, {3.0, 1.5}, {4.0, 2.0}}};

// ---- 1: the density-power embedding is a Finsler isometry ------------------

// Midpoint-rule Finsler length and embedded polyline length approach the same
// limit; their gap must shrink at second order in the curve mesh and the
// finest gap must be under 1e-3 of the length.
Outcome criterion_isometry() {
    auto g = Geometry::make_torus(128);
    Rng rng(101);
    const std::vector<int> meshes = {9, 17, 33, 65};
    double worst_rel = 0.0, worst_order = 10.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto [p, q] = kExponentPairs[trial % 4];
        Potential u0 = random_potential(g, rng, 0.2);
        Potential u1 = random_potential(g, rng, 0.2);
        Potential w = random_potential(g, rng, 0.1);
        auto at = [&](double t) {
            return Potential::make(
                g, ArrayXd((1.0 - t) * u0.values + t * u1.values + std::sin(M_PI * t) * w.values));
        };
        std::vector<double> gaps;
        double length = 0.0;
        for (int m : meshes) {
            std::vector<Potential> samples;
            std::vector<double> params;
            std::vector<ArrayXd> embedded;
            for (int i = 0; i < m; ++i) {
                double t = double(i) / (m - 1);
                samples.push_back(at(t));
                params.push_back(t);
                embedded.push_back(embed_on_sphere(samples.back(), p, q).values);
            }
            double finsler = calabi_length(make_potential_curve(samples, params), p, q);
            double flat = curve_length(make_curve(std::move(embedded), params), p, g->measure());
            gaps.push_back(std::abs(finsler - flat));
            length = finsler;
        }
        worst_rel = std::max(worst_rel, gaps.back() / length);
        // Order estimate from the coarser refinements, where the gap is far
        // above roundoff.
        for (std::size_t i = 0; i + 1 < gaps.size() - 1; ++i)
            if (gaps[i + 1] > 1e-13)
                worst_order = std::min(worst_order, std::log2(gaps[i] / gaps[i + 1]));
    }
    bool pass = worst_rel < 1e-3 && worst_order > 1.5;
    return {pass, "final rel gap " + num(worst_rel) + " (<1e-3), worst order " + num(worst_order) +
                      " (>1.5) over 20 curves"};
}

// ---- 2: chord/round comparison chain ---------------------------------------

Outcome criterion_comparison_chain() {
    auto g = Geometry::make_torus(32);
    Rng rng(202);
    int checked = 0, failures = 0;
    double worst = -kInfinity, min_margin = kInfinity;
    for (int trial = 0; trial < 250; ++trial) {
        for (auto [p, q] : kExponentPairs) {
            SphereFunction f = embed_on_sphere(random_potential(g, rng, 0.3), p, q);
            SphereFunction f0 = embed_on_sphere(random_potential(g, rng, 0.3), p, q);
            SphereFunction f1 = embed_on_sphere(random_potential(g, rng, 0.3), p, q);
            SphereComparisonReport rep =
                comparison_bracket_check(f, f0, f1, p, q, g->measure(), 129);
            ++checked;
            bool chord_ok = rep.chord <= rep.polyline_length * (1.0 + 1e-12) + 1e-12;
            bool norm_ok = rep.min_segment_norm >= rep.r_half * (1.0 - 1e-12);
            if (!rep.all_hold || !chord_ok || !norm_ok) ++failures;
            worst = std::max(worst, rep.max_violation);
            min_margin = std::min(min_margin, rep.min_segment_norm - rep.r_half);
        }
    }
    bool pass = failures == 0;
    return {pass, std::to_string(checked) + " pair checks, " + std::to_string(failures) +
                      " failures, worst chain slack " + num(worst) + ", min norm margin over r/2 " +
                      num(min_margin)};
}

// ---- 3: exact round distance at p=2, q=1 -----------------------------------

Outcome criterion_closed_form() {
    auto g = Geometry::make_torus(32);
    Rng rng(303);
    const int m = 257;
    double worst_outside = -kInfinity, worst_arc = 0.0;
    int outside = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Potential u0 = random_potential(g, rng, 0.3);
        Potential u1 = random_potential(g, rng, 0.3);
        DistanceBracket br = calabi_distance_bracket(u0, u1, 2.0, 1.0, m);
        double cf = calabi_distance_round_21(u0, u1);
        // Polyline deficit allowance, as in the metric-report verdicts.
        double tol =
            1e-12 * std::max(1.0, cf) + std::pow(std::max(cf, br.upper), 3) / (8.0 * (m - 1.0) * (m - 1.0));
        double excess = std::max(br.lower - cf, cf - br.upper);
        worst_outside = std::max(worst_outside, excess - tol);
        if (excess > tol) ++outside;
        // Chord inflated by the curvature correction of the radius-2 sphere
        // is exactly the great-circle length.
        worst_arc = std::max(worst_arc, std::abs(cf - 4.0 * std::asin(br.lower / 4.0)));
    }
    Rng trng(304);
    double worst_cat = -kInfinity;
    for (int tri = 0; tri < 100; ++tri) {
        SphereFunction U = embed_on_sphere(random_potential(g, trng, 0.3), 2.0, 1.0);
        SphereFunction V = embed_on_sphere(random_potential(g, trng, 0.3), 2.0, 1.0);
        SphereFunction W = embed_on_sphere(random_potential(g, trng, 0.3), 2.0, 1.0);
        worst_cat = std::max(worst_cat, cat_quarter_check(U, V, W, g->measure(), 50).max_violation);
    }
    bool pass = outside == 0 && worst_arc < 1e-8 && worst_cat < 1e-8;
    return {pass, "1000 pairs: in-bracket failures " + std::to_string(outside) +
                      ", arc identity gap " + num(worst_arc) + " (<1e-8); 100 triangles: max "
                      "comparison violation " + num(worst_cat) + " (<1e-8)"};
}

// ---- 4: the two smoothing statistics vanish together ------------------------

Outcome criterion_vitali() {
    auto g = Geometry::make_torus(32);
    Rng rng(404);
    int triggered = 0, broken = 0;
    for (int fam = 0; fam < 50; ++fam) {
        auto [p, q] = kExponentPairs[1 + fam % 3];  // q >= 1 with p/q > 1 kept meaningful
        ArrayXd f = density(random_potential(g, rng, 0.3)).values;
        ArrayXd dir = density(random_potential(g, rng, 0.3)).values - 1.0;
        std::vector<ArrayXd> fj;
        for (int j = 0; j <= 10; ++j) fj.push_back(f + std::pow(4.0, -j) * dir);
        bool fam_triggered = false;
        for (const VitaliStat& s : vitali_equivalence_stat(fj, f, p, q, g->measure())) {
            if (s.norm_gap < 1e-6 || s.power_gap < 1e-6) fam_triggered = true;
            if (s.norm_gap < 1e-6 && s.power_gap >= 1e-3) ++broken;
            if (s.power_gap < 1e-6 && s.norm_gap >= 1e-3) ++broken;
        }
        if (fam_triggered) ++triggered;
    }
    // Designed non-convergent family: ever-faster oscillations keep both
    // statistics bounded away from zero.
    std::vector<ArrayXd> osc;
    for (int k : {2, 4, 8, 16}) osc.push_back(1.0 + 0.5 * (2.0 * M_PI * k * g->x()).cos());
    double viol_min = kInfinity;
    for (const VitaliStat& s :
         vitali_equivalence_stat(osc, ArrayXd::Constant(g->sites(), 1.0), 2.0, 1.0, g->measure()))
        viol_min = std::min(viol_min, std::min(s.norm_gap, s.power_gap));
    bool pass = triggered == 50 && broken == 0 && viol_min > 1e-3;
    return {pass, "50 convergent families (triggered " + std::to_string(triggered) +
                      ", co-vanish breaks " + std::to_string(broken) +
                      "); violator keeps both stats above " + num(viol_min)};
}

// ---- 5: Cauchy statistics, smooth collapse vs smooth-max separation ---------

Outcome criterion_cauchy() {
    auto g64 = Geometry::make_torus(64);
    Rng rng(505);
    double worst_smooth = 0.0;
    for (int fam = 0; fam < 10; ++fam) {
        Potential u = random_potential(g64, rng, 0.3);
        Potential w = random_potential(g64, rng, 0.2);
        Potential prev = u;
        for (int j = 1; j <= 14; ++j) {
            Potential next =
                Potential::make(g64, ArrayXd(u.values + std::pow(4.0, -j) * w.values));
            if (j == 14) {
                worst_smooth = std::max(worst_smooth, calabi_cauchy_stat(prev, next, 1.0));
                worst_smooth = std::max(worst_smooth, mabuchi_cauchy_stat(prev, next, 2.0));
            }
            prev = next;
        }
    }

    std::vector<double> schedule;
    for (int i = 0; i < 7; ++i) schedule.push_back(0.015 * std::pow(0.5, i));
    std::vector<double> deltas;
    double worst_late_mabuchi = 0.0;
    for (int n : {128, 256, 512}) {
        auto g = Geometry::make_torus(n);
        double a = 0.02;
        Potential v0 = Potential::make(g, ArrayXd(a * (2.0 * M_PI * g->x()).cos()));
        Potential v1 = Potential::make(g, ArrayXd(0.5 * a * (2.0 * M_PI * g->y()).sin()));
        SequenceExperiment ex = max_smoothing_family(v0, v1, schedule, 1.0);
        std::size_t last = ex.stats.rows.size() - 1;
        worst_late_mabuchi = std::max(worst_late_mabuchi, ex.stats.at(last, "mabuchi_consec"));
        deltas.push_back(ex.stats.at(last, "calabi_from_first"));
    }
    double mean = (deltas[0] + deltas[1] + deltas[2]) / 3.0;
    double spread = 0.0;
    bool positive = true;
    for (double d : deltas) {
        positive = positive && d > 0.0;
        spread = std::max(spread, std::abs(d - mean) / mean);
    }
    bool pass = worst_smooth < 1e-8 && worst_late_mabuchi < 1e-4 && positive && spread <= 0.2;
    return {pass, "smooth-family late stats <= " + num(worst_smooth) +
                      " (<1e-8); smooth-max late Mabuchi <= " + num(worst_late_mabuchi) +
                      " (<1e-4), separation delta " + num(mean) + " +/- " + num(spread * 100.0) +
                      "% over N in {128,256,512} (<=20%)"};
}

// ---- 6: spike staircase growth laws ------------------------------------------

Outcome criterion_spike() {
    auto g = Geometry::make_torus(512);
    const int K = 64;
    SequenceExperiment ex = spike_density_family(g, 1.0, K);
    double V = g->volume();
    double C = 6.0 * V / (M_PI * M_PI);
    double worst_witness = 0.0, worst_tail = 0.0;
    double harmonic = 0.0;
    for (int t = 1; t <= K; ++t) {
        harmonic += 1.0 / t;
        std::size_t row = static_cast<std::size_t>(t - 1);
        worst_witness = std::max(
            worst_witness, std::abs(ex.stats.at(row, "witness") - C * harmonic) / (C * harmonic));
        if (t >= 2) {
            double law = 2.0 * C / (double(t) * t);
            worst_tail =
                std::max(worst_tail, std::abs(ex.stats.at(row, "consec_l1") - law) / law);
        }
    }
    bool pass = worst_witness <= 0.05 && worst_tail <= 0.10 && ex.verdicts.all_pass();
    return {pass, "K=64: witness vs (6V/pi^2)H_K off by " + num(worst_witness) +
                      " (<=5%), consecutive L1 vs k^-2 law off by " + num(worst_tail) +
                      " (<=10%)"};
}

// ---- 7: q > 1 domination sweeps ----------------------------------------------

Outcome criterion_domination() {
    auto g = Geometry::make_torus(64);
    Rng rng(707);
    std::vector<std::vector<Potential>> families;
    for (int f = 0; f < 35; ++f) {
        Potential base = random_potential(g, rng, 0.3);
        std::vector<Potential> fam;
        for (int j = 0; j < 6; ++j)
            fam.push_back(Potential::make(g, ArrayXd(base.values * std::pow(4.0, -j))));
        families.push_back(std::move(fam));
    }
    for (int f = 0; f < 5; ++f) {
        Potential still = random_potential(g, rng, 0.3);
        families.push_back({still, still, still});
    }
    for (int f = 0; f < 5; ++f) {
        SpikeParams sp;
        sp.mass_exponent = 4.0;
        families.push_back(spike_density_family(g, 1.0, 6 + f, sp).sequence);
    }
    std::vector<double> schedule;
    for (int i = 0; i < 6; ++i) schedule.push_back(0.02 * std::pow(0.5, i));
    for (int f = 0; f < 5; ++f) {
        double a = 0.01 * (1 + f);
        Potential v0 = Potential::make(g, ArrayXd(a * (2.0 * M_PI * g->x()).cos()));
        Potential v1 = Potential::make(g, ArrayXd(0.5 * a * (2.0 * M_PI * g->y()).sin()));
        families.push_back(max_smoothing_family(v0, v1, schedule, 1.0).sequence);
    }

    int total_pairs = 0, violations = 0;
    for (auto [p, q] : {std::pair{2.0, 2.0}, {3.0, 1.5}, {4.0, 2.0}}) {
        DominationReport rep = q_gt_1_domination_sweep(families, p, q, 2.0, 1e-6, 1e-4, 1e-2);
        total_pairs += static_cast<int>(rep.rows.rows.size());
        violations += rep.violations;
    }
    bool pass = violations == 0;
    return {pass, "50 families under (p,q) in {(2,2),(3,1.5),(4,2)}: " +
                      std::to_string(total_pairs) + " pairs, " + std::to_string(violations) +
                      " counterexamples"};
}

// ---- 8: entropy equivalence sweep, recorded through the runner ---------------

Outcome criterion_equivalence() {
    namespace fs = std::filesystem;
    std::string dir = (fs::temp_directory_path() / "kfl_acceptance_equivalence").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    const ExperimentDef* def = find_experiment("entropy-equivalence");
    if (!def) return bad("entropy-equivalence missing from the registry");
    RunConfig rc = make_run_config(*def, Config{},
                                   {{"run.resolution", "64"},
                                    {"run.seed", "808"},
                                    {"equivalence.families", "20"},
                                    {"equivalence.steps", "9"}},
                                   dir);
    def->run(rc);
    VerdictSet stored = verdict_set_from_json(read_text_file(dir + "/verdict.json"));
    int co_vanish = 0;
    bool decouple = false, exhibited = false;
    for (const Verdict& v : stored.items) {
        if (v.name.rfind("co-vanish:", 0) == 0 && v.pass) ++co_vanish;
        if (v.name.rfind("decouple:", 0) == 0 && v.pass) decouple = true;
        if (v.name == "divergence-exhibited" && v.pass) exhibited = true;
    }
    bool pass = stored.all_pass() && co_vanish == 20 && decouple && exhibited;
    return {pass, std::to_string(co_vanish) +
                      "/20 convergent families co-vanish, divergent family decouples (" +
                      (decouple ? "yes" : "no") + "), all recorded in verdict.json (" +
                      (stored.all_pass() ? "all pass" : "failures present") + ")"};
}

// ---- 9: entropy dominates squared total variation -----------------------------

Outcome criterion_pinsker() {
    // Two-cell calibration: the frozen constant 2V is attained in the small
    // perturbation limit, so nothing smaller works.
    MeasureSpace two = MeasureSpace::uniform(2, 2.0);
    double near_sharp = 0.0;
    bool holds_all = true;
    for (double s : {0.9, 0.5, 0.1, 0.01}) {
        ArrayXd f(2), gconst(2);
        f << 1.0 + s, 1.0 - s;
        gconst << 1.0, 1.0;
        PinskerReport rep = pinsker_gap(f, gconst, two);
        if (rep.kappa != 2.0 * two.total() || !rep.holds) holds_all = false;
        near_sharp = std::max(near_sharp, rep.lhs / (rep.kappa * rep.rhs));
    }

    int violations = 0;
    double worst_ratio = 0.0;
    auto sweep = [&](const GeometryPtr& g, int n, Rng& rng) {
        for (int i = 0; i < n; ++i) {
            Density a = density(random_potential(g, rng, rng.uniform(0.1, 0.9)));
            Density b = density(random_potential(g, rng, rng.uniform(0.1, 0.9)));
            PinskerReport rep = pinsker_gap(a, b);
            if (!rep.holds) ++violations;
            if (rep.rhs > 0) worst_ratio = std::max(worst_ratio, rep.lhs / (rep.kappa * rep.rhs));
        }
    };
    Rng rng(909);
    auto gt = Geometry::make_torus(32);
    auto gs = Geometry::make_p1(64);
    sweep(gt, 5000, rng);
    sweep(gs, 5000, rng);
    bool pass = holds_all && violations == 0 && near_sharp > 0.999 && near_sharp <= 1.0 + 1e-12;
    return {pass, "10^4 pairs, " + std::to_string(violations) +
                      " violations; two-cell sharpness ratio reaches " + num(near_sharp) +
                      " of the frozen kappa = 2V"};
}

// ---- 10: Ricci-type flow has an integrable speed -------------------------------

Outcome criterion_kr_flow() {
    auto g = Geometry::make_p1(256);
    Potential u0 = zonal_potential(g, 2, 0.1);
    FlowTrajectory coarse = kr_flow_run(u0, 2e-3, 6.0);
    FlowTrajectory fine = kr_flow_run(u0, 1e-3, 6.0);

    LengthCriterionReport rc = flow_length_criterion(coarse, 2.0, 1.0);
    LengthCriterionReport rf = flow_length_criterion(fine, 2.0, 1.0);
    double lambda_gap = std::abs(rc.tail_rate - rf.tail_rate) / rf.tail_rate;

    double worst_integral_gap = 0.0;
    bool all_finite = true;
    for (auto [p, q] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {4.0, 2.0}, {kInfinity, 1.0}}) {
        LengthCriterionReport a = flow_length_criterion(coarse, p, q);
        LengthCriterionReport b = flow_length_criterion(fine, p, q);
        all_finite = all_finite && a.finite && b.finite;
        double ta = a.integral + a.tail_extrapolation;
        double tb = b.integral + b.tail_extrapolation;
        worst_integral_gap = std::max(worst_integral_gap, std::abs(ta - tb) / tb);
    }
    double late = std::max(rc.late_cauchy_calabi, rc.late_cauchy_mabuchi);
    bool pass = rc.tail_rate > 0.0 && lambda_gap <= 0.10 && all_finite &&
                worst_integral_gap <= 0.01 && late < 1e-6;
    return {pass, "lambda " + num(rc.tail_rate) + " stable to " + num(lambda_gap * 100.0) +
                      "% under dt halving (<=10%); integral stable to " +
                      num(worst_integral_gap * 100.0) +
                      "% over four (p,q) (<=1%); late Cauchy stats " + num(late) + " (<1e-6)"};
}

// ---- 11: scalar-curvature flow relaxes to the constant state -------------------

Outcome criterion_calabi_flow() {
    struct Case {
        GeometryPtr g;
        Potential u0;
        double dt, T;
    };
    auto gt = Geometry::make_torus(64);
    auto gs = Geometry::make_p1(64);
    std::vector<Case> cases;
    cases.push_back({gt,
                     Potential::make(gt, ArrayXd(0.005 * (2.0 * M_PI * gt->x()).cos())),
                     1e-4, 0.03});
    cases.push_back({gs, zonal_potential(gs, 2, 0.3), 1e-3, 3.0});

    double worst_gap = 0.0, worst_width_ratio = 0.0, worst_final_width = 0.0;
    for (const Case& c : cases) {
        FlowControls controls;
        controls.store_stride = 5;
        FlowTrajectory traj = calabi_flow_run(c.u0, c.dt, c.T, controls);
        const Potential& terminal = traj.states.back();
        double gap =
            c.g->measure().integral((density(terminal).values - 1.0).abs());
        worst_gap = std::max(worst_gap, gap);

        // Bracketed distance to the terminal state along checkpoints in the
        // second half: the widths collapse as the flow settles.
        std::size_t n = traj.states.size();
        std::vector<double> widths;
        for (std::size_t k = 2; k <= 5; ++k) {
            const Potential& mid = traj.states[n - 1 - (n / 12) * (6 - k)];
            DistanceBracket br = calabi_distance_bracket(mid, terminal, 2.0, 1.0, 65);
            widths.push_back(br.upper - br.lower);
        }
        for (std::size_t i = 0; i + 1 < widths.size(); ++i)
            worst_width_ratio =
                std::max(worst_width_ratio, (widths[i + 1] - 1e-13) / std::max(widths[i], 1e-300));
        worst_final_width = std::max(worst_final_width, widths.back());
    }
    bool pass = worst_gap < 1e-5 && worst_width_ratio <= 1.05 && worst_final_width < 1e-8;
    return {pass, "terminal density gap " + num(worst_gap) +
                      " (<1e-5) on both backends; bracket widths shrink (worst step ratio " +
                      num(worst_width_ratio) + " <=1.05) to " + num(worst_final_width) +
                      " (<1e-8)"};
}

// ---- 12: backend oracles --------------------------------------------------------

Outcome criterion_backends() {
    // Poisson round-trip.
    double worst_poisson = 0.0;
    {
        Rng rng(121);
        auto gt = Geometry::make_torus(128);
        auto gs = Geometry::make_p1(64);
        for (const GeometryPtr& g : {gt, gs}) {
            Potential u = random_potential(g, rng, 0.3);
            ArrayXd back = g->solve_poisson(g->laplace(u.values));
            worst_poisson =
                std::max(worst_poisson, (back - g->zero_mean(u.values)).abs().maxCoeff());
        }
    }

    // Eigenvalue error decays at the scheme order (second) under doubling.
    auto rayleigh = [](const GeometryPtr& g, const ArrayXd& phi) {
        return g->measure().integral(phi * g->laplace(phi)) / g->measure().integral(phi * phi);
    };
    double worst_eig_ratio_low = kInfinity, worst_eig_ratio_high = 0.0;
    {
        std::vector<double> err;
        for (int n : {32, 64, 128}) {
            auto g = Geometry::make_torus(n);
            ArrayXd phi = (2.0 * M_PI * 2.0 * g->x()).cos();
            // The operator is tr_omega i del dbar, half the flat Laplacian.
            err.push_back(std::abs(rayleigh(g, phi) + 2.0 * M_PI * M_PI * 4.0));
        }
        for (std::size_t i = 0; i + 1 < err.size(); ++i) {
            worst_eig_ratio_low = std::min(worst_eig_ratio_low, err[i] / err[i + 1]);
            worst_eig_ratio_high = std::max(worst_eig_ratio_high, err[i] / err[i + 1]);
        }
        err.clear();
        for (int n : {32, 64, 128}) {
            auto g = Geometry::make_p1(n);
            ArrayXd c = g->theta().cos();
            ArrayXd phi(c.size());
            for (Eigen::Index i = 0; i < c.size(); ++i) phi[i] = std::legendre(2, c[i]);
            err.push_back(std::abs(rayleigh(g, phi) + 3.0));  // -l(l+1)/2 at l=2
        }
        for (std::size_t i = 0; i + 1 < err.size(); ++i) {
            worst_eig_ratio_low = std::min(worst_eig_ratio_low, err[i] / err[i + 1]);
            worst_eig_ratio_high = std::max(worst_eig_ratio_high, err[i] / err[i + 1]);
        }
    }

    // The curvature average over the evolved volume is the topological mean.
    double worst_sbar = 0.0;
    {
        Rng rng(122);
        auto gt = Geometry::make_torus(32);
        auto gs = Geometry::make_p1(32);
        for (const GeometryPtr& g : {gt, gs}) {
            for (int i = 0; i < 500; ++i) {
                Potential u = random_potential(g, rng, rng.uniform(0.1, 0.8));
                ArrayXd S = scalar_curvature(u);
                double avg = g->measure().integral(S * density(u).values) / g->volume();
                worst_sbar = std::max(worst_sbar, std::abs(avg - g->mean_scalar_curvature()));
            }
        }
    }
    bool pass = worst_poisson < 1e-9 && worst_eig_ratio_low > 3.3 && worst_eig_ratio_high < 4.7 &&
                worst_sbar < 1e-6;
    return {pass, "Poisson round-trip " + num(worst_poisson) +
                      " (<1e-9); eigenvalue error doubling ratios in [" +
                      num(worst_eig_ratio_low) + ", " + num(worst_eig_ratio_high) +
                      "] (second order); curvature average off by " + num(worst_sbar) +
                      " (<1e-6) on 10^3 potentials"};
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> entries = {
        {"isometry-second-order", criterion_isometry},
        {"comparison-chain", criterion_comparison_chain},
        {"closed-form-and-cat", criterion_closed_form},
        {"smoothing-stats-covanish", criterion_vitali},
        {"cauchy-collapse-vs-separation", criterion_cauchy},
        {"spike-growth-laws", criterion_spike},
        {"q-domination", criterion_domination},
        {"entropy-equivalence", criterion_equivalence},
        {"pinsker-chain", criterion_pinsker},
        {"ricci-flow-integrable", criterion_kr_flow},
        {"calabi-flow-relaxes", criterion_calabi_flow},
        {"backend-oracles", criterion_backends},
    };

    int failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entries[i].fn();
        } catch (const std::exception& e) {
            outcome = bad(std::string("exception: ") + e.what());
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %-30s [%6.1fs] %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    entries[i].name, secs, outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    std::printf("%d/12 criteria passed\n", 12 - failures);
    return failures;
}
