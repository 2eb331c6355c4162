#include "kfl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kfl/errors.hpp"
#include "kfl/util.hpp"

namespace kfl {

namespace {

// Crossing edges whose site gradient falls below this fraction of the global
// gradient sup mark a level set tangential to the grid.
constexpr double kTransversalityFloor = 0.02;

std::string fmt(double x) { return format_double(x); }

double grid_spacing(const GeometryPtr& g) {
    return (g->kind() == BackendKind::FlatTorus ? 1.0 : M_PI) / g->resolution();
}

// Full central-difference gradient magnitude per site (one-sided at the P1
// poles, periodic on the torus).
ArrayXd gradient_magnitude(const GeometryPtr& g, const ArrayXd& s) {
    Eigen::Index n = s.size();
    ArrayXd out(n);
    if (g->kind() == BackendKind::FlatTorus) {
        int N = g->resolution();
        double inv2h = 0.5 * N;
        for (int i = 0; i < N; ++i) {
            int up = (i + 1) % N, dn = (i + N - 1) % N;
            for (int j = 0; j < N; ++j) {
                int rt = (j + 1) % N, lf = (j + N - 1) % N;
                Eigen::Index idx = static_cast<Eigen::Index>(i) * N + j;
                double gx = (s[static_cast<Eigen::Index>(i) * N + rt] -
                             s[static_cast<Eigen::Index>(i) * N + lf]) *
                            inv2h;
                double gy = (s[static_cast<Eigen::Index>(up) * N + j] -
                             s[static_cast<Eigen::Index>(dn) * N + j]) *
                            inv2h;
                out[idx] = std::hypot(gx, gy);
            }
        }
    } else {
        double h = grid_spacing(g);
        for (Eigen::Index i = 0; i < n; ++i) {
            double d;
            if (i == 0)
                d = (s[1] - s[0]) / h;
            else if (i == n - 1)
                d = (s[n - 1] - s[n - 2]) / h;
            else
                d = (s[i + 1] - s[i - 1]) / (2.0 * h);
            out[i] = std::abs(d);
        }
    }
    return out;
}

struct CrossingScan {
    bool any = false;
    double min_gradient = kInfinity;  // over crossing edges, max of the two site gradients
    double max_gradient = 0.0;        // global gradient sup
};

CrossingScan scan_crossings(const GeometryPtr& g, const ArrayXd& s) {
    ArrayXd gm = gradient_magnitude(g, s);
    CrossingScan scan;
    scan.max_gradient = gm.maxCoeff();
    auto edge = [&](Eigen::Index a, Eigen::Index b) {
        bool cross = (s[a] * s[b] < 0.0) || ((s[a] == 0.0) != (s[b] == 0.0));
        if (!cross) return;
        scan.any = true;
        scan.min_gradient = std::min(scan.min_gradient, std::min(gm[a], gm[b]));
    };
    if (g->kind() == BackendKind::FlatTorus) {
        int N = g->resolution();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                Eigen::Index idx = static_cast<Eigen::Index>(i) * N + j;
                edge(idx, static_cast<Eigen::Index>(i) * N + (j + 1) % N);
                edge(idx, static_cast<Eigen::Index>((i + 1) % N) * N + j);
            }
    } else {
        for (Eigen::Index i = 0; i + 1 < s.size(); ++i) edge(i, i + 1);
    }
    return scan;
}

// Least-squares slope of log y against log t; 0 when fewer than two points.
double log_log_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, y] : pts) {
        double lx = std::log(t), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (denom <= 0.0) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

SequenceExperiment max_smoothing_family(const Potential& v0, const Potential& v1,
                                        const std::vector<double>& eps_schedule, double p_prime) {
    require_compatible(v0.geom, v1.geom, "max_smoothing_family");
    if (p_prime < 1.0) throw InvalidExponentError("max_smoothing_family: p' must be >= 1");
    if (eps_schedule.size() < 2)
        throw ScheduleError("max_smoothing_family: schedule needs at least two eps values");
    for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
        double e = eps_schedule[j];
        if (!(e > 0.0) || !std::isfinite(e))
            throw ScheduleError("max_smoothing_family: eps values must be positive and finite");
        if (j > 0 && !(e < eps_schedule[j - 1]))
            throw ScheduleError("max_smoothing_family: eps schedule must decrease strictly");
    }

    const GeometryPtr& g = v0.geom;
    ArrayXd s = v0.values - v1.values;
    double input_scale =
        std::max({1.0, v0.values.abs().maxCoeff(), v1.values.abs().maxCoeff()});
    bool identical = s.abs().maxCoeff() <= 1e-14 * input_scale;

    double gradient_ratio = 1.0;
    double collar_floor = 0.0;
    if (!identical) {
        CrossingScan scan = scan_crossings(g, s);
        if (!scan.any)
            throw ConstructionUnsuitableError(
                "max_smoothing_family: v0 - v1 never changes sign on the grid");
        if (!(scan.max_gradient > 0.0))
            throw ConstructionUnsuitableError("max_smoothing_family: v0 - v1 has no gradient");
        gradient_ratio = scan.min_gradient / scan.max_gradient;
        if (gradient_ratio < kTransversalityFloor)
            throw ConstructionUnsuitableError(
                "max_smoothing_family: level set tangential to the grid (crossing gradient "
                "ratio " +
                fmt(gradient_ratio) + " below " + fmt(kTransversalityFloor) + ")");
        collar_floor = 2.0 * grid_spacing(g) * scan.max_gradient;
    }

    SequenceExperiment ex;
    ex.name = "max-smoothing";
    ex.geom = g;
    ex.stats.columns = {"index",        "eps",          "sup_gap",
                        "mabuchi_consec", "calabi_consec", "calabi_from_first",
                        "collar_width", "collar_mass",  "entropy"};

    const ArrayXd& w = g->measure().weights();
    for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
        double e = eps_schedule[j];
        ArrayXd raw = 0.5 * (v0.values + v1.values + (s * s + e * e).sqrt());
        ex.sequence.push_back(Potential::make(g, std::move(raw)));
        const Potential& uj = ex.sequence.back();

        double sup_gap = 0.0, mab = 0.0, cal = 0.0, cal_first = 0.0;
        if (j > 0) {
            const Potential& up = ex.sequence[j - 1];
            sup_gap = (uj.values - up.values).abs().maxCoeff();
            mab = mabuchi_cauchy_stat(up, uj, p_prime);
            cal = calabi_cauchy_stat(up, uj, 1.0);
            cal_first = calabi_cauchy_stat(ex.sequence.front(), uj, 1.0);
        }

        double width = std::max(e, collar_floor);
        ArrayXd rho = density(uj).values;
        double collar_mass = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (std::abs(s[i]) <= width) collar_mass += w[i] * rho[i];

        ex.stats.add_row({static_cast<double>(j), e, sup_gap, mab, cal, cal_first, width,
                          collar_mass, entropy(uj)});
    }

    double delta = ex.stats.rows.back()[ex.stats.column_index("calabi_from_first")];

    ex.params = {{"backend", backend_name(g->kind())},
                 {"resolution", std::to_string(g->resolution())},
                 {"p_prime", fmt(p_prime)},
                 {"eps_first", fmt(eps_schedule.front())},
                 {"eps_last", fmt(eps_schedule.back())},
                 {"eps_count", std::to_string(eps_schedule.size())},
                 {"identical_inputs", identical ? "true" : "false"},
                 {"crossing_gradient_ratio", fmt(gradient_ratio)},
                 {"collar_floor", fmt(collar_floor)},
                 {"delta", fmt(delta)}};

    ex.verdicts = max_smoothing_verdicts(ex.stats, identical);
    return ex;
}

VerdictSet max_smoothing_verdicts(const StatsTable& stats, bool identical_inputs) {
    std::vector<double> mab_col = stats.column("mabuchi_consec");
    std::vector<double> mass_col = stats.column("collar_mass");
    double delta = stats.rows.back()[stats.column_index("calabi_from_first")];
    VerdictSet out;

    // Consecutive Mabuchi statistics must not increase (tiny slack for
    // rounding; entries below 1e-12 of the peak are at the arithmetic floor,
    // and the identical family is all floor).
    double peak = 0.0;
    for (std::size_t j = 1; j < mab_col.size(); ++j) peak = std::max(peak, mab_col[j]);
    double worst_ratio = 0.0;
    if (!identical_inputs)
        for (std::size_t j = 2; j < mab_col.size(); ++j) {
            if (mab_col[j - 1] <= 1e-12 * peak) continue;
            worst_ratio = std::max(worst_ratio, mab_col[j] / mab_col[j - 1]);
        }
    out.add({"mabuchi-consecutive-monotone", worst_ratio <= 1.0 + 1e-9, worst_ratio, 1.0,
             "largest ratio of consecutive Mabuchi statistics"});

    out.add({"calabi-separation-positive", identical_inputs || delta > 0.0, delta, 0.0,
             identical_inputs ? "identical inputs, separation not claimed"
                              : "q=1 Calabi statistic between first and last element"});

    // The collar shrinks with eps, so masses decrease toward the terminal
    // concentration value; none may fall far below it.
    double last_mass = mass_col.back();
    double min_mass = *std::min_element(mass_col.begin(), mass_col.end());
    double mass_ratio = last_mass > 0.0 ? min_mass / last_mass : 1.0;
    out.add({"collar-mass-bounded-below", mass_ratio >= 0.5, mass_ratio, 0.5,
             "smallest collar mass relative to the terminal one"});
    return out;
}

SequenceExperiment spike_density_family(const GeometryPtr& geom, double p_prime, int K,
                                        const SpikeParams& params) {
    if (!geom) throw DomainError("spike_density_family: null geometry");
    if (p_prime < 1.0) throw InvalidExponentError("spike_density_family: p' must be >= 1");
    if (!(params.eta > 0.0 && params.eta < 1.0))
        throw ScheduleError("spike_density_family: eta must lie in (0, 1)");
    if (!(params.floor_cap > 0.0) || !(params.shallow_level > 0.0))
        throw ScheduleError("spike_density_family: floor and shallow level must be positive");
    if (!(params.band_fraction > 0.0 && params.band_fraction < 1.0))
        throw ScheduleError("spike_density_family: band fraction must lie in (0, 1)");
    if (!(params.mass_exponent >= 1.0))
        throw ScheduleError("spike_density_family: mass exponent must be >= 1");

    int N = geom->resolution();
    int D_half = N / 2 - 1;
    int D = static_cast<int>(params.band_fraction * D_half);
    if (K < 1 || K > D)
        throw ScheduleError("spike_density_family: truncation level " + std::to_string(K) +
                            " outside the resolvable band range [1, " + std::to_string(D) + "]");

    // Band boundaries: geometric width targets, floor of one column, exact
    // total D. Band k occupies column distances (D - b_k, D - b_{k-1}], so
    // band K is innermost next to the central column.
    double c = std::max(1.0, K / 3.0);
    std::vector<double> prefix(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) prefix[k] = prefix[k - 1] + std::exp(-(k - 1) / c);
    std::vector<int> b(K + 1, 0);
    for (int k = 1; k <= K; ++k) {
        int target = static_cast<int>(std::llround(D * prefix[k] / prefix[K]));
        b[k] = std::clamp(target, b[k - 1] + 1, D - (K - k));
    }

    // dist_band[d] for d in [0, D]: 0 is the deep core, else the band index.
    std::vector<int> dist_band(D + 1, 0);
    for (int k = 1; k <= K; ++k)
        for (int d = D - b[k] + 1; d <= D - b[k - 1]; ++d) dist_band[d] = k;

    Eigen::Index n = geom->sites();
    std::vector<int> site_band(static_cast<std::size_t>(n), -1);  // -1 shallow
    for (Eigen::Index i = 0; i < n; ++i) {
        int d;
        if (geom->kind() == BackendKind::FlatTorus) {
            int col = static_cast<int>(i % N);
            d = std::abs(col - N / 2);
            d = std::min(d, N - d);
        } else {
            d = std::abs(static_cast<int>(i) - N / 2);
        }
        if (d <= D) site_band[static_cast<std::size_t>(i)] = dist_band[d];
    }

    const ArrayXd& w = geom->measure().weights();
    double V = geom->volume();
    std::vector<double> band_area(K + 1, 0.0);
    double shallow_area = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int id = site_band[static_cast<std::size_t>(i)];
        if (id < 0)
            shallow_area += w[i];
        else
            band_area[id] += w[i];
    }
    for (int k = 0; k <= K; ++k)
        if (!(band_area[k] > 0.0))
            throw ScheduleError("spike_density_family: band " + std::to_string(k) +
                                " received no cells");

    // Mass schedule m_k = C k^{-mass_exponent}. The default exponent keeps
    // the exact coefficient 6V/pi^2 whose full series sums to V; other
    // exponents scale so the truncated sum spends 99% of the mass.
    double C;
    if (params.mass_exponent == 2.0) {
        C = 6.0 * V / (M_PI * M_PI);
    } else {
        double partial = 0.0;
        for (int k = 1; k <= K; ++k) partial += std::pow(k, -params.mass_exponent);
        C = 0.99 * V / partial;
    }
    std::vector<double> mass(K + 1, 0.0);
    double mass_total = 0.0, min_band_value = kInfinity;
    for (int k = 1; k <= K; ++k) {
        mass[k] = C * std::pow(k, -params.mass_exponent);
        mass_total += mass[k];
        min_band_value = std::min(min_band_value, mass[k] / band_area[k]);
    }
    if (!(mass_total < V))
        throw ScheduleError("spike_density_family: band masses exhaust the volume");
    double floor_value = std::min(params.floor_cap, 0.01 * min_band_value);

    // Model profile |u|^{p'}: K+1+eta on the deep core, k+eta on band k,
    // shallow_level on the absorbing zone.
    ArrayXd level(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int id = site_band[static_cast<std::size_t>(i)];
        level[i] = id < 0 ? params.shallow_level
                          : (id == 0 ? K + 1 + params.eta : id + params.eta);
    }

    SequenceExperiment ex;
    ex.name = "spike-density";
    ex.geom = geom;
    ex.stats.columns = {"level",         "witness",        "witness_bound", "consec_l1",
                        "consec_l1_law", "mabuchi_consec", "calabi_consec_q1"};

    ArrayXd f_prev;
    double bound = 0.0;
    std::vector<std::pair<double, double>> trend_pts;
    for (int t = 1; t <= K; ++t) {
        ArrayXd f(n);
        double filled = 0.0, rest_area = 0.0;
        for (int k = 1; k <= t; ++k) filled += mass[k];
        rest_area = band_area[0];
        for (int k = t + 1; k <= K; ++k) rest_area += band_area[k];
        double fill = (V - filled - floor_value * rest_area) / shallow_area;
        if (!(fill > floor_value))
            throw ScheduleError(
                "spike_density_family: mass schedule leaves the absorbing zone below the floor");
        for (Eigen::Index i = 0; i < n; ++i) {
            int id = site_band[static_cast<std::size_t>(i)];
            if (id < 0)
                f[i] = fill;
            else if (id == 0 || id > t)
                f[i] = floor_value;
            else
                f[i] = mass[id] / band_area[id];
        }

        Potential v = calabi_yau_inverse(Density::make(geom, f));
        double witness = geom->measure().integral(level * f);
        bound += t * mass[t];

        double l1 = 0.0, law = 0.0, mab = 0.0, cal = 0.0;
        if (t > 1) {
            l1 = geom->measure().integral((f - f_prev).abs());
            law = 2.0 * mass[t];
            mab = mabuchi_cauchy_stat(ex.sequence.back(), v, p_prime);
            cal = calabi_cauchy_stat(ex.sequence.back(), v, 1.0);
            if (t >= std::max(2, K / 2) && mab > 0.0) trend_pts.emplace_back(t, mab);
        }

        ex.sequence.push_back(std::move(v));
        ex.stats.add_row({static_cast<double>(t), witness, bound, l1, law, mab, cal});
        f_prev = std::move(f);
    }

    double trend = log_log_slope(trend_pts);
    ex.params = {{"backend", backend_name(geom->kind())},
                 {"resolution", std::to_string(N)},
                 {"profile", "mirrored column bands, geometric widths"},
                 {"p_prime", fmt(p_prime)},
                 {"K", std::to_string(K)},
                 {"eta", fmt(params.eta)},
                 {"floor_value", fmt(floor_value)},
                 {"shallow_level", fmt(params.shallow_level)},
                 {"band_fraction", fmt(params.band_fraction)},
                 {"mass_exponent", fmt(params.mass_exponent)},
                 {"mass_scale", fmt(C)},
                 {"band_columns", std::to_string(D)},
                 {"mabuchi_trend_exponent", fmt(trend)}};

    ex.verdicts = spike_density_verdicts(ex.stats);
    return ex;
}

VerdictSet spike_density_verdicts(const StatsTable& stats) {
    std::vector<double> witness_col = stats.column("witness");
    std::vector<double> bound_col = stats.column("witness_bound");
    VerdictSet out;
    double min_step = kInfinity, max_dev = 0.0;
    for (std::size_t t = 0; t < witness_col.size(); ++t) {
        if (t > 0) min_step = std::min(min_step, witness_col[t] - witness_col[t - 1]);
        max_dev = std::max(max_dev, std::abs(witness_col[t] / bound_col[t] - 1.0));
    }
    if (witness_col.size() == 1) min_step = witness_col[0];
    out.add({"witness-monotone", min_step > 0.0, min_step, 0.0,
             "smallest increment of the divergence witness"});
    out.add({"witness-tracks-coefficient-sum", max_dev <= 0.05, max_dev, 0.05,
             "largest relative deviation from sum_{j<=t} j m_j"});

    double law_dev = 0.0;
    for (std::size_t t = 1; t < witness_col.size(); ++t) {
        double l1 = stats.rows[t][stats.column_index("consec_l1")];
        double law = stats.rows[t][stats.column_index("consec_l1_law")];
        law_dev = std::max(law_dev, std::abs(l1 / law - 1.0));
    }
    out.add({"consecutive-l1-tail-law", law_dev <= 0.10, law_dev, 0.10,
             "largest relative deviation of consecutive L1 gaps from 2 m_t"});
    return out;
}

DominationReport q_gt_1_domination_sweep(const std::vector<std::vector<Potential>>& families,
                                         double p, double q, double p_prime,
                                         double calabi_threshold, double mabuchi_threshold,
                                         double sup_threshold) {
    if (!(q > 1.0)) throw PreconditionError("q_gt_1_domination_sweep: requires q > 1");
    if (!(q <= p)) throw InvalidExponentError("q_gt_1_domination_sweep: requires q <= p");
    if (!(p_prime >= 1.0)) throw InvalidExponentError("q_gt_1_domination_sweep: p' must be >= 1");
    if (!(calabi_threshold > 0.0 && mabuchi_threshold > 0.0 && sup_threshold > 0.0))
        throw DomainError("q_gt_1_domination_sweep: thresholds must be positive");

    DominationReport rep;
    rep.p = p;
    rep.q = q;
    rep.p_prime = p_prime;
    rep.calabi_threshold = calabi_threshold;
    rep.mabuchi_threshold = mabuchi_threshold;
    rep.sup_threshold = sup_threshold;
    rep.rows.columns = {"family", "index", "calabi_stat", "mabuchi_stat", "sup_gap"};

    // Per-family work is independent; rows are assembled in index order.
    std::vector<std::vector<std::vector<double>>> chunks(families.size());
    parallel_for(families.size(), env_thread_count(), [&](std::size_t fi) {
        const auto& fam = families[fi];
        for (std::size_t j = 1; j < fam.size(); ++j) {
            double cal = calabi_cauchy_stat(fam[j - 1], fam[j], q);
            double mab = mabuchi_cauchy_stat(fam[j - 1], fam[j], p_prime);
            double sup = (fam[j].values - fam[j - 1].values).abs().maxCoeff();
            chunks[fi].push_back({static_cast<double>(fi), static_cast<double>(j), cal, mab, sup});
        }
    });
    for (auto& ch : chunks)
        for (auto& row : ch) rep.rows.add_row(std::move(row));

    rep.modulus = domination_modulus(rep.rows);
    rep.verdicts =
        domination_verdicts(rep.rows, calabi_threshold, mabuchi_threshold, sup_threshold);
    rep.violations = static_cast<int>(rep.verdicts.items.front().value);
    return rep;
}

StatsTable domination_modulus(const StatsTable& rows) {
    std::size_t c_cal = rows.column_index("calabi_stat");
    std::size_t c_mab = rows.column_index("mabuchi_stat");
    std::vector<std::pair<double, double>> pairs;
    for (const auto& row : rows.rows) pairs.emplace_back(row[c_cal], row[c_mab]);
    std::sort(pairs.begin(), pairs.end());
    StatsTable modulus{{"calabi_stat", "mabuchi_envelope"}, {}};
    double env = 0.0;
    for (const auto& [cal, mab] : pairs) {
        env = std::max(env, mab);
        modulus.add_row({cal, env});
    }
    return modulus;
}

VerdictSet domination_verdicts(const StatsTable& rows, double calabi_threshold,
                               double mabuchi_threshold, double sup_threshold) {
    int violations = 0;
    std::size_t c_cal = rows.column_index("calabi_stat");
    std::size_t c_mab = rows.column_index("mabuchi_stat");
    std::size_t c_sup = rows.column_index("sup_gap");
    for (const auto& row : rows.rows) {
        double cal = row[c_cal], mab = row[c_mab], sup = row[c_sup];
        if (cal < calabi_threshold && (mab >= mabuchi_threshold || sup >= sup_threshold))
            ++violations;
    }
    VerdictSet out;
    out.add({"q-domination-no-violations", violations == 0, static_cast<double>(violations), 0.0,
             "pairs with small Calabi statistic but large sup gap or Mabuchi statistic"});
    return out;
}

EquivalenceSweepReport entropy_equivalence_sweep(const std::vector<TaggedFamily>& families,
                                                 double p, double p_prime,
                                                 double trigger_threshold,
                                                 double vanish_threshold) {
    if (!(trigger_threshold > 0.0 && vanish_threshold > 0.0))
        throw DomainError("entropy_equivalence_sweep: thresholds must be positive");
    for (const auto& fam : families)
        if (fam.seq.empty())
            throw ShapeError("entropy_equivalence_sweep: family '" + fam.name + "' is empty");

    EquivalenceSweepReport rep;
    rep.p = p;
    rep.p_prime = p_prime;
    rep.trigger_threshold = trigger_threshold;
    rep.vanish_threshold = vanish_threshold;
    rep.entries.resize(families.size());

    parallel_for(families.size(), env_thread_count(), [&](std::size_t fi) {
        const TaggedFamily& fam = families[fi];
        EquivalenceSweepEntry& e = rep.entries[fi];
        e.name = fam.name;
        e.entropy_convergent = fam.entropy_convergent;
        e.diag = equivalence_diagnostics(fam.seq, fam.reference, p, p_prime);
        const EquivalenceRow& last = e.diag.rows.back();
        double final_stats[4] = {last.potential_l1, last.weak_proxy, last.mabuchi_stat,
                                 last.calabi_stat};
        e.final_min = *std::min_element(std::begin(final_stats), std::end(final_stats));
        e.final_max = *std::max_element(std::begin(final_stats), std::end(final_stats));
        e.co_vanish = e.final_min >= trigger_threshold || e.final_max < vanish_threshold;
    });

    rep.summary.columns = {"convergent", "final_min", "final_max",
                           "co_vanish", "decoupled", "vanishing"};
    std::vector<std::string> names;
    for (const auto& e : rep.entries) {
        rep.summary.add_row({e.entropy_convergent ? 1.0 : 0.0, e.final_min, e.final_max,
                             e.co_vanish ? 1.0 : 0.0, e.diag.decoupled ? 1.0 : 0.0,
                             static_cast<double>(e.diag.vanishing)});
        names.push_back(e.name);
    }
    rep.verdicts = equivalence_verdicts(rep.summary, names, vanish_threshold);
    for (const auto& e : rep.entries) {
        if (e.entropy_convergent && !(e.co_vanish && !e.diag.decoupled)) ++rep.convergent_failures;
        if (!e.entropy_convergent && e.diag.decoupled) rep.divergent_exhibited = true;
    }
    return rep;
}

VerdictSet equivalence_verdicts(const StatsTable& summary, const std::vector<std::string>& names,
                                double vanish_threshold) {
    if (names.size() != summary.rows.size())
        throw ShapeError("equivalence_verdicts: one name per summary row required");
    VerdictSet out;
    bool any_divergent = false, exhibited = false;
    for (std::size_t i = 0; i < summary.rows.size(); ++i) {
        bool convergent = summary.at(i, "convergent") != 0.0;
        bool co_vanish = summary.at(i, "co_vanish") != 0.0;
        bool decoupled = summary.at(i, "decoupled") != 0.0;
        if (convergent) {
            out.add({"co-vanish:" + names[i], co_vanish && !decoupled,
                     summary.at(i, "final_max"), vanish_threshold,
                     "all four statistics small once any falls below the trigger"});
        } else {
            any_divergent = true;
            if (decoupled) exhibited = true;
            out.add({"decouple:" + names[i], decoupled, summary.at(i, "vanishing"), 0.0,
                     "one statistic decays while another persists"});
        }
    }
    if (any_divergent)
        out.add({"divergence-exhibited", exhibited, exhibited ? 1.0 : 0.0, 1.0,
                 "at least one entropy-divergent family decouples"});
    return out;
}

}  // namespace kfl
