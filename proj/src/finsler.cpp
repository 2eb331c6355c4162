#include "kfl/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "kfl/errors.hpp"

namespace kfl {

namespace {

void check_calabi_exponents(double p, double q, const char* what) {
    if (!(q >= 1.0) || !(p >= q) || !std::isfinite(p))
        throw InvalidExponentError(std::string(what) + ": need 1 <= q <= p < infinity");
}

double finite_or_throw(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite result");
    return v;
}

// x log x extended by 0 at x = 0; negative x rejected by callers.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

PotentialCurve make_potential_curve(std::vector<Potential> samples, std::vector<double> params) {
    if (samples.size() < 2) throw ShapeError("potential curve needs at least 2 samples");
    if (samples.size() != params.size())
        throw ShapeError("potential curve: samples/params length mismatch");
    for (std::size_t i = 1; i < samples.size(); ++i) {
        require_compatible(samples[0].geom, samples[i].geom, "potential curve");
        if (!(params[i] > params[i - 1]))
            throw ShapeError("potential curve: parameters must increase strictly");
    }
    return PotentialCurve{std::move(samples), std::move(params)};
}

double calabi_norm(const Potential& u, const ArrayXd& beta, double p, double q) {
    check_calabi_exponents(p, q, "calabi_norm");
    const MeasureSpace& mu = u.geom->measure();
    mu.check_shape(beta, "calabi_norm");
    ArrayXd rho = density(u).values;
    ArrayXd wl = u.geom->laplace(beta) / rho;
    double avg = mu.average(wl.abs().pow(p) * rho.pow(q));
    return finite_or_throw(std::pow(avg, 1.0 / p), "calabi_norm");
}

double mabuchi_norm(const Potential& u, const ArrayXd& phi, double p) {
    if (!(p >= 1.0)) throw InvalidExponentError("mabuchi_norm: need p >= 1");
    const MeasureSpace& mu = u.geom->measure();
    mu.check_shape(phi, "mabuchi_norm");
    ArrayXd rho = density(u).values;
    MeasureSpace mu_u = MeasureSpace::from_weights(mu.weights() * rho);
    ArrayXd centered = phi - mu_u.average(phi);
    return lp_norm(centered, p, mu_u);
}

SphereFunction embed_on_sphere(const Potential& u, double p, double q) {
    check_calabi_exponents(p, q, "embed_on_sphere");
    double s = p / q;
    ArrayXd rho = density(u).values;
    return SphereFunction{s * rho.pow(1.0 / s), s, s};
}

namespace {

template <typename Speed>
double midpoint_length(const PotentialCurve& c, Speed&& speed) {
    double total = 0.0;
    for (std::size_t i = 1; i < c.samples.size(); ++i) {
        const ArrayXd& a = c.samples[i - 1].values;
        const ArrayXd& b = c.samples[i].values;
        Potential mid = Potential::make(c.samples[0].geom, 0.5 * (a + b));
        // dt * ||(b - a)/dt|| = ||b - a|| by homogeneity of the norm.
        total += speed(mid, ArrayXd(b - a));
    }
    return total;
}

}  // namespace

double calabi_length(const PotentialCurve& c, double p, double q) {
    check_calabi_exponents(p, q, "calabi_length");
    return midpoint_length(
        c, [&](const Potential& mid, const ArrayXd& v) { return calabi_norm(mid, v, p, q); });
}

double mabuchi_length(const PotentialCurve& c, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw InvalidExponentError("mabuchi_length: need 1 <= p < infinity");
    return midpoint_length(
        c, [&](const Potential& mid, const ArrayXd& v) { return mabuchi_norm(mid, v, p); });
}

DistanceBracket calabi_distance_bracket(const Potential& u0, const Potential& u1, double p,
                                        double q, int m) {
    check_calabi_exponents(p, q, "calabi_distance_bracket");
    require_compatible(u0.geom, u1.geom, "calabi_distance_bracket");
    const MeasureSpace& mu = u0.geom->measure();
    SphereFunction f0 = embed_on_sphere(u0, p, q);
    SphereFunction f1 = embed_on_sphere(u1, p, q);
    double lower = chord_distance(f0, f1, p, mu);
    DiscreteCurve seg = normalized_segment_curve(f0, f1, p, q, p / q, mu, m);
    double upper = curve_length(seg, p, mu);
    // The polyline inscribes the projected segment; rounding aside, the true
    // arc length dominates it, so pair the chord with a tiny slack guard.
    if (upper < lower) upper = lower;
    return DistanceBracket{lower, upper};
}

double calabi_distance_round_21(const Potential& u0, const Potential& u1) {
    require_compatible(u0.geom, u1.geom, "calabi_distance_round_21");
    const MeasureSpace& mu = u0.geom->measure();
    // Unit representatives of the embedded endpoints; the angle formula
    // 2*atan2(||a-b||, ||a+b||) stays accurate for nearby endpoints where
    // arccos of the correlation loses half the digits.
    ArrayXd a = density(u0).values.sqrt();
    ArrayXd b = density(u1).values.sqrt();
    a /= lp_norm(a, 2.0, mu);
    b /= lp_norm(b, 2.0, mu);
    double angle =
        2.0 * std::atan2(lp_norm(a - b, 2.0, mu), lp_norm(ArrayXd(a + b), 2.0, mu));
    return 2.0 * angle;
}

double calabi_cauchy_stat(const Potential& uj, const Potential& uk, double q) {
    if (!(q >= 1.0) || !std::isfinite(q))
        throw InvalidExponentError("calabi_cauchy_stat: need 1 <= q < infinity");
    require_compatible(uj.geom, uk.geom, "calabi_cauchy_stat");
    ArrayXd gap = (density(uj).values - density(uk).values).abs();
    return uj.geom->measure().integral(gap.pow(q));
}

double mabuchi_cauchy_stat(const Potential& uj, const Potential& uk, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw InvalidExponentError("mabuchi_cauchy_stat: need 1 <= p < infinity");
    require_compatible(uj.geom, uk.geom, "mabuchi_cauchy_stat");
    ArrayXd gap = (uj.values - uk.values).abs().pow(p);
    ArrayXd both = density(uj).values + density(uk).values;
    return uj.geom->measure().integral(gap * both);
}

double entropy_of_density(const ArrayXd& rho, const MeasureSpace& mu) {
    mu.check_shape(rho, "entropy");
    if ((rho < 0.0).any()) throw DomainError("entropy: density must be nonnegative");
    ArrayXd integrand = rho.unaryExpr([](double x) { return xlogx(x); });
    return finite_or_throw(mu.integral(integrand), "entropy");
}

double entropy(const Potential& u) {
    return entropy_of_density(density(u).values, u.geom->measure());
}

PinskerReport pinsker_gap(const ArrayXd& f, const ArrayXd& g, const MeasureSpace& mu) {
    mu.check_shape(f, "pinsker_gap");
    mu.check_shape(g, "pinsker_gap");
    if ((f < 0.0).any()) throw DomainError("pinsker_gap: first density must be nonnegative");
    if (!(g > 0.0).all()) throw DomainError("pinsker_gap: second density must be positive");
    double mf = mu.integral(f);
    double mg = mu.integral(g);
    if (std::abs(mf - mg) > 1e-8 * std::max(1.0, std::max(mf, mg)))
        throw InconsistencyError("pinsker_gap: densities carry different total mass");
    double tv = mu.integral((f - g).abs());
    ArrayXd rel(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i)
        rel[i] = f[i] > 0.0 ? f[i] * std::log(f[i] / g[i]) : 0.0;
    double kl = finite_or_throw(mu.integral(rel), "pinsker_gap");
    double kappa = 2.0 * mu.total();
    PinskerReport rep;
    rep.lhs = tv * tv;
    rep.rhs = kl;
    rep.kappa = kappa;
    rep.holds = rep.lhs <= kappa * kl * (1.0 + 1e-12) + 1e-12;
    return rep;
}

PinskerReport pinsker_gap(const Density& f, const Density& g) {
    require_compatible(f.geom, g.geom, "pinsker_gap");
    return pinsker_gap(f.values, g.values, f.geom->measure());
}

ArrayXd smoothing_sequence(const ArrayXd& f, int k, const GeometryPtr& geom) {
    if (k < 0) throw DomainError("smoothing_sequence: level must be nonnegative");
    const MeasureSpace& mu = geom->measure();
    mu.check_shape(f, "smoothing_sequence");
    if ((f < 0.0).any()) throw DomainError("smoothing_sequence: density must be nonnegative");
    double lo = std::ldexp(1.0, -k);
    double hi = std::ldexp(1.0, k);
    ArrayXd clamped = f.max(lo).min(hi);
    // Implicit heat step: (I - tau L) preserves mass (w^T L = 0) and its
    // inverse is positivity-preserving (M-matrix), so the output is an
    // admissible density for the clamped mass.
    double tau = std::pow(4.0, -k);
    Eigen::SparseMatrix<double> sys = geom->laplace_matrix();
    sys *= -tau;
    for (Eigen::Index i = 0; i < sys.rows(); ++i) sys.coeffRef(i, i) += 1.0;
    sys.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(sys);
    if (solver.info() != Eigen::Success)
        throw NumericError("smoothing_sequence: mollifier factorization failed");
    ArrayXd out = solver.solve(clamped.matrix()).array();
    if (!out.isFinite().all()) throw NumericError("smoothing_sequence: mollifier solve failed");
    return out.max(0.5 * lo);
}

std::pair<double, double> smoothing_stats(const ArrayXd& f, const ArrayXd& g,
                                          const MeasureSpace& mu) {
    mu.check_shape(f, "smoothing_stats");
    mu.check_shape(g, "smoothing_stats");
    if ((f < 0.0).any()) throw DomainError("smoothing_stats: density must be nonnegative");
    if (!(g > 0.0).all()) throw DomainError("smoothing_stats: smoothed density must be positive");
    double l1 = mu.integral((f - g).abs());
    ArrayXd rel(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i)
        rel[i] = f[i] > 0.0 ? f[i] * (std::log(f[i]) - std::log(g[i])) : 0.0;
    double ent = finite_or_throw(mu.integral(rel), "smoothing_stats");
    return {l1, ent};
}

std::vector<ArrayXd> test_dictionary(const GeometryPtr& geom) {
    constexpr int kCount = 32;
    std::vector<ArrayXd> dict;
    dict.reserve(kCount);
    if (geom->kind() == BackendKind::FlatTorus) {
        const ArrayXd& x = geom->x();
        const ArrayXd& y = geom->y();
        constexpr double kTwoPi = 6.283185307179586476925286766559;
        for (int kx = 0; kx <= 3 && static_cast<int>(dict.size()) < kCount; ++kx) {
            for (int ky = 0; ky <= 3 && static_cast<int>(dict.size()) < kCount; ++ky) {
                ArrayXd cx = (kTwoPi * kx * x).cos(), sx = (kTwoPi * kx * x).sin();
                ArrayXd cy = (kTwoPi * ky * y).cos(), sy = (kTwoPi * ky * y).sin();
                if (kx + ky > 0) dict.push_back(cx * cy);
                if (kx > 0 && static_cast<int>(dict.size()) < kCount) dict.push_back(sx * cy);
                if (ky > 0 && static_cast<int>(dict.size()) < kCount) dict.push_back(cx * sy);
                if (kx > 0 && ky > 0 && static_cast<int>(dict.size()) < kCount)
                    dict.push_back(sx * sy);
            }
        }
    } else {
        ArrayXd c = geom->theta().cos();
        for (int l = 1; l <= kCount; ++l) {
            ArrayXd leg = c.unaryExpr([l](double t) { return std::legendre(unsigned(l), t); });
            dict.push_back(std::move(leg));
        }
    }
    for (ArrayXd& phi : dict) phi /= phi.abs().maxCoeff();
    return dict;
}

EquivalenceDiagnostics equivalence_diagnostics(const std::vector<Potential>& seq,
                                               const Potential& u, double p, double p_prime) {
    if (seq.empty()) throw ShapeError("equivalence_diagnostics: empty sequence");
    if (!(p >= 1.0) || !std::isfinite(p) || !(p_prime >= 1.0) || !std::isfinite(p_prime))
        throw InvalidExponentError("equivalence_diagnostics: need finite exponents >= 1");
    const MeasureSpace& mu = u.geom->measure();
    std::vector<ArrayXd> dict = test_dictionary(u.geom);
    ArrayXd rho_ref = density(u).values;
    double ent_ref = entropy(u);

    EquivalenceDiagnostics diag;
    diag.p = p;
    diag.p_prime = p_prime;
    diag.rows.reserve(seq.size());
    for (const Potential& uj : seq) {
        require_compatible(uj.geom, u.geom, "equivalence_diagnostics");
        EquivalenceRow row;
        row.potential_l1 = mu.integral((uj.values - u.values).abs());
        ArrayXd drho = density(uj).values - rho_ref;
        double weak = 0.0;
        for (const ArrayXd& phi : dict) weak = std::max(weak, std::abs(mu.integral(drho * phi)));
        row.weak_proxy = weak;
        row.mabuchi_stat = mabuchi_cauchy_stat(uj, u, p);
        row.calabi_stat = calabi_cauchy_stat(uj, u, p_prime);
        row.entropy_gap = std::abs(entropy(uj) - ent_ref);
        diag.rows.push_back(row);
    }

    std::tie(diag.decoupled, diag.vanishing) = detect_decoupling(diag.rows);
    return diag;
}

std::pair<bool, int> detect_decoupling(const std::vector<EquivalenceRow>& rows) {
    if (rows.empty()) return {false, 0};
    double max_m = 0.0, max_c = 0.0;
    for (const EquivalenceRow& r : rows) {
        max_m = std::max(max_m, r.mabuchi_stat);
        max_c = std::max(max_c, r.calabi_stat);
    }
    if (!(max_m > 1e-14) || !(max_c > 1e-14)) return {false, 0};
    const EquivalenceRow& tail = rows.back();
    if (tail.mabuchi_stat < 0.05 * max_m && tail.calabi_stat > 0.25 * max_c) return {true, 3};
    if (tail.calabi_stat < 0.05 * max_c && tail.mabuchi_stat > 0.25 * max_m) return {true, 4};
    return {false, 0};
}

}  // namespace kfl
