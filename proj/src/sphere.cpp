#include "kfl/sphere.hpp"

#include <algorithm>
#include <cmath>

#include "kfl/errors.hpp"

namespace kfl {

namespace {

void check_octant(const ArrayXd& f, const char* what) {
    double top = f.abs().maxCoeff();
    if (!(top > 0.0) || (f < 1e-12 * top).any())
        throw OctantViolationError(std::string(what) + ": values must be strictly positive");
}

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

}  // namespace

void check_sphere_function(const SphereFunction& f, const MeasureSpace& mu) {
    mu.check_shape(f.values, "sphere function");
    if (!(f.exponent_ratio >= 1.0))
        throw InvalidExponentError("sphere function: exponent ratio p/q must be >= 1");
    if (!(f.radius > 0.0)) throw DomainError("sphere function: radius must be positive");
    check_octant(f.values, "sphere function");
    double nrm = lp_norm(f.values, f.exponent_ratio, mu);
    if (std::abs(nrm - f.radius) > 1e-10 * f.radius)
        throw InconsistencyError("sphere function: norm " + std::to_string(nrm) +
                                 " differs from radius " + std::to_string(f.radius));
}

DiscreteCurve make_curve(std::vector<ArrayXd> samples, std::vector<double> params) {
    if (samples.size() < 2) throw ShapeError("curve needs at least 2 samples");
    if (samples.size() != params.size()) throw ShapeError("curve: samples/params length mismatch");
    Eigen::Index n = samples.front().size();
    for (const auto& s : samples)
        if (s.size() != n) throw ShapeError("curve: inconsistent sample sizes");
    for (std::size_t i = 1; i < params.size(); ++i)
        if (!(params[i] > params[i - 1])) throw ShapeError("curve: parameters must increase strictly");
    return DiscreteCurve{std::move(samples), std::move(params)};
}

SphereFunction sphere_project(const ArrayXd& f, double p, double q, double r,
                              const MeasureSpace& mu) {
    mu.check_shape(f, "sphere_project");
    if (!(q >= 1.0) || !(p >= q)) throw InvalidExponentError("sphere_project: need 1 <= q <= p");
    if (!(r > 0.0)) throw DomainError("sphere_project: radius must be positive");
    check_octant(f, "sphere_project");
    double s = p / q;
    double nrm = lp_norm(f, s, mu);
    return SphereFunction{r / nrm * f, s, r};
}

double chord_distance(const SphereFunction& f0, const SphereFunction& f1, double p,
                      const MeasureSpace& mu) {
    return lp_distance(f0.values, f1.values, p, mu);
}

DiscreteCurve normalized_segment_curve(const SphereFunction& f0, const SphereFunction& f1,
                                       double p, double q, double r, const MeasureSpace& mu,
                                       int m) {
    if (m < 2) throw ShapeError("normalized_segment_curve: need at least 2 samples");
    std::vector<ArrayXd> samples;
    std::vector<double> params;
    samples.reserve(m);
    params.reserve(m);
    for (int i = 0; i < m; ++i) {
        double t = static_cast<double>(i) / (m - 1);
        ArrayXd ft = (1.0 - t) * f0.values + t * f1.values;
        samples.push_back(sphere_project(ft, p, q, r, mu).values);
        params.push_back(t);
    }
    return make_curve(std::move(samples), std::move(params));
}

double curve_length(const DiscreteCurve& c, double p, const MeasureSpace& mu) {
    double len = 0.0;
    for (std::size_t i = 1; i < c.samples.size(); ++i)
        len += lp_distance(c.samples[i], c.samples[i - 1], p, mu);
    return len;
}

SphereComparisonReport comparison_bracket_check(const SphereFunction& f,
                                                const SphereFunction& f0,
                                                const SphereFunction& f1, double p, double q,
                                                const MeasureSpace& mu, int samples) {
    if (!(q >= 1.0) || !(p >= q))
        throw InvalidExponentError("comparison_bracket_check: need 1 <= q <= p");
    check_sphere_function(f, mu);
    check_sphere_function(f0, mu);
    check_sphere_function(f1, mu);
    double r = f.radius;
    if (std::abs(f0.radius - r) > 1e-10 * r || std::abs(f1.radius - r) > 1e-10 * r)
        throw InconsistencyError("comparison_bracket_check: spheres of different radius");
    if (samples < 2) throw ShapeError("comparison_bracket_check: need at least 2 samples");

    double s = p / q;
    ArrayXd delta = f1.values - f0.values;
    double chord = lp_norm(delta, p, mu);
    double delta_p = chord;
    double delta_s = lp_norm(delta, s, mu);
    double f_p = lp_norm(f.values, p, mu);

    // Round-distance upper estimates to the basepoint via projected segments.
    double d0 = curve_length(normalized_segment_curve(f, f0, p, q, r, mu, samples), p, mu);
    double d1 = curve_length(normalized_segment_curve(f, f1, p, q, r, mu, samples), p, mu);
    double df0_p = lp_distance(f.values, f0.values, p, mu);
    double df1_p = lp_distance(f.values, f1.values, p, mu);

    double polyline = curve_length(normalized_segment_curve(f0, f1, p, q, r, mu, samples), p, mu);

    const double c_prime = 1.0;  // ||.||_{p/q} <= ||.||_p under the normalized measure
    SphereComparisonReport rep{};
    rep.chord = chord;
    rep.polyline_length = polyline;
    rep.r_half = 0.5 * r;
    rep.c_prime = c_prime;
    rep.basepoint_d0 = d0;
    rep.basepoint_d1 = d1;
    rep.samples = samples;
    rep.min_segment_norm = std::numeric_limits<double>::infinity();
    rep.max_violation = 0.0;

    // Midpoint quadrature over [0,1]; every chained bound below holds
    // pointwise at each node, so the aggregated sums inherit the ordering.
    int cells = samples - 1;
    double dt = 1.0 / cells;
    double agg[5] = {0, 0, 0, 0, 0};
    for (int k = 0; k < cells; ++k) {
        double t = (k + 0.5) * dt;
        ArrayXd ft = (1.0 - t) * f0.values + t * f1.values;
        double ft_s = lp_norm(ft, s, mu);
        double ft_p = lp_norm(ft, p, mu);
        rep.min_segment_norm = std::min(rep.min_segment_norm, ft_s);

        // alpha_t = r f_t / ||f_t||_s, differentiated in t.
        double proj = mu.average(delta * ft.pow(s - 1.0));
        ArrayXd alpha_dot =
            r / ft_s * delta - (r * proj / std::pow(ft_s, s + 1.0)) * ft;
        double v0 = lp_norm(alpha_dot, p, mu);
        double v1 = r * delta_p / ft_s +
                    r * ft_p / std::pow(ft_s, s + 1.0) * mu.average(delta.abs() * ft.pow(s - 1.0));
        double v2 = r * delta_p / ft_s + r * delta_s * ft_p / (ft_s * ft_s);
        double v3 = r * delta_p / ft_s + c_prime * r * delta_p * ft_p / (ft_s * ft_s);
        double v4 = r * delta_p / ft_s +
                    c_prime * r * delta_p * ((1.0 - t) * df0_p + t * df1_p + f_p) / (ft_s * ft_s);
        double scale = std::max(1.0, v4);
        rep.max_violation = std::max({rep.max_violation, (v0 - v1) / scale, (v1 - v2) / scale,
                                      (v2 - v3) / scale, (v3 - v4) / scale});
        agg[0] += v0 * dt;
        agg[1] += v1 * dt;
        agg[2] += v2 * dt;
        agg[3] += v3 * dt;
        agg[4] += v4 * dt;
    }
    rep.velocity_quadrature = agg[0];
    double constant = std::max(2.0 * c_prime / r, 2.0 + 4.0 * c_prime * f_p / r);
    rep.constant = constant;
    double final_rhs = constant * (d0 + d1 + 1.0) * delta_p;
    for (int i = 0; i < 4; ++i) rep.lines[i] = ComparisonLine{agg[i], agg[i + 1]};
    rep.lines[4] = ComparisonLine{agg[4], final_rhs};
    double scale5 = std::max(1.0, final_rhs);
    rep.max_violation = std::max(rep.max_violation, (agg[4] - final_rhs) / scale5);
    // Right inequality of the bracket: chord below the round length estimate.
    rep.max_violation =
        std::max(rep.max_violation, (chord - polyline) / std::max(1.0, polyline));
    rep.max_violation =
        std::max(rep.max_violation, (0.5 * r - rep.min_segment_norm) / std::max(1.0, 0.5 * r));
    rep.observed_ratio = final_rhs / std::max(rep.velocity_quadrature, 1e-300);
    rep.all_hold = rep.max_violation <= 1e-12;
    return rep;
}

std::vector<VitaliStat> vitali_equivalence_stat(const std::vector<ArrayXd>& fj, const ArrayXd& f,
                                                double p, double q, const MeasureSpace& mu) {
    if (!(q >= 1.0) || !(p >= q))
        throw InvalidExponentError("vitali_equivalence_stat: need 1 <= q <= p");
    mu.check_shape(f, "vitali_equivalence_stat");
    if ((f < 0.0).any()) throw DomainError("vitali_equivalence_stat: reference must be >= 0");
    double theta = q / p;
    ArrayXd f_pow = f.pow(theta);
    std::vector<VitaliStat> out;
    out.reserve(fj.size());
    for (const auto& g : fj) {
        mu.check_shape(g, "vitali_equivalence_stat");
        if ((g < 0.0).any()) throw DomainError("vitali_equivalence_stat: members must be >= 0");
        out.push_back(VitaliStat{lp_distance(g, f, q, mu), lp_norm(g.pow(theta) - f_pow, p, mu)});
    }
    return out;
}

namespace {

// Geodesic distance between points of the radius-ra sphere given in
// orthonormal coordinates. The half-angle atan2 form stays well conditioned
// for nearby and for nearly antipodal points, unlike acos of the dot product.
double sphere_arc(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double ra) {
    return ra * 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

// Point at arc-length fraction tau along the minor geodesic from a to b;
// radius-free since the interpolant is scale equivariant.
Eigen::Vector3d slerp(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tau) {
    double ang = 2.0 * std::atan2((a - b).norm(), (a + b).norm());
    if (ang < 1e-14) return a;
    double s = std::sin(ang);
    return (std::sin((1.0 - tau) * ang) / s) * a + (std::sin(tau * ang) / s) * b;
}

}  // namespace

CatCheckReport cat_quarter_check(const SphereFunction& U, const SphereFunction& V,
                                 const SphereFunction& W, const MeasureSpace& mu,
                                 int samples_per_side) {
    for (const SphereFunction* g : {&U, &V, &W}) {
        check_sphere_function(*g, mu);
        if (std::abs(g->exponent_ratio - 2.0) > 1e-12 || std::abs(g->radius - 2.0) > 1e-12)
            throw InconsistencyError("cat_quarter_check: needs the radius-2 L^2 sphere");
    }
    if (samples_per_side < 2) throw ShapeError("cat_quarter_check: need >= 2 samples per side");
    const double r = 2.0;

    CatCheckReport rep{};
    double sepUV = lp_distance(U.values, V.values, 2.0, mu);
    double sepUW = lp_distance(U.values, W.values, 2.0, mu);
    double sepVW = lp_distance(V.values, W.values, 2.0, mu);
    if (std::max({sepUV, sepUW, sepVW}) <= 1e-12 * r) {
        rep.trivial = true;
        rep.pair_count = 0;
        return rep;
    }

    // Orthonormal basis of span{U,V,W} by modified Gram-Schmidt with norm
    // pivoting; coordinates then realize the normalized L^2 inner product.
    std::vector<ArrayXd> cand = {U.values, V.values, W.values};
    std::vector<ArrayXd> basis;
    std::vector<bool> used(3, false);
    double top_norm = 0.0;
    for (const auto& c : cand) top_norm = std::max(top_norm, lp_norm(c, 2.0, mu));
    for (int step = 0; step < 3; ++step) {
        int pick = -1;
        double best = 0.0;
        std::vector<ArrayXd> residuals(3);
        for (int i = 0; i < 3; ++i) {
            if (used[i]) continue;
            ArrayXd res = cand[i];
            for (const auto& e : basis) res -= mu.average(res * e) * e;
            double n = lp_norm(res, 2.0, mu);
            residuals[i] = std::move(res);
            if (n > best) {
                best = n;
                pick = i;
            }
        }
        if (pick < 0 || best <= 1e-10 * top_norm) break;
        basis.push_back(residuals[pick] / best);
        used[pick] = true;
    }
    if (basis.size() < 3) throw RankError("cat_quarter_check: vertices span a degenerate subspace");

    auto coords = [&](const ArrayXd& g) {
        Eigen::Vector3d x;
        for (int j = 0; j < 3; ++j) x[j] = mu.average(g * basis[j]);
        return x;
    };
    std::array<Eigen::Vector3d, 3> P = {coords(U.values), coords(V.values), coords(W.values)};

    // Side k joins P[(k+1)%3] and P[(k+2)%3] (opposite vertex k).
    std::array<double, 3> len;
    for (int k = 0; k < 3; ++k) len[k] = sphere_arc(P[(k + 1) % 3], P[(k + 2) % 3], r);
    rep.side_lengths = len;
    rep.perimeter = len[0] + len[1] + len[2];
    if (rep.perimeter >= 2.0 * M_PI * r)
        throw NotComparableError("cat_quarter_check: perimeter reaches the model diameter bound");

    // Model triangle with the same side lengths on the radius-2 round sphere.
    std::array<double, 3> ang = {len[0] / r, len[1] / r, len[2] / r};
    auto model_vertex = [&](int k) -> Eigen::Vector3d {
        if (k == 0) return {0.0, 0.0, r};
        if (k == 1) return {r * std::sin(ang[2]), 0.0, r * std::cos(ang[2])};
        // Spherical law of cosines for the angle at the first vertex.
        double sb = std::sin(ang[1]), sc = std::sin(ang[2]);
        double alpha = 0.0;
        if (sb * sc > 1e-300)
            alpha = std::acos(
                clamp_unit((std::cos(ang[0]) - std::cos(ang[1]) * std::cos(ang[2])) / (sb * sc)));
        return {r * std::sin(ang[1]) * std::cos(alpha), r * std::sin(ang[1]) * std::sin(alpha),
                r * std::cos(ang[1])};
    };
    std::array<Eigen::Vector3d, 3> M = {model_vertex(0), model_vertex(1), model_vertex(2)};
    for (int k = 0; k < 3; ++k) {
        double got = sphere_arc(M[(k + 1) % 3], M[(k + 2) % 3], r);
        if (std::abs(got - len[k]) > 1e-8 * (1.0 + len[k]))
            throw NotComparableError("cat_quarter_check: side lengths violate the triangle inequality");
    }

    // Sample both triangles side by side at equal arc fractions.
    int n = samples_per_side;
    std::vector<Eigen::Vector3d> pts, mpts;
    pts.reserve(3 * n);
    mpts.reserve(3 * n);
    for (int k = 0; k < 3; ++k) {
        const auto &a = P[(k + 1) % 3], &b = P[(k + 2) % 3];
        const auto &ma = M[(k + 1) % 3], &mb = M[(k + 2) % 3];
        for (int j = 0; j < n; ++j) {
            double tau = static_cast<double>(j) / (n - 1);
            pts.push_back(slerp(a, b, tau));
            mpts.push_back(slerp(ma, mb, tau));
        }
    }
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d = sphere_arc(pts[i], pts[j], r);
            double dm = sphere_arc(mpts[i], mpts[j], r);
            rep.max_violation = std::max(rep.max_violation, d - dm);
            ++rep.pair_count;
        }
    return rep;
}

}  // namespace kfl
