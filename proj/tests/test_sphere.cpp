#include <doctest.h>

#include <cmath>

#include "kfl/errors.hpp"
#include "kfl/sphere.hpp"
#include "kfl/util.hpp"

using namespace kfl;

namespace {

ArrayXd positive_random(Rng& rng, Eigen::Index n, double lo = 0.2, double hi = 3.0) {
    ArrayXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = rng.uniform(lo, hi);
    return f;
}

}  // namespace

TEST_CASE("sphere_project basics") {
    auto mu = MeasureSpace::uniform(5, 2.0);
    auto g = sphere_project(ArrayXd::Constant(5, 5.0), 2.0, 1.0, 2.0, mu);
    CHECK(g.values.isApproxToConstant(2.0, 1e-14));
    check_sphere_function(g, mu);

    // Idempotence.
    auto g2 = sphere_project(g.values, 2.0, 1.0, 2.0, mu);
    CHECK((g2.values - g.values).abs().maxCoeff() < 1e-14);

    // Hand-computed two-atom normalization: ||(1,3)||_2 = sqrt(5).
    auto nu = MeasureSpace::uniform(2, 1.0);
    ArrayXd f(2);
    f << 1.0, 3.0;
    auto h = sphere_project(f, 2.0, 1.0, 1.0, nu);
    CHECK(h.values[0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK(h.values[1] == doctest::Approx(3.0 / std::sqrt(5.0)).epsilon(1e-14));

    ArrayXd bad(2);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(sphere_project(bad, 2.0, 1.0, 1.0, nu), OctantViolationError);
    CHECK_THROWS_AS(sphere_project(f, 1.0, 2.0, 1.0, nu), InvalidExponentError);
}

TEST_CASE("chord_distance examples") {
    auto mu = MeasureSpace::uniform(2, 1.0);
    ArrayXd a(2), b(2);
    a << 1.0, 3.0;
    b << 3.0, 1.0;
    auto f0 = sphere_project(a, 2.0, 1.0, 2.0, mu);
    auto f1 = sphere_project(b, 2.0, 1.0, 2.0, mu);
    CHECK(chord_distance(f0, f0, 2.0, mu) == 0.0);
    // Swapped coordinates on equal atoms: ||f0-f1||_p = |f0_1 - f0_2|.
    double want = std::abs(f0.values[0] - f0.values[1]);
    CHECK(chord_distance(f0, f1, 2.0, mu) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("normalized_segment_curve shape and octant closure") {
    Rng rng(11);
    auto mu = MeasureSpace::from_weights(positive_random(rng, 12, 0.1, 1.0));
    double p = 3.0, q = 1.5, r = p / q;
    auto f0 = sphere_project(positive_random(rng, 12), p, q, r, mu);
    auto f1 = sphere_project(positive_random(rng, 12), p, q, r, mu);

    auto c = normalized_segment_curve(f0, f1, p, q, r, mu, 9);
    CHECK(c.samples.size() == 9);
    CHECK(c.params.front() == 0.0);
    CHECK(c.params.back() == 1.0);
    for (const auto& s : c.samples) {
        check_sphere_function(SphereFunction{s, p / q, r}, mu);
    }
    CHECK((c.samples.front() - f0.values).abs().maxCoeff() < 1e-12);
    CHECK((c.samples.back() - f1.values).abs().maxCoeff() < 1e-12);

    auto cc = normalized_segment_curve(f0, f0, p, q, r, mu, 5);
    for (const auto& s : cc.samples) CHECK((s - f0.values).abs().maxCoeff() < 1e-13);

    CHECK_THROWS_AS(normalized_segment_curve(f0, f1, p, q, r, mu, 1), ShapeError);
}

TEST_CASE("segment midpoint symmetry on swapped pair") {
    auto mu = MeasureSpace::uniform(2, 1.0);
    ArrayXd a(2), b(2);
    a << 0.5, 2.0;
    b << 2.0, 0.5;
    double p = 2.0, q = 1.0, r = 2.0;
    auto f0 = sphere_project(a, p, q, r, mu);
    auto f1 = sphere_project(b, p, q, r, mu);
    auto c = normalized_segment_curve(f0, f1, p, q, r, mu, 3);
    // Midpoint is the projected average, symmetric in the two atoms.
    CHECK(c.samples[1][0] == doctest::Approx(c.samples[1][1]).epsilon(1e-14));
    ArrayXd avg = 0.5 * (f0.values + f1.values);
    auto proj = sphere_project(avg, p, q, r, mu);
    CHECK((c.samples[1] - proj.values).abs().maxCoeff() < 1e-14);
}

TEST_CASE("curve_length basics and collinear telescoping") {
    Rng rng(3);
    auto mu = MeasureSpace::from_weights(positive_random(rng, 8, 0.3, 1.2));
    ArrayXd a = positive_random(rng, 8), b = positive_random(rng, 8);

    // Two-sample curve gives the chord; constants give zero.
    auto two = make_curve({a, b}, {0.0, 1.0});
    CHECK(curve_length(two, 2.5, mu) == doctest::Approx(lp_distance(a, b, 2.5, mu)).epsilon(1e-14));
    auto flat = make_curve({a, a, a}, {0.0, 0.4, 1.0});
    CHECK(curve_length(flat, 2.0, mu) == 0.0);

    // Straight segments telescope to the chord for any sampling.
    std::vector<ArrayXd> samples;
    std::vector<double> params;
    for (int i = 0; i <= 17; ++i) {
        double t = i / 17.0;
        samples.push_back((1.0 - t) * a + t * b);
        params.push_back(t);
    }
    auto line = make_curve(samples, params);
    for (double p : {1.0, 2.0, 4.0})
        CHECK(curve_length(line, p, mu) ==
              doctest::Approx(lp_distance(a, b, p, mu)).epsilon(1e-12));
}

TEST_CASE("chord below segment length; refinement is second order") {
    Rng rng(99);
    auto mu = MeasureSpace::from_weights(positive_random(rng, 10, 0.2, 1.0));
    double p = 2.0, q = 1.0, r = 2.0;
    for (int rep = 0; rep < 20; ++rep) {
        auto f0 = sphere_project(positive_random(rng, 10), p, q, r, mu);
        auto f1 = sphere_project(positive_random(rng, 10), p, q, r, mu);
        double chord = chord_distance(f0, f1, p, mu);
        double l8 = curve_length(normalized_segment_curve(f0, f1, p, q, r, mu, 9), p, mu);
        double l16 = curve_length(normalized_segment_curve(f0, f1, p, q, r, mu, 17), p, mu);
        double l32 = curve_length(normalized_segment_curve(f0, f1, p, q, r, mu, 33), p, mu);
        double l64 = curve_length(normalized_segment_curve(f0, f1, p, q, r, mu, 65), p, mu);
        CHECK(chord <= l8 + 1e-10);
        CHECK(chord <= l64 + 1e-10);
        // Polyline deficit shrinks ~4x per doubling for smooth data.
        double d1 = l16 - l8, d2 = l32 - l16, d3 = l64 - l32;
        if (d1 > 1e-12) {
            CHECK(d2 < 0.45 * d1);
            CHECK(d3 < 0.45 * d2);
        }
    }
}

TEST_CASE("comparison_bracket_check on trivial and random data") {
    Rng rng(5);
    auto mu = MeasureSpace::from_weights(positive_random(rng, 16, 0.5, 1.5));
    double p = 3.0, q = 1.5, r = p / q;
    auto f = sphere_project(positive_random(rng, 16), p, q, r, mu);
    auto f0 = sphere_project(positive_random(rng, 16), p, q, r, mu);

    auto trivial = comparison_bracket_check(f, f0, f0, p, q, mu, 33);
    CHECK(trivial.chord == 0.0);
    CHECK(trivial.velocity_quadrature == doctest::Approx(0.0));
    CHECK(trivial.all_hold);

    for (int rep = 0; rep < 25; ++rep) {
        auto g0 = sphere_project(positive_random(rng, 16), p, q, r, mu);
        auto g1 = sphere_project(positive_random(rng, 16), p, q, r, mu);
        auto rep_out = comparison_bracket_check(f, g0, g1, p, q, mu, 65);
        CHECK(rep_out.all_hold);
        CHECK(rep_out.max_violation <= 1e-12);
        CHECK(rep_out.min_segment_norm >= rep_out.r_half - 1e-12);
        for (const auto& line : rep_out.lines) CHECK(line.lhs <= line.rhs * (1.0 + 1e-12) + 1e-15);
        // Aggregate bracket: chord below the length surrogate, surrogate
        // below the explicit-constant bound.
        CHECK(rep_out.chord <= rep_out.polyline_length + 1e-10);
        CHECK(rep_out.lines[4].rhs >= rep_out.velocity_quadrature * (1.0 - 1e-12));
    }
}

TEST_CASE("vitali_equivalence_stat examples") {
    auto mu = MeasureSpace::uniform(8, 1.0);
    ArrayXd f = ArrayXd::Constant(8, 1.0);

    auto same = vitali_equivalence_stat({f, f}, f, 2.0, 1.0, mu);
    for (const auto& s : same) {
        CHECK(s.norm_gap == 0.0);
        CHECK(s.power_gap == 0.0);
    }

    // f_j = 1 + 1/j: closed forms 1/j and sqrt(1+1/j)-1, both decreasing.
    std::vector<ArrayXd> fj;
    for (int j = 1; j <= 6; ++j) fj.push_back(ArrayXd::Constant(8, 1.0 + 1.0 / j));
    auto stats = vitali_equivalence_stat(fj, f, 2.0, 1.0, mu);
    for (int j = 1; j <= 6; ++j) {
        CHECK(stats[j - 1].norm_gap == doctest::Approx(1.0 / j).epsilon(1e-13));
        CHECK(stats[j - 1].power_gap ==
              doctest::Approx(std::sqrt(1.0 + 1.0 / j) - 1.0).epsilon(1e-12));
        if (j > 1) {
            CHECK(stats[j - 1].norm_gap < stats[j - 2].norm_gap);
            CHECK(stats[j - 1].power_gap < stats[j - 2].power_gap);
        }
    }

    // Escaping mass: j * indicator of a mass-1/j atom set never co-vanishes.
    Eigen::Index n = 16;
    auto nu = MeasureSpace::uniform(n, 1.0);
    ArrayXd zero = ArrayXd::Zero(n);
    std::vector<ArrayXd> esc;
    for (int j : {1, 2, 4, 8, 16}) {
        ArrayXd g = ArrayXd::Zero(n);
        for (Eigen::Index i = 0; i < n / j; ++i) g[i] = j;
        esc.push_back(g);
    }
    for (double p : {2.0, 3.0}) {
        auto st = vitali_equivalence_stat(esc, zero, p, 1.0, nu);
        for (const auto& s : st) {
            CHECK(s.norm_gap == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(s.power_gap >= 0.99);
        }
    }

    ArrayXd neg = ArrayXd::Constant(8, -1.0);
    CHECK_THROWS_AS(vitali_equivalence_stat({f}, neg, 2.0, 1.0, mu), DomainError);
    CHECK_THROWS_AS(vitali_equivalence_stat({neg}, f, 2.0, 1.0, mu), DomainError);
}

TEST_CASE("cat_quarter_check trivial, thin, random, and degenerate") {
    Rng rng(17);
    auto mu = MeasureSpace::from_weights(positive_random(rng, 24, 0.4, 1.3));
    auto mk = [&](const ArrayXd& f) { return sphere_project(f, 2.0, 1.0, 2.0, mu); };

    auto U = mk(positive_random(rng, 24));
    auto triv = cat_quarter_check(U, U, U, mu, 10);
    CHECK(triv.trivial);
    CHECK(triv.max_violation <= 0.0);

    for (int rep = 0; rep < 10; ++rep) {
        auto A = mk(positive_random(rng, 24));
        auto B = mk(positive_random(rng, 24));
        auto C = mk(positive_random(rng, 24));
        auto out = cat_quarter_check(A, B, C, mu, 20);
        CHECK(out.max_violation < 1e-8);
        CHECK(out.perimeter < 4.0 * M_PI);
        CHECK(out.pair_count > 0);
        // Constant-curvature model: the comparison is an equality up to
        // floating point, so the violation cannot be far below zero either.
        CHECK(out.max_violation > -1e-8);
    }

    // Thin triangle.
    ArrayXd base = positive_random(rng, 24);
    ArrayXd dir = positive_random(rng, 24);
    auto A = mk(base);
    auto B = mk(base + 0.01 * dir);
    auto C = mk(base + 0.005 * dir + 0.0003 * positive_random(rng, 24));
    auto thin = cat_quarter_check(A, B, C, mu, 12);
    CHECK(thin.max_violation < 1e-8);

    // Rank-deficient but non-coincident span.
    auto D = mk(2.0 * base);  // same point after projection
    CHECK_THROWS_AS(cat_quarter_check(A, D, B, mu, 10), RankError);

    auto wrong = SphereFunction{A.values, 3.0, 2.0};
    CHECK_THROWS_AS(cat_quarter_check(wrong, B, C, mu, 10), InconsistencyError);
}
