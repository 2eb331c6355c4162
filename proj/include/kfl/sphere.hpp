#pragma once

#include <array>
#include <vector>

#include "kfl/measure.hpp"

namespace kfl {

// Point of the positive octant of the L^{p/q}-sphere: values > 0 with
// (1/mu(X)) sum w_i |f_i|^{p/q} = r^{p/q}.
struct SphereFunction {
    ArrayXd values;
    double exponent_ratio;  // p/q >= 1
    double radius;          // r > 0
};

// Validates octant membership (f_i >= 1e-12 * max f) and the radius
// constraint to 1e-10 relative. Throws OctantViolationError / InconsistencyError.
void check_sphere_function(const SphereFunction& f, const MeasureSpace& mu);

// Sampled curve of atom functions over a strictly increasing parameter grid.
struct DiscreteCurve {
    std::vector<ArrayXd> samples;
    std::vector<double> params;
};

DiscreteCurve make_curve(std::vector<ArrayXd> samples, std::vector<double> params);

// Radial projection r*f/||f||_{p/q} onto the octant sphere.
SphereFunction sphere_project(const ArrayXd& f, double p, double q, double r,
                              const MeasureSpace& mu);

// ||f0 - f1||_p, the flat lower bound for the round path-length metric.
double chord_distance(const SphereFunction& f0, const SphereFunction& f1, double p,
                      const MeasureSpace& mu);

// Projected straight segment t -> r*f_t/||f_t||_{p/q}, f_t = f0 + t(f1-f0),
// sampled at m uniform parameters (m >= 2, endpoints included).
DiscreteCurve normalized_segment_curve(const SphereFunction& f0, const SphereFunction& f1,
                                       double p, double q, double r, const MeasureSpace& mu,
                                       int m);

// Polyline length sum_i ||c_{i+1} - c_i||_p.
double curve_length(const DiscreteCurve& c, double p, const MeasureSpace& mu);

struct ComparisonLine {
    double lhs;
    double rhs;
};

// Chord/round comparison evaluated through the explicit estimate chain:
// each line bounds the length of the projected segment, ending in
// C * (d(f,f0) + d(f,f1) + 1) * ||f1-f0||_p with computable C.
struct SphereComparisonReport {
    double chord;                 // ||f0-f1||_p
    double polyline_length;       // projected-segment polyline length
    double velocity_quadrature;   // midpoint quadrature of ||alpha_dot(t)||_p
    std::array<ComparisonLine, 5> lines;
    double min_segment_norm;      // min over midpoints of ||f_t||_{p/q}
    double r_half;
    double c_prime;               // ||.||_{p/q} <= c_prime ||.||_p on this measure
    double basepoint_d0;          // round-distance upper estimates to the basepoint
    double basepoint_d1;
    double constant;              // explicit C of the final line
    double observed_ratio;        // final rhs / velocity quadrature
    double max_violation;         // most positive relative slack lhs - rhs
    bool all_hold;
    int samples;
};

SphereComparisonReport comparison_bracket_check(const SphereFunction& f,
                                                const SphereFunction& f0,
                                                const SphereFunction& f1, double p, double q,
                                                const MeasureSpace& mu, int samples = 129);

// Pair (||f_j - f||_q, ||f_j^{q/p} - f^{q/p}||_p) per member; the two
// components vanish together exactly when densities converge in L^q.
struct VitaliStat {
    double norm_gap;
    double power_gap;
};

std::vector<VitaliStat> vitali_equivalence_stat(const std::vector<ArrayXd>& fj, const ArrayXd& f,
                                                double p, double q, const MeasureSpace& mu);

// Triangle comparison on the radius-2 L^2 octant sphere against the model
// surface of curvature 1/4. Violation is d(x,y) - d_model(xbar,ybar),
// nonpositive (up to rounding) for every sampled pair.
struct CatCheckReport {
    std::array<double, 3> side_lengths;  // opposite U, V, W
    double perimeter;
    double max_violation;
    int pair_count;
    bool trivial;  // all vertices coincide; comparison holds vacuously
};

CatCheckReport cat_quarter_check(const SphereFunction& U, const SphereFunction& V,
                                 const SphereFunction& W, const MeasureSpace& mu,
                                 int samples_per_side = 50);

}  // namespace kfl
