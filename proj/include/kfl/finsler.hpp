#pragma once

#include <utility>
#include <vector>

#include "kfl/geometry.hpp"
#include "kfl/sphere.hpp"

namespace kfl {

// Sampled path of admissible potentials over one geometry.
struct PotentialCurve {
    std::vector<Potential> samples;
    std::vector<double> params;
};

PotentialCurve make_potential_curve(std::vector<Potential> samples, std::vector<double> params);

// Calabi-type tangent norm ((1/V) int |Delta_{omega_u} beta|^p rho_u^q omega)^{1/p}.
// Requires 1 <= q <= p < infinity.
double calabi_norm(const Potential& u, const ArrayXd& beta, double p, double q);

// Mabuchi-type tangent norm of the omega_u-mean-centered phi in L^p(omega_u^n),
// volume normalized. p may be infinite (sup norm).
double mabuchi_norm(const Potential& u, const ArrayXd& phi, double p);

// Density-power embedding (p/q) rho_u^{q/p}; lands exactly on the radius-p/q
// octant sphere over the background quadrature by mass conservation.
SphereFunction embed_on_sphere(const Potential& u, double p, double q);

// Midpoint-rule Finsler lengths of a sampled curve.
double calabi_length(const PotentialCurve& c, double p, double q);
double mabuchi_length(const PotentialCurve& c, double p);

struct DistanceBracket {
    double lower;  // chord between embedded endpoints
    double upper;  // projected-segment polyline length at m samples
};

DistanceBracket calabi_distance_bracket(const Potential& u0, const Potential& u1, double p,
                                        double q, int m = 257);

// Exact great-circle distance for p=2, q=1: the embedded images span a
// 2-plane and the distance is 2*arccos((1/V) int sqrt(rho_0 rho_1) omega).
double calabi_distance_round_21(const Potential& u0, const Potential& u1);

// Cauchy statistics, unnormalized integrals:
//   calabi:  int |rho_j - rho_k|^q omega^n              (p plays no role)
//   mabuchi: int |u_j - u_k|^p (omega_{u_j}^n + omega_{u_k}^n)
double calabi_cauchy_stat(const Potential& uj, const Potential& uk, double q);
double mabuchi_cauchy_stat(const Potential& uj, const Potential& uk, double p);

// Relative entropy int rho log rho omega^n; nonnegative for unit-mean rho.
double entropy(const Potential& u);
double entropy_of_density(const ArrayXd& rho, const MeasureSpace& mu);

// Total-variation-vs-entropy gap. kappa = 2V is the classical constant for
// the volume-normalized setting, calibrated against the two-cell closed form
// (see tests) and frozen here.
struct PinskerReport {
    double lhs;    // (int |f-g| omega)^2
    double rhs;    // int f log(f/g) omega
    double kappa;  // 2V
    bool holds;    // lhs <= kappa * rhs (+ rounding slack)
};

PinskerReport pinsker_gap(const ArrayXd& f, const ArrayXd& g, const MeasureSpace& mu);
PinskerReport pinsker_gap(const Density& f, const Density& g);

// Clamp f to [2^-k, 2^k], then one implicit-heat mollification step whose
// amplitude shrinks with k. Positive output; preserves int f of the clamp.
ArrayXd smoothing_sequence(const ArrayXd& f, int k, const GeometryPtr& geom);

// (int |f - g| omega, int f (log f - log g) omega), the two Lemma-style
// smoothing statistics; f may vanish (f log f := 0 there), g must be > 0.
std::pair<double, double> smoothing_stats(const ArrayXd& f, const ArrayXd& g,
                                          const MeasureSpace& mu);

// Fixed dictionary of 32 sup-normalized low-mode test functions used as the
// weak-convergence proxy (Fourier products on the torus, zonal Legendre on P1).
std::vector<ArrayXd> test_dictionary(const GeometryPtr& geom);

// Convergence diagnostics toward a reference potential:
//   potential_l1  = int |u_j - u| omega
//   weak_proxy    = max over dictionary of |int (rho_j - rho) phi omega|
//   mabuchi_stat  = mabuchi_cauchy_stat(u_j, u, p')
//   calabi_stat   = calabi_cauchy_stat(u_j, u, 1)
//   entropy_gap   = |entropy(u_j) - entropy(u)|
struct EquivalenceRow {
    double potential_l1;
    double weak_proxy;
    double mabuchi_stat;
    double calabi_stat;
    double entropy_gap;
};

struct EquivalenceDiagnostics {
    std::vector<EquivalenceRow> rows;
    double p;
    double p_prime;
    // Scale-free decoupling: one statistic decays below 5% of its own peak
    // while the other stays above 25% of its peak at that index. vanishing
    // names the decayed one: 0 none, 3 mabuchi, 4 calabi.
    bool decoupled;
    int vanishing;
};

EquivalenceDiagnostics equivalence_diagnostics(const std::vector<Potential>& seq,
                                               const Potential& u, double p,
                                               double p_prime = 1.0);

// The tail-vs-peak rule behind EquivalenceDiagnostics::decoupled, exposed so
// both decay directions stay testable: (decoupled, vanishing).
std::pair<bool, int> detect_decoupling(const std::vector<EquivalenceRow>& rows);

}  // namespace kfl
