#pragma once

#include <utility>
#include <vector>

#include "kfl/geometry.hpp"

namespace kfl {

enum class FlowKind { KahlerRicci, Calabi };

struct StepDiagnostic {
    double time;         // time reached after the accepted step
    double dt;           // step size actually used
    double residual;     // ||u_next - u||_inf / dt, a stationarity estimate
    double min_density;  // min rho over the accepted state
    int rejects;         // halvings spent on this step
};

struct FlowControls {
    int max_rejects = 30;  // total dt halvings before giving up
    int store_stride = 1;  // keep every k-th state; first and last always kept
};

struct FlowTrajectory {
    FlowKind flow_kind;
    std::vector<double> times;
    std::vector<Potential> states;
    std::vector<StepDiagnostic> diagnostics;  // one per accepted step
};

// Normalized Ricci-type potential flow du/dt = log rho_u + u - c(t) on the
// round-sphere backend, c(t) realized by zero-mean projection. Semi-implicit:
// the linearization (L + I) is treated implicitly, the logarithmic remainder
// explicitly. Stationary states satisfy log rho + u = const.
FlowTrajectory kr_flow_run(const Potential& u0, double dt, double T,
                           const FlowControls& controls = {});

// Scalar-curvature flow du/dt = S_{omega_u} - S_bar on either backend with
// the fourth-order linearization (L^2 + S_bar L) implicit.
FlowTrajectory calabi_flow_run(const Potential& u0, double dt, double T,
                               const FlowControls& controls = {});

struct LengthCriterionRow {
    double time;
    double g;                 // ((1/V) int |1 - S|^p rho^q omega)^{1/p}
    double running_integral;  // trapezoid of g over [0, time]
};

struct LengthCriterionReport {
    std::vector<LengthCriterionRow> rows;
    double p, q;
    double integral;            // trapezoid over the whole trajectory
    double tail_amplitude;      // A of the tail fit g ~ A exp(-rate t)
    double tail_rate;           // fitted decay rate (0 for an exhausted tail)
    double fit_residual;
    double tail_extrapolation;  // g(T)/rate when rate > 0
    bool finite;                // integrable-tail verdict
    double speed_identity_gap;  // max rel gap |g - speed norm of finite-diff du/dt|
    double late_cauchy_calabi;  // unnormalized stats between the last two states
    double late_cauchy_mabuchi;
};

// Finite-length criterion for Ricci-type trajectories; p may be infinite
// (grid max), q finite >= 1. Throws KindError on other flow kinds.
LengthCriterionReport flow_length_criterion(const FlowTrajectory& traj, double p, double q);

struct RateFit {
    double amplitude;
    double rate;      // decay rate lambda in value ~ amplitude * exp(-lambda t)
    double residual;  // rms of log-residuals
};

// Least-squares fit of log(value) over samples with t0 <= t <= t1.
// Throws FitDomainError on an empty window (< 2 samples) or nonpositive values.
RateFit exp_rate_fit(const std::vector<std::pair<double, double>>& series, double t0, double t1);

}  // namespace kfl
