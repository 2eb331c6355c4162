#include "kfl/flows.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "kfl/errors.hpp"
#include "kfl/finsler.hpp"

namespace kfl {

namespace {

// Density floor at which a trajectory counts as degenerating rather than
// merely under-resolved; two decades above the admissibility floor.
constexpr double kDegenerationFloor = 1e-6;

using SpMat = Eigen::SparseMatrix<double>;

SpMat identity_like(Eigen::Index n) {
    SpMat id(n, n);
    id.setIdentity();
    return id;
}

struct ImplicitSolver {
    Eigen::SparseLU<SpMat> lu;

    explicit ImplicitSolver(const SpMat& sys) {
        lu.compute(sys);
        if (lu.info() != Eigen::Success)
            throw NumericError("flow step: implicit operator factorization failed");
    }

    ArrayXd solve(const ArrayXd& rhs) const {
        ArrayXd out = lu.solve(rhs.matrix()).array();
        if (!out.isFinite().all()) throw NumericError("flow step: implicit solve failed");
        return out;
    }
};

struct StepResult {
    ArrayXd values;  // zero-mean potential values
    double min_density;
    bool admissible;
};

// One trial step of either scheme: rhs assembly is flow-specific, the
// implicit operator comes pre-factorized for the current dt.
template <typename Rhs>
StepResult trial_step(const GeometryPtr& geom, const ImplicitSolver& solver, Rhs&& rhs) {
    StepResult res;
    res.values = geom->zero_mean(solver.solve(rhs()));
    ArrayXd rho = 1.0 + geom->laplace(res.values);
    res.min_density = rho.minCoeff();
    res.admissible = rho.allFinite() && res.min_density > kPositivityFloor;
    return res;
}

template <typename MakeSolver, typename MakeRhs>
FlowTrajectory integrate(const Potential& u0, double dt, double T, const FlowControls& controls,
                         FlowKind kind, MakeSolver&& make_solver, MakeRhs&& make_rhs) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("flow: dt must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("flow: horizon must be positive");
    if (controls.store_stride < 1) throw DomainError("flow: store stride must be >= 1");

    const GeometryPtr& geom = u0.geom;
    FlowTrajectory traj;
    traj.flow_kind = kind;
    traj.times.push_back(0.0);
    traj.states.push_back(u0);

    Potential current = u0;
    double t = 0.0;
    double dt_cur = dt;
    int rejects_total = 0;
    long step_index = 0;

    std::unique_ptr<ImplicitSolver> solver;
    double solver_dt = -1.0;

    while (t < T * (1.0 - 1e-12)) {
        double step = std::min(dt_cur, T - t);
        int rejects_here = 0;
        StepResult res;
        for (;;) {
            if (solver_dt != step) {
                solver = std::make_unique<ImplicitSolver>(make_solver(step));
                solver_dt = step;
            }
            res = trial_step(geom, *solver, [&] { return make_rhs(current, step); });
            if (res.admissible) break;
            ++rejects_here;
            ++rejects_total;
            if (rejects_total > controls.max_rejects) {
                double last_min = (1.0 + geom->laplace(current.values)).minCoeff();
                if (last_min <= kDegenerationFloor)
                    throw FlowDegenerationError("flow: density collapsed", t);
                throw StiffnessError("flow: step rejected " + std::to_string(rejects_total) +
                                     " times; dt cascade exhausted");
            }
            dt_cur *= 0.5;
            step = std::min(dt_cur, T - t);
        }

        double moved = (res.values - current.values).abs().maxCoeff();
        current = Potential::make(geom, std::move(res.values));
        t += step;
        ++step_index;

        StepDiagnostic diag;
        diag.time = t;
        diag.dt = step;
        diag.residual = moved / step;
        diag.min_density = res.min_density;
        diag.rejects = rejects_here;
        traj.diagnostics.push_back(diag);

        bool final = !(t < T * (1.0 - 1e-12));
        if (final || step_index % controls.store_stride == 0) {
            traj.times.push_back(t);
            traj.states.push_back(current);
        }
    }
    return traj;
}

}  // namespace

FlowTrajectory kr_flow_run(const Potential& u0, double dt, double T,
                           const FlowControls& controls) {
    if (u0.geom->kind() != BackendKind::RoundP1)
        throw KindError("kr_flow_run: defined on the round-sphere backend only");
    const GeometryPtr& geom = u0.geom;
    const SpMat& L = geom->laplace_matrix();
    SpMat id = identity_like(L.rows());

    auto make_solver = [&](double step) -> SpMat {
        // (1 - dt) I - dt L, the implicit part of du/dt = (L + I)u + N(u).
        SpMat sys = (1.0 - step) * id - step * L;
        sys.makeCompressed();
        return sys;
    };
    auto make_rhs = [&](const Potential& u, double step) -> ArrayXd {
        ArrayXd lap = geom->laplace(u.values);
        return u.values + step * ((1.0 + lap).log() - lap);  // log rho - Lu
    };
    return integrate(u0, dt, T, controls, FlowKind::KahlerRicci, make_solver, make_rhs);
}

FlowTrajectory calabi_flow_run(const Potential& u0, double dt, double T,
                               const FlowControls& controls) {
    const GeometryPtr& geom = u0.geom;
    const SpMat& L = geom->laplace_matrix();
    double s0 = geom->mean_scalar_curvature();
    SpMat lin = (SpMat(L * L) + s0 * L).pruned();
    SpMat id = identity_like(L.rows());

    auto make_solver = [&](double step) -> SpMat {
        // I + dt (L^2 + s0 L): implicit fourth-order linearization.
        SpMat sys = id + step * lin;
        sys.makeCompressed();
        return sys;
    };
    auto make_rhs = [&](const Potential& u, double step) -> ArrayXd {
        ArrayXd s = scalar_curvature(u);
        ArrayXd lin_u = (lin * u.values.matrix()).array();
        return u.values + step * ((s - s0) + lin_u);
    };
    return integrate(u0, dt, T, controls, FlowKind::Calabi, make_solver, make_rhs);
}

namespace {

// g with p possibly infinite: sup over sites of the weighted gap.
double criterion_g(const Potential& u, double p, double q) {
    if (p == kInfinity) {
        ArrayXd s = scalar_curvature(u);
        return (1.0 - s).abs().maxCoeff();
    }
    ArrayXd s = scalar_curvature(u);
    ArrayXd rho = density(u).values;
    return std::pow(u.geom->measure().average((1.0 - s).abs().pow(p) * rho.pow(q)), 1.0 / p);
}

// Finsler speed of a tangent vector, sup realization at p = infinity.
double speed_norm(const Potential& u, const ArrayXd& beta, double p, double q) {
    if (p == kInfinity) {
        ArrayXd rho = density(u).values;
        return (u.geom->laplace(beta) / rho).abs().maxCoeff();
    }
    return calabi_norm(u, beta, p, q);
}

}  // namespace

LengthCriterionReport flow_length_criterion(const FlowTrajectory& traj, double p, double q) {
    if (traj.flow_kind != FlowKind::KahlerRicci)
        throw KindError("flow_length_criterion: needs a Ricci-type trajectory");
    if (!(q >= 1.0) || !std::isfinite(q) || !(p >= q))
        throw InvalidExponentError("flow_length_criterion: need 1 <= q <= p");
    if (traj.states.size() < 2 || traj.states.size() != traj.times.size())
        throw ShapeError("flow_length_criterion: trajectory needs >= 2 stored states");

    LengthCriterionReport rep;
    rep.p = p;
    rep.q = q;
    std::size_t n = traj.states.size();
    rep.rows.resize(n);
    double integral = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g = criterion_g(traj.states[i], p, q);
        if (i > 0)
            integral +=
                0.5 * (g + rep.rows[i - 1].g) * (traj.times[i] - traj.times[i - 1]);
        rep.rows[i] = LengthCriterionRow{traj.times[i], g, integral};
    }
    rep.integral = integral;

    // Tail fit over the last half of the horizon.
    double T = traj.times.back();
    double tail_floor = 1e-300;
    bool exhausted = false;
    for (std::size_t i = 0; i < n; ++i)
        if (traj.times[i] >= 0.5 * T && rep.rows[i].g <= tail_floor) exhausted = true;
    if (exhausted || n < 4) {
        rep.tail_amplitude = 0.0;
        rep.tail_rate = 0.0;
        rep.fit_residual = 0.0;
        rep.tail_extrapolation = 0.0;
        rep.finite = true;  // the integrand already vanished
    } else {
        std::vector<std::pair<double, double>> series;
        for (const LengthCriterionRow& row : rep.rows) series.emplace_back(row.time, row.g);
        RateFit fit = exp_rate_fit(series, 0.5 * T, T);
        rep.tail_amplitude = fit.amplitude;
        rep.tail_rate = fit.rate;
        rep.fit_residual = fit.residual;
        rep.tail_extrapolation = fit.rate > 0.0 ? rep.rows.back().g / fit.rate : kInfinity;
        rep.finite = fit.rate > 0.0;
    }

    // Differentiated-flow identity: g(t) equals the Finsler speed of the
    // trajectory; checked with centered finite differences at interior rows.
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double span = traj.times[i + 1] - traj.times[i - 1];
        ArrayXd dot = (traj.states[i + 1].values - traj.states[i - 1].values) / span;
        double speed = speed_norm(traj.states[i], dot, p, q);
        double g = rep.rows[i].g;
        double scale = std::max({g, speed, 1e-12});
        worst = std::max(worst, std::abs(g - speed) / scale);
    }
    rep.speed_identity_gap = worst;

    rep.late_cauchy_calabi =
        calabi_cauchy_stat(traj.states[n - 2], traj.states[n - 1], q);
    double p_fin = std::isfinite(p) ? p : 2.0;
    rep.late_cauchy_mabuchi =
        mabuchi_cauchy_stat(traj.states[n - 2], traj.states[n - 1], p_fin);
    return rep;
}

RateFit exp_rate_fit(const std::vector<std::pair<double, double>>& series, double t0, double t1) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long count = 0;
    for (const auto& [t, v] : series) {
        if (t < t0 || t > t1) continue;
        if (!(v > 0.0))
            throw FitDomainError("exp_rate_fit: nonpositive value inside the window");
        double y = std::log(v);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++count;
    }
    if (count < 2) throw FitDomainError("exp_rate_fit: window holds fewer than 2 samples");
    double denom = count * sxx - sx * sx;
    double slope = denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
    double inter = (sy - slope * sx) / count;

    double ss = 0.0;
    for (const auto& [t, v] : series) {
        if (t < t0 || t > t1) continue;
        double r = std::log(v) - (inter + slope * t);
        ss += r * r;
    }
    RateFit fit;
    fit.amplitude = std::exp(inter);
    fit.rate = -slope;
    fit.residual = std::sqrt(ss / count);
    return fit;
}

}  // namespace kfl
