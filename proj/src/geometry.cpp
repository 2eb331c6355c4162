#include "kfl/geometry.hpp"

#include <cmath>
#include <vector>

#include <Eigen/SparseLU>

#include "kfl/errors.hpp"

namespace kfl {

std::string backend_name(BackendKind k) {
    return k == BackendKind::FlatTorus ? "flat-torus" : "round-p1";
}

BackendKind backend_from_name(const std::string& name) {
    if (name == "flat-torus") return BackendKind::FlatTorus;
    if (name == "round-p1") return BackendKind::RoundP1;
    throw UsageError("unknown backend '" + name + "' (flat-torus or round-p1)");
}

struct Geometry::Access {
    static Geometry* create(BackendKind kind, int resolution, MeasureSpace mu) {
        return new Geometry(kind, resolution, std::move(mu));
    }
};

std::shared_ptr<const Geometry> Geometry::make_torus(int resolution) {
    if (resolution < 8 || resolution % 2 != 0)
        throw ResolutionError("flat-torus resolution must be even and >= 8");
    Eigen::Index n = static_cast<Eigen::Index>(resolution) * resolution;
    std::shared_ptr<Geometry> g(
        Access::create(BackendKind::FlatTorus, resolution, MeasureSpace::uniform(n, 1.0)));
    g->x_ = ArrayXd(n);
    g->y_ = ArrayXd(n);
    double h = 1.0 / resolution;
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            g->x_[static_cast<Eigen::Index>(i) * resolution + j] = j * h;
            g->y_[static_cast<Eigen::Index>(i) * resolution + j] = i * h;
        }
    return g;
}

std::shared_ptr<const Geometry> Geometry::make_p1(int resolution) {
    if (resolution < 16) throw ResolutionError("round-p1 resolution must be >= 16");
    double h = M_PI / resolution;
    ArrayXd theta(resolution), weights(resolution), sc(resolution), sf(resolution + 1);
    for (int i = 0; i < resolution; ++i) {
        theta[i] = (i + 0.5) * h;
        sc[i] = std::sin(theta[i]);
        weights[i] = 2.0 * M_PI * h * sc[i];
    }
    // Face coefficients sin(theta -+ h/2); both poles carry zero flux.
    for (int i = 0; i <= resolution; ++i) sf[i] = std::sin(i * h);
    std::shared_ptr<Geometry> g(Access::create(BackendKind::RoundP1, resolution,
                                               MeasureSpace::from_weights(std::move(weights))));
    g->theta_ = std::move(theta);
    g->sin_center_ = std::move(sc);
    g->sin_face_ = std::move(sf);
    return g;
}

const ArrayXd& Geometry::x() const {
    if (kind_ != BackendKind::FlatTorus) throw KindError("x(): defined on the torus backend only");
    return x_;
}

const ArrayXd& Geometry::y() const {
    if (kind_ != BackendKind::FlatTorus) throw KindError("y(): defined on the torus backend only");
    return y_;
}

const ArrayXd& Geometry::theta() const {
    if (kind_ != BackendKind::RoundP1) throw KindError("theta(): defined on the P1 backend only");
    return theta_;
}

ArrayXd Geometry::laplace(const ArrayXd& f) const {
    measure_.check_shape(f, "laplace");
    ArrayXd out(f.size());
    if (kind_ == BackendKind::FlatTorus) {
        int N = resolution_;
        // 5-point stencil scaled by 1/2: tr_omega i del dbar on the flat torus.
        double c = 0.5 * static_cast<double>(N) * N;
        for (int i = 0; i < N; ++i) {
            int up = (i + 1) % N, dn = (i + N - 1) % N;
            for (int j = 0; j < N; ++j) {
                int rt = (j + 1) % N, lf = (j + N - 1) % N;
                Eigen::Index idx = static_cast<Eigen::Index>(i) * N + j;
                out[idx] = c * (f[static_cast<Eigen::Index>(up) * N + j] +
                                f[static_cast<Eigen::Index>(dn) * N + j] +
                                f[static_cast<Eigen::Index>(i) * N + rt] +
                                f[static_cast<Eigen::Index>(i) * N + lf] - 4.0 * f[idx]);
            }
        }
    } else {
        int N = resolution_;
        double h = M_PI / N;
        double c = 0.5 / (h * h);
        for (int i = 0; i < N; ++i) {
            double flux = 0.0;
            if (i + 1 < N) flux += sin_face_[i + 1] * (f[i + 1] - f[i]);
            if (i > 0) flux -= sin_face_[i] * (f[i] - f[i - 1]);
            out[i] = c * flux / sin_center_[i];
        }
    }
    return out;
}

const Eigen::SparseMatrix<double>& Geometry::laplace_matrix() const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (!matrix_) {
        Eigen::Index n = sites();
        std::vector<Eigen::Triplet<double>> trip;
        if (kind_ == BackendKind::FlatTorus) {
            int N = resolution_;
            double c = 0.5 * static_cast<double>(N) * N;
            trip.reserve(static_cast<std::size_t>(n) * 5);
            for (int i = 0; i < N; ++i) {
                int up = (i + 1) % N, dn = (i + N - 1) % N;
                for (int j = 0; j < N; ++j) {
                    int rt = (j + 1) % N, lf = (j + N - 1) % N;
                    int idx = i * N + j;
                    trip.emplace_back(idx, up * N + j, c);
                    trip.emplace_back(idx, dn * N + j, c);
                    trip.emplace_back(idx, i * N + rt, c);
                    trip.emplace_back(idx, i * N + lf, c);
                    trip.emplace_back(idx, idx, -4.0 * c);
                }
            }
        } else {
            int N = resolution_;
            double h = M_PI / N;
            for (int i = 0; i < N; ++i) {
                double c = 0.5 / (h * h * sin_center_[i]);
                double diag = 0.0;
                if (i + 1 < N) {
                    trip.emplace_back(i, i + 1, c * sin_face_[i + 1]);
                    diag -= c * sin_face_[i + 1];
                }
                if (i > 0) {
                    trip.emplace_back(i, i - 1, c * sin_face_[i]);
                    diag -= c * sin_face_[i];
                }
                trip.emplace_back(i, i, diag);
            }
        }
        auto m = std::make_shared<Eigen::SparseMatrix<double>>(n, n);
        m->setFromTriplets(trip.begin(), trip.end());
        m->makeCompressed();
        matrix_ = std::move(m);
    }
    return *matrix_;
}

namespace {
using BorderedSolver = Eigen::SparseLU<Eigen::SparseMatrix<double>>;
}

ArrayXd Geometry::solve_poisson(const ArrayXd& rhs) const {
    measure_.check_shape(rhs, "solve_poisson");
    double m = mean(rhs);
    if (std::abs(m) > 1e-8 * std::max(1.0, rhs.abs().maxCoeff()))
        throw InconsistencyError("solve_poisson: right-hand side must have zero mean");

    const Eigen::SparseMatrix<double>& L = laplace_matrix();
    std::shared_ptr<const void> solver_erased;
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (!poisson_) {
            // Bordered system [[L, w], [w^T, 0]]: the extra row enforces the
            // zero-mean constraint, the extra column keeps the matrix square
            // and nonsingular (L alone annihilates constants).
            Eigen::Index n = sites();
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(static_cast<std::size_t>(L.nonZeros()) + 2 * n);
            for (int k = 0; k < L.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it)
                    trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                      it.value());
            for (Eigen::Index i = 0; i < n; ++i) {
                trip.emplace_back(static_cast<int>(i), static_cast<int>(n), measure_.weights()[i]);
                trip.emplace_back(static_cast<int>(n), static_cast<int>(i), measure_.weights()[i]);
            }
            Eigen::SparseMatrix<double> B(n + 1, n + 1);
            B.setFromTriplets(trip.begin(), trip.end());
            B.makeCompressed();
            auto solver = std::make_shared<BorderedSolver>();
            solver->compute(B);
            if (solver->info() != Eigen::Success)
                throw NumericError("solve_poisson: factorization failed");
            poisson_ = std::static_pointer_cast<const void>(solver);
        }
        solver_erased = poisson_;
    }
    const auto* solver = static_cast<const BorderedSolver*>(solver_erased.get());
    Eigen::VectorXd b(sites() + 1);
    b.head(sites()) = (rhs - m).matrix();
    b[sites()] = 0.0;
    Eigen::VectorXd sol = solver->solve(b);
    if (!sol.allFinite()) throw NumericError("solve_poisson: solver produced non-finite values");
    ArrayXd u = sol.head(sites()).array();
    return u - mean(u);
}

void require_compatible(const GeometryPtr& a, const GeometryPtr& b, const char* what) {
    if (!a || !b) throw InconsistencyError(std::string(what) + ": missing geometry handle");
    if (a->kind() != b->kind() || a->resolution() != b->resolution())
        throw InconsistencyError(std::string(what) + ": geometries differ (" +
                                 backend_name(a->kind()) + "/" + std::to_string(a->resolution()) +
                                 " vs " + backend_name(b->kind()) + "/" +
                                 std::to_string(b->resolution()) + ")");
}

Potential Potential::make(GeometryPtr geom, ArrayXd raw) {
    if (!geom) throw InconsistencyError("potential: missing geometry handle");
    geom->measure().check_shape(raw, "potential");
    if (!raw.isFinite().all()) throw NumericError("potential: non-finite values");
    Potential u{std::move(geom), std::move(raw)};
    u.values -= u.geom->mean(u.values);
    ArrayXd rho = 1.0 + u.geom->laplace(u.values);
    Eigen::Index site;
    double lo = rho.minCoeff(&site);
    if (!(lo > kPositivityFloor))
        throw NotKahlerError("potential: induced density " + std::to_string(lo) + " at site " +
                             std::to_string(site) + " below the positivity floor");
    return u;
}

Density Density::make(GeometryPtr geom, ArrayXd values) {
    if (!geom) throw InconsistencyError("density: missing geometry handle");
    geom->measure().check_shape(values, "density");
    if (!values.isFinite().all()) throw NumericError("density: non-finite values");
    Eigen::Index site;
    double lo = values.minCoeff(&site);
    if (!(lo > 0.0))
        throw DomainError("density: nonpositive value at site " + std::to_string(site));
    double m = geom->mean(values);
    if (std::abs(m - 1.0) > 1e-10)
        throw InconsistencyError("density: omega-mean " + std::to_string(m) + " is not 1");
    return Density{std::move(geom), std::move(values)};
}

Density density(const Potential& u) {
    ArrayXd rho = 1.0 + u.geom->laplace(u.values);
    Eigen::Index site;
    double lo = rho.minCoeff(&site);
    if (!(lo > kPositivityFloor))
        throw NotKahlerError("density: value " + std::to_string(lo) + " at site " +
                             std::to_string(site) + " below the positivity floor");
    return Density{u.geom, std::move(rho)};
}

Potential calabi_yau_inverse(const Density& rho) {
    ArrayXd u = rho.geom->solve_poisson(rho.values - 1.0);
    return Potential::make(rho.geom, std::move(u));
}

ArrayXd weighted_laplacian(const Potential& u, const ArrayXd& beta) {
    u.geom->measure().check_shape(beta, "weighted_laplacian");
    Density rho = density(u);
    return u.geom->laplace(beta) / rho.values;
}

ArrayXd scalar_curvature(const Potential& u, bool* conditioning_warning) {
    Density rho = density(u);
    if (conditioning_warning) *conditioning_warning = rho.values.minCoeff() < 1e-6;
    ArrayXd lap_log = u.geom->laplace(rho.values.log());
    double s0 = u.geom->mean_scalar_curvature();
    return (s0 - lap_log) / rho.values;
}

}  // namespace kfl
