#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <Eigen/SparseCore>

#include "kfl/measure.hpp"

namespace kfl {

enum class BackendKind { FlatTorus, RoundP1 };

std::string backend_name(BackendKind k);
BackendKind backend_from_name(const std::string& name);

// Relative floor for Kahler positivity of densities.
constexpr double kPositivityFloor = 1e-8;

// Discretized one-complex-dimensional Kahler manifold. The flat torus is the
// periodic unit square with uniform quadrature; the round P1 backend keeps the
// S^1-invariant functions of the unit sphere on a cell-centered colatitude
// grid with sin(theta) weights. laplace realizes tr_omega i del dbar, i.e.
// half the metric Laplace-Beltrami operator, so density(u) = 1 + laplace(u).
class Geometry : public std::enable_shared_from_this<Geometry> {
  public:
    static std::shared_ptr<const Geometry> make_torus(int resolution);
    static std::shared_ptr<const Geometry> make_p1(int resolution);

    BackendKind kind() const { return kind_; }
    int resolution() const { return resolution_; }
    Eigen::Index sites() const { return measure_.size(); }
    double volume() const { return measure_.total(); }
    const MeasureSpace& measure() const { return measure_; }

    // Site coordinates. x/y are defined on the torus, theta on P1.
    const ArrayXd& x() const;
    const ArrayXd& y() const;
    const ArrayXd& theta() const;

    ArrayXd laplace(const ArrayXd& f) const;
    const Eigen::SparseMatrix<double>& laplace_matrix() const;

    // Zero-mean u with laplace(u) = rhs; rhs must have zero omega-mean.
    // Direct sparse factorization, cached after the first solve.
    ArrayXd solve_poisson(const ArrayXd& rhs) const;

    // (1/V) sum w_i f_i and its subtraction.
    double mean(const ArrayXd& f) const { return measure_.average(f); }
    ArrayXd zero_mean(const ArrayXd& f) const { return f - mean(f); }

    // Topological mean scalar curvature: 0 on the torus, 1 on P1.
    double mean_scalar_curvature() const { return kind_ == BackendKind::RoundP1 ? 1.0 : 0.0; }

  private:
    Geometry(BackendKind kind, int resolution, MeasureSpace mu)
        : kind_(kind), resolution_(resolution), measure_(std::move(mu)) {}

    BackendKind kind_;
    int resolution_;
    MeasureSpace measure_;
    ArrayXd x_, y_, theta_;
    ArrayXd sin_center_, sin_face_;  // P1 stencil coefficients

    mutable std::mutex cache_mutex_;
    mutable std::shared_ptr<const Eigen::SparseMatrix<double>> matrix_;
    mutable std::shared_ptr<const void> poisson_;  // type-erased factorization

    struct Access;
};

using GeometryPtr = std::shared_ptr<const Geometry>;

// Throws InconsistencyError unless both handles describe the same backend
// kind and resolution.
void require_compatible(const GeometryPtr& a, const GeometryPtr& b, const char* what);

// Zero-mean potential whose induced form stays positive.
struct Potential {
    GeometryPtr geom;
    ArrayXd values;

    // Subtracts the omega-mean, then validates positivity of the induced
    // density (NotKahlerError on failure).
    static Potential make(GeometryPtr geom, ArrayXd raw);
};

// Ratio of volume forms; positive with unit omega-mean.
struct Density {
    GeometryPtr geom;
    ArrayXd values;

    static Density make(GeometryPtr geom, ArrayXd values);
};

// rho_u = 1 + laplace(u); throws NotKahlerError naming the violating site.
Density density(const Potential& u);

// Unique zero-mean potential with density(u) = rho (linear in n = 1).
Potential calabi_yau_inverse(const Density& rho);

// Delta_{omega_u} beta = laplace(beta) / rho_u.
ArrayXd weighted_laplacian(const Potential& u, const ArrayXd& beta);

// Scalar curvature of omega_u. Writes true to *conditioning_warning when the
// density drops below 1e-6 and the logarithm is poorly conditioned.
ArrayXd scalar_curvature(const Potential& u, bool* conditioning_warning = nullptr);

}  // namespace kfl
