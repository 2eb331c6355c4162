#pragma once

#include <cmath>
#include <utility>

#include "kfl/geometry.hpp"
#include "kfl/util.hpp"

namespace kfl_test {

// Random admissible potential from low-frequency modes; `amplitude` bounds
// the sup of the induced density deviation |rho - 1|.
inline kfl::Potential random_potential(const kfl::GeometryPtr& g, kfl::Rng& rng,
                                       double amplitude) {
    using kfl::ArrayXd;
    ArrayXd u = ArrayXd::Zero(g->sites());
    if (g->kind() == kfl::BackendKind::FlatTorus) {
        for (int k = 1; k <= 3; ++k)
            for (int l = 0; l <= 3; ++l) {
                double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
                u += a * (2.0 * M_PI * k * g->x()).cos() * (2.0 * M_PI * l * g->y()).cos() +
                     b * (2.0 * M_PI * k * g->x()).sin() * (2.0 * M_PI * l * g->y()).sin();
            }
    } else {
        ArrayXd c = g->theta().cos();
        for (int l = 1; l <= 4; ++l) {
            double a = rng.uniform(-1.0, 1.0);
            for (Eigen::Index i = 0; i < c.size(); ++i) u[i] += a * std::legendre(l, c[i]);
        }
    }
    double top = g->laplace(u).abs().maxCoeff();
    if (top > 0) u *= amplitude / top;
    return kfl::Potential::make(g, std::move(u));
}

// Zonal Legendre mode on the round backend, scaled so sup |laplace u| equals
// `amplitude` (the induced density deviation).
inline kfl::Potential zonal_potential(const kfl::GeometryPtr& g, int ell, double amplitude) {
    kfl::ArrayXd c = g->theta().cos();
    kfl::ArrayXd u(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) u[i] = std::legendre(unsigned(ell), c[i]);
    double top = g->laplace(u).abs().maxCoeff();
    u *= amplitude / top;
    return kfl::Potential::make(g, std::move(u));
}

}  // namespace kfl_test
