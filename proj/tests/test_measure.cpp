#include <doctest.h>

#include <cmath>

#include "kfl/errors.hpp"
#include "kfl/measure.hpp"
#include "kfl/util.hpp"

using namespace kfl;

namespace {

// Independent oracle: direct summation in 128-bit arithmetic.
double lp_norm_oracle(const ArrayXd& f, double p, const ArrayXd& w) {
    __float128 acc = 0, tot = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        __float128 a = std::pow(std::abs(f[i]), p);
        acc += static_cast<__float128>(w[i]) * a;
        tot += static_cast<__float128>(w[i]);
    }
    return std::pow(static_cast<double>(acc / tot), 1.0 / p);
}

ArrayXd random_array(Rng& rng, Eigen::Index n, double lo, double hi) {
    ArrayXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = rng.uniform(lo, hi);
    return f;
}

}  // namespace

TEST_CASE("measure space construction and integrals") {
    auto mu = MeasureSpace::uniform(4, 2.0);
    CHECK(mu.size() == 4);
    CHECK(mu.total() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mu.integral(ArrayXd::Constant(4, 3.0)) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(mu.average(ArrayXd::Constant(4, 3.0)) == doctest::Approx(3.0).epsilon(1e-15));

    ArrayXd w(3);
    w << 0.5, 1.5, 2.0;
    auto nu = MeasureSpace::from_weights(w);
    CHECK(nu.total() == doctest::Approx(4.0).epsilon(1e-15));

    CHECK_THROWS_AS(MeasureSpace::from_weights(ArrayXd::Zero(2)), DomainError);
    CHECK_THROWS_AS(MeasureSpace::uniform(0), ShapeError);
    CHECK_THROWS_AS(mu.integral(ArrayXd::Zero(5)), ShapeError);
}

TEST_CASE("lp_norm trivial examples") {
    auto mu = MeasureSpace::uniform(6, 3.0);
    for (double p : {1.0, 2.0, 3.5, 7.0}) {
        CHECK(lp_norm(ArrayXd::Constant(6, -4.0), p, mu) == doctest::Approx(4.0).epsilon(1e-14));
    }
    // Indicator of half the mass at p = 2.
    ArrayXd ind = ArrayXd::Zero(6);
    ind[0] = ind[1] = ind[2] = 1.0;
    CHECK(lp_norm(ind, 2.0, mu) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    // Max norm.
    ArrayXd f(6);
    f << 1, -9, 2, 0, 3, -4;
    CHECK(lp_norm(f, kInfinity, mu) == 9.0);
}

TEST_CASE("lp_norm matches the high-precision oracle") {
    Rng rng(20260814);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::Index n = 8;
        ArrayXd w = random_array(rng, n, 0.1, 2.0);
        ArrayXd f = random_array(rng, n, -5.0, 5.0);
        auto mu = MeasureSpace::from_weights(w);
        for (double p : {1.0, 2.0, 3.0, 4.7}) {
            double got = lp_norm(f, p, mu);
            double want = lp_norm_oracle(f, p, w);
            CHECK(got == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("lp_norm homogeneity and triangle inequality") {
    Rng rng(7);
    auto mu = MeasureSpace::from_weights(random_array(rng, 16, 0.2, 1.0));
    for (int rep = 0; rep < 200; ++rep) {
        ArrayXd f = random_array(rng, 16, -2.0, 2.0);
        ArrayXd g = random_array(rng, 16, -2.0, 2.0);
        double c = rng.uniform(-3.0, 3.0);
        double p = rng.uniform(1.0, 6.0);
        CHECK(lp_norm(c * f, p, mu) ==
              doctest::Approx(std::abs(c) * lp_norm(f, p, mu)).epsilon(1e-12));
        CHECK(lp_norm(f + g, p, mu) <= lp_norm(f, p, mu) + lp_norm(g, p, mu) + 1e-12);
    }
}

TEST_CASE("lp_norm rejects bad input") {
    auto mu = MeasureSpace::uniform(4);
    CHECK_THROWS_AS(lp_norm(ArrayXd::Zero(4), 0.5, mu), InvalidExponentError);
    ArrayXd bad = ArrayXd::Zero(4);
    bad[2] = std::nan("");
    CHECK_THROWS_AS(lp_norm(bad, 2.0, mu), NumericError);
}
