#include "kfl/measure.hpp"

#include <cmath>
#include <string>

#include "kfl/errors.hpp"

namespace kfl {

MeasureSpace MeasureSpace::uniform(Eigen::Index n, double total) {
    if (n <= 0) throw ShapeError("measure space needs at least one atom");
    if (!(total > 0.0) || !std::isfinite(total))
        throw DomainError("total mass must be positive and finite");
    MeasureSpace mu;
    mu.weights_ = ArrayXd::Constant(n, total / static_cast<double>(n));
    mu.total_ = mu.weights_.sum();
    return mu;
}

MeasureSpace MeasureSpace::from_weights(ArrayXd weights) {
    if (weights.size() == 0) throw ShapeError("measure space needs at least one atom");
    if (!weights.isFinite().all() || (weights <= 0.0).any())
        throw DomainError("weights must be strictly positive and finite");
    MeasureSpace mu;
    mu.weights_ = std::move(weights);
    mu.total_ = mu.weights_.sum();
    return mu;
}

void MeasureSpace::check_shape(const ArrayXd& f, const char* what) const {
    if (f.size() != weights_.size())
        throw ShapeError(std::string(what) + ": expected " + std::to_string(weights_.size()) +
                         " values, got " + std::to_string(f.size()));
}

double MeasureSpace::integral(const ArrayXd& f) const {
    check_shape(f, "integral");
    return (weights_ * f).sum();
}

double MeasureSpace::average(const ArrayXd& f) const { return integral(f) / total_; }

double lp_norm(const ArrayXd& f, double p, const MeasureSpace& mu) {
    mu.check_shape(f, "lp_norm");
    if (!(p >= 1.0)) throw InvalidExponentError("lp_norm: p must satisfy p >= 1");
    if (!f.isFinite().all()) throw NumericError("lp_norm: non-finite input");
    double out;
    if (p == kInfinity) {
        out = f.abs().maxCoeff();
    } else if (p == 1.0) {
        out = mu.average(f.abs());
    } else if (p == 2.0) {
        out = std::sqrt(mu.average(f.square()));
    } else {
        out = std::pow(mu.average(f.abs().pow(p)), 1.0 / p);
    }
    if (!std::isfinite(out)) throw NumericError("lp_norm: overflow");
    return out;
}

double lp_distance(const ArrayXd& f, const ArrayXd& g, double p, const MeasureSpace& mu) {
    mu.check_shape(f, "lp_distance");
    mu.check_shape(g, "lp_distance");
    return lp_norm(f - g, p, mu);
}

}  // namespace kfl
