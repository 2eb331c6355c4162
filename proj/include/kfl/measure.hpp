#pragma once

#include <limits>

#include <Eigen/Core>

namespace kfl {

using Eigen::ArrayXd;

// Finite positive measure presented as atoms with strictly positive weights.
// Grid quadratures and abstract test measures both use this type; `total`
// plays the role of the volume V.
class MeasureSpace {
  public:
    // Uniform weights total/n on n atoms.
    static MeasureSpace uniform(Eigen::Index n, double total = 1.0);
    // Weights as given; must all be strictly positive and finite.
    static MeasureSpace from_weights(ArrayXd weights);

    Eigen::Index size() const { return weights_.size(); }
    const ArrayXd& weights() const { return weights_; }
    double total() const { return total_; }

    // integral(f)   = sum_i w_i f_i
    // average(f)    = integral(f) / total
    double integral(const ArrayXd& f) const;
    double average(const ArrayXd& f) const;

    void check_shape(const ArrayXd& f, const char* what) const;

  private:
    MeasureSpace() = default;
    ArrayXd weights_;
    double total_ = 0.0;
};

// Normalized L^p norm: ( average(|f|^p) )^{1/p} for finite p >= 1,
// max_i |f_i| for p = infinity. Throws InvalidExponentError for p < 1,
// NumericError on non-finite input or output.
double lp_norm(const ArrayXd& f, double p, const MeasureSpace& mu);

// Normalized L^p distance between f and g.
double lp_distance(const ArrayXd& f, const ArrayXd& g, double p, const MeasureSpace& mu);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace kfl
