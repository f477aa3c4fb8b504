#pragma once

#include <Eigen/Dense>

namespace pqproj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Value of a scalar field together with its coordinate gradient at one point.
struct Jet {
    double value = 0.0;
    Vector gradient;

    int dimension() const { return static_cast<int>(gradient.size()); }

    static Jet constant(double value, int dimension) {
        return Jet{value, Vector::Zero(dimension)};
    }
};

}  // namespace pqproj
