#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace dela {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Axis-aligned box constraints for the decision space.
struct Box {
  Vector lo;
  Vector hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool valid() const {
    if (lo.size() != hi.size() || lo.size() == 0) return false;
    return (lo.array() < hi.array()).all();
  }

  Vector center() const { return 0.5 * (lo + hi); }
  Vector range() const { return hi - lo; }

  static Box cube(int d, double lo_v, double hi_v) {
    Box b;
    b.lo = Vector::Constant(d, lo_v);
    b.hi = Vector::Constant(d, hi_v);
    return b;
  }
};

/// A paired design: X holds n points (rows), Y the corresponding objective values.
struct Sample {
  Matrix X;  // n x d
  Matrix Y;  // n x m

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  int m() const { return static_cast<int>(Y.cols()); }
};

}  // namespace dela
