#pragma once

#include <optional>

#include "ofo/types.hpp"

namespace ofo {

/// { x : A x <= b }
struct PolyhedralSet {
  Matrix A;
  Vector b;

  static PolyhedralSet unconstrained(int dim);
  static PolyhedralSet box(const Vector& lower, const Vector& upper);

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
  void add_row(const Vector& row, double rhs);
  /// max_i (A x - b)_i clipped at zero.
  double max_violation(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;
};

struct ConstraintSpec {
  PolyhedralSet input_set;
  std::optional<PolyhedralSet> output_set;
};

}  // namespace ofo
