#include "ofo/constraints.hpp"

#include <algorithm>

#include "ofo/errors.hpp"

namespace ofo {

PolyhedralSet PolyhedralSet::unconstrained(int dim) { return {Matrix::Zero(0, dim), Vector(0)}; }

PolyhedralSet PolyhedralSet::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw ConfigError("box bounds differ in length");
  const auto n = static_cast<int>(lower.size());
  PolyhedralSet set{Matrix::Zero(2 * n, n), Vector(2 * n)};
  for (int i = 0; i < n; ++i) {
    set.A(2 * i, i) = 1.0;
    set.b(2 * i) = upper(i);
    set.A(2 * i + 1, i) = -1.0;
    set.b(2 * i + 1) = -lower(i);
  }
  return set;
}

void PolyhedralSet::add_row(const Vector& row, double rhs) {
  if (row.size() != A.cols()) throw ConfigError("constraint row has wrong length");
  const auto m = A.rows();
  A.conservativeResize(m + 1, Eigen::NoChange);
  b.conservativeResize(m + 1);
  A.row(m) = row.transpose();
  b(m) = rhs;
}

double PolyhedralSet::max_violation(const Vector& x) const {
  if (x.size() != A.cols()) throw ConfigError("point has wrong dimension for constraint set");
  if (A.rows() == 0) return 0.0;
  return std::max(0.0, (A * x - b).maxCoeff());
}

bool PolyhedralSet::contains(const Vector& x, double tol) const { return max_violation(x) <= tol; }

}  // namespace ofo
