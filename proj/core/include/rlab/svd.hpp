#pragma once

#include <vector>

#include "rlab/mat.hpp"

namespace rlab {

/// Thin SVD: a = u * diag(s) * vt with k = min(rows, cols), singular values
/// nonincreasing. u is rows x k with orthonormal columns, vt is k x cols with
/// orthonormal rows.
struct Svd {
  Mat u;
  std::vector<double> s;
  Mat vt;
};

/// One-sided Jacobi SVD. Throws NumericalError if the sweep cap
/// (100 * max(rows, cols)) is exceeded before convergence.
Svd svd(const Mat& a);

/// Singular values only, nonincreasing.
std::vector<double> singular_values(const Mat& a);

/// Right singular vectors and singular values only (no U). v is
/// cols x k with orthonormal columns (columns matching zero singular values
/// are left as zero), s nonincreasing. Cheaper than svd() in the wide case.
struct RightSingular {
  Mat v;
  std::vector<double> s;
};

RightSingular right_singular(const Mat& a);

/// Symmetric eigendecomposition a = vectors * diag(values) * vectors^T,
/// eigenvalues nonincreasing. Cyclic Jacobi.
struct SymEig {
  Mat vectors;  // columns are eigenvectors
  std::vector<double> values;
};

SymEig sym_eig(const Mat& a);

}  // namespace rlab
