#include "rlab/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rlab {

namespace {

// Orthogonalizes the columns of w in place by Hestenes rotations. If accum is
// non-null it must be a w.cols() x w.cols() identity on entry and receives the
// accumulated right-rotation matrix R, so that w_in = w_out * R^T.
void jacobi_onesided(Mat& w, Mat* accum) {
  const std::size_t h = w.rows(), k = w.cols();
  if (k < 2) return;
  const std::size_t cap = 100 * std::max(h, k);
  for (std::size_t sweep = 0; sweep < cap; ++sweep) {
    // Quadratic convergence normally finishes in well under 30 sweeps; past
    // that the remaining rotations are rounding noise, so the stopping
    // tolerance is loosened to break limit cycles.
    const double tol = sweep < 30 ? 1e-15 : 1e-12;
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < h; ++r) {
          double wi = w(r, i), wj = w(r, j);
          alpha += wi * wi;
          beta += wj * wj;
          gamma += wi * wj;
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        // columns below each other's rounding floor cannot be improved
        if (beta <= alpha * 1e-28 || alpha <= beta * 1e-28) continue;
        if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) /
                   (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t r = 0; r < h; ++r) {
          double wi = w(r, i), wj = w(r, j);
          w(r, i) = c * wi - s * wj;
          w(r, j) = s * wi + c * wj;
        }
        if (accum) {
          for (std::size_t r = 0; r < k; ++r) {
            double vi = (*accum)(r, i), vj = (*accum)(r, j);
            (*accum)(r, i) = c * vi - s * vj;
            (*accum)(r, j) = s * vi + c * vj;
          }
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("svd: one-sided Jacobi did not converge within sweep cap");
}

std::vector<double> column_norms(const Mat& w) {
  std::vector<double> s(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t j = 0; j < w.cols(); ++j) s[j] += w(r, j) * w(r, j);
  for (double& v : s) v = std::sqrt(v);
  return s;
}

std::vector<std::size_t> descending_order(const std::vector<double>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return idx;
}

Mat permute_cols(const Mat& m, const std::vector<std::size_t>& idx) {
  Mat out(m.rows(), m.cols());
  for (std::size_t j = 0; j < idx.size(); ++j)
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, j) = m(r, idx[j]);
  return out;
}

// Normalizes the columns of q by s; columns whose singular value is
// (numerically) zero are replaced by an orthonormal completion so q keeps
// orthonormal columns.
void normalize_or_complete(Mat& q, const std::vector<double>& s, double s_max) {
  const std::size_t h = q.rows(), k = q.cols();
  const double tiny = s_max > 0.0 ? s_max * 1e-290 : 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (s[j] > tiny && s[j] > 0.0) {
      for (std::size_t r = 0; r < h; ++r) q(r, j) /= s[j];
      continue;
    }
    // Gram-Schmidt a basis vector against the existing columns.
    bool placed = false;
    for (std::size_t e = 0; e < h && !placed; ++e) {
      std::vector<double> v(h, 0.0);
      v[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < k; ++c) {
          if (c == j) continue;
          double dot = 0.0;
          for (std::size_t r = 0; r < h; ++r) dot += v[r] * q(r, c);
          for (std::size_t r = 0; r < h; ++r) v[r] -= dot * q(r, c);
        }
      }
      double nrm = 0.0;
      for (double x : v) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t r = 0; r < h; ++r) q(r, j) = v[r] / nrm;
        placed = true;
      }
    }
    if (!placed) throw NumericalError("svd: failed to complete orthonormal basis");
  }
}

}  // namespace

Svd svd(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) throw DimensionError("svd: empty matrix");
  if (!a.all_finite()) throw NumericalError("svd: non-finite entries");
  const std::size_t n = a.rows(), p = a.cols();
  Svd out;
  if (n >= p) {
    Mat w = a;
    Mat v = Mat::identity(p);
    jacobi_onesided(w, &v);
    std::vector<double> s = column_norms(w);
    auto idx = descending_order(s);
    w = permute_cols(w, idx);
    v = permute_cols(v, idx);
    std::vector<double> ss(p);
    for (std::size_t j = 0; j < p; ++j) ss[j] = s[idx[j]];
    normalize_or_complete(w, ss, ss.empty() ? 0.0 : ss[0]);
    out.u = std::move(w);
    out.s = std::move(ss);
    out.vt = v.transposed();
  } else {
    // a = r * diag(s) * q^T where a^T = q * diag(s) * r^T.
    Mat w = a.transposed();  // p x n
    Mat r = Mat::identity(n);
    jacobi_onesided(w, &r);
    std::vector<double> s = column_norms(w);
    auto idx = descending_order(s);
    w = permute_cols(w, idx);
    r = permute_cols(r, idx);
    std::vector<double> ss(n);
    for (std::size_t j = 0; j < n; ++j) ss[j] = s[idx[j]];
    normalize_or_complete(w, ss, ss.empty() ? 0.0 : ss[0]);
    out.u = std::move(r);
    out.s = std::move(ss);
    out.vt = w.transposed();
  }
  return out;
}

RightSingular right_singular(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw DimensionError("right_singular: empty matrix");
  if (!a.all_finite()) throw NumericalError("right_singular: non-finite entries");
  const std::size_t n = a.rows(), p = a.cols();
  RightSingular out;
  if (n >= p) {
    Mat w = a;
    Mat v = Mat::identity(p);
    jacobi_onesided(w, &v);
    std::vector<double> s = column_norms(w);
    auto idx = descending_order(s);
    out.v = permute_cols(v, idx);
    out.s.resize(p);
    for (std::size_t j = 0; j < p; ++j) out.s[j] = s[idx[j]];
  } else {
    Mat w = a.transposed();  // p x n, columns converge to V * diag(s)
    jacobi_onesided(w, nullptr);
    std::vector<double> s = column_norms(w);
    auto idx = descending_order(s);
    w = permute_cols(w, idx);
    out.s.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.s[j] = s[idx[j]];
    const double tiny = out.s[0] > 0.0 ? out.s[0] * 1e-290 : 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (out.s[j] > tiny && out.s[j] > 0.0)
        for (std::size_t r = 0; r < p; ++r) w(r, j) /= out.s[j];
      else
        for (std::size_t r = 0; r < p; ++r) w(r, j) = 0.0;
    }
    out.v = std::move(w);
  }
  return out;
}

std::vector<double> singular_values(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw DimensionError("singular_values: empty matrix");
  Mat w = a.rows() >= a.cols() ? a : a.transposed();
  jacobi_onesided(w, nullptr);
  std::vector<double> s = column_norms(w);
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

SymEig sym_eig(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionError("sym_eig: matrix not square");
  const std::size_t m = a.rows();
  Mat w = a;
  Mat v = Mat::identity(m);
  const std::size_t cap = 100 * std::max<std::size_t>(m, 1);
  for (std::size_t sweep = 0; sweep < cap; ++sweep) {
    // as in jacobi_onesided: loosen the tolerance once the remaining
    // off-diagonal mass is rounding noise, to break limit cycles
    const double tol = sweep < 30 ? 1e-15 : 1e-12;
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      diag += std::fabs(w(i, i));
      for (std::size_t j = i + 1; j < m; ++j) off += std::fabs(w(i, j));
    }
    if (off <= tol * std::max(diag, 1e-300)) break;
    if (sweep + 1 == cap)
      throw NumericalError("sym_eig: Jacobi did not converge within sweep cap");
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        double apq = w(i, j);
        if (apq == 0.0) continue;
        double app = w(i, i), aqq = w(j, j);
        if (std::fabs(apq) <= tol * std::sqrt(std::fabs(app * aqq)) &&
            std::fabs(apq) <= tol)
          continue;
        double theta = (aqq - app) / (2.0 * apq);
        double t = std::copysign(1.0, theta) /
                   (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          double wri = w(r, i), wrj = w(r, j);
          w(r, i) = c * wri - s * wrj;
          w(r, j) = s * wri + c * wrj;
        }
        for (std::size_t r = 0; r < m; ++r) {
          double wir = w(i, r), wjr = w(j, r);
          w(i, r) = c * wir - s * wjr;
          w(j, r) = s * wir + c * wjr;
        }
        for (std::size_t r = 0; r < m; ++r) {
          double vri = v(r, i), vrj = v(r, j);
          v(r, i) = c * vri - s * vrj;
          v(r, j) = s * vri + c * vrj;
        }
      }
    }
  }
  std::vector<double> vals(m);
  for (std::size_t i = 0; i < m; ++i) vals[i] = w(i, i);
  auto idx = descending_order(vals);
  SymEig out;
  out.vectors = permute_cols(v, idx);
  out.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.values[i] = vals[idx[i]];
  return out;
}

}  // namespace rlab
