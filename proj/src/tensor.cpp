#include "tse/tensor.hpp"

#include <cmath>
#include <string>

#include "tse/errors.hpp"

namespace tse {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tanh_fn(double x) { return std::tanh(x); }

Vector matvec(const Matrix& w, const Vector& v) {
  if (w.cols != v.size()) {
    throw ValidationError("matvec: matrix is " + std::to_string(w.rows) + "x" +
                          std::to_string(w.cols) + " but vector has length " +
                          std::to_string(v.size()));
  }
  Vector out(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& w, const Vector& u) {
  if (w.rows != u.size()) {
    throw ValidationError("matvec_transposed: matrix is " + std::to_string(w.rows) +
                          "x" + std::to_string(w.cols) + " but vector has length " +
                          std::to_string(u.size()));
  }
  Vector out(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    const double ur = u[r];
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += wr[c] * ur;
  }
  return out;
}

Matrix outer(const Vector& u, const Vector& v) {
  Matrix m(u.size(), v.size());
  for (std::size_t r = 0; r < u.size(); ++r) {
    double* mr = m.row(r);
    for (std::size_t c = 0; c < v.size(); ++c) mr[c] = u[r] * v[c];
  }
  return m;
}

Vector concat(const Vector& h, const Vector& x) {
  Vector out;
  out.reserve(h.size() + x.size());
  out.insert(out.end(), h.begin(), h.end());
  out.insert(out.end(), x.begin(), x.end());
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("hadamard: length mismatch " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("add: length mismatch " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void axpy(Vector& a, double s, const Vector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("axpy: length mismatch");
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

void axpy(Matrix& a, double s, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ValidationError("axpy: shape mismatch");
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const Matrix& m) {
  for (double x : m.data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace tse
