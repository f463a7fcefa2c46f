#pragma once

#include <cstddef>
#include <vector>

namespace tse {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. All shapes in this project are small
// (tens of rows/columns), so there is no view machinery and no sparsity.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows*cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  Vector row_vector(std::size_t r) const {
    return Vector(row(r), row(r) + cols);
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  static Matrix identity(std::size_t n);
};

// Numerically stable logistic sigmoid; the naive 1/(1+e^-x) overflows for
// large negative x.
double sigmoid(double x);

double tanh_fn(double x);

// y = W v. Throws ValidationError on shape mismatch.
Vector matvec(const Matrix& w, const Vector& v);

// y = W^T u (u has length w.rows).
Vector matvec_transposed(const Matrix& w, const Vector& u);

// u v^T as a len(u) x len(v) matrix.
Matrix outer(const Vector& u, const Vector& v);

// [h, x]: h first, then x.
Vector concat(const Vector& h, const Vector& x);

Vector hadamard(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);

// a += s * b
void axpy(Vector& a, double s, const Vector& b);
void axpy(Matrix& a, double s, const Matrix& b);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

}  // namespace tse
