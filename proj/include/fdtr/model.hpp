#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdtr/core.hpp"

namespace fdtr {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// First-order model R(c) + J (x - c) of the response around a center c.
/// jacobian is m x D (dB per unit parameter).
struct LinearModel {
  DesignVector center;
  ResponseCurve center_response;
  Matrix jacobian;

  std::size_t dimension() const noexcept { return jacobian.cols(); }
  std::size_t samples() const noexcept { return jacobian.rows(); }
};

ResponseCurve model_predict(const LinearModel& model, const DesignVector& x);

}  // namespace fdtr
