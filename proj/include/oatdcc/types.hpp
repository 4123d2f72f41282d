#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace oatdcc {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

/// Dense rank-4 tensor, row-major, templated on scalar.
template <typename Scalar>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t d0, std::size_t d1, std::size_t d2, std::size_t d3)
      : dims_{d0, d1, d2, d3}, data_(d0 * d1 * d2 * d3, Scalar(0)) {}

  Scalar& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[index(i, j, k, l)];
  }
  const Scalar& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[index(i, j, k, l)];
  }

  std::size_t dim(int n) const { return dims_[n]; }
  const std::array<std::size_t, 4>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  /// Flat view for whole-tensor arithmetic.
  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> flat() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  Tensor4& operator+=(const Tensor4& o) {
    assert(dims_ == o.dims_);
    flat() += o.flat();
    return *this;
  }
  Tensor4& operator-=(const Tensor4& o) {
    assert(dims_ == o.dims_);
    flat() -= o.flat();
    return *this;
  }
  Tensor4& operator*=(Scalar s) {
    flat() *= s;
    return *this;
  }
  friend Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
  friend Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
  friend Tensor4 operator*(Scalar s, Tensor4 a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, static_cast<double>(std::abs(v)));
    return m;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    assert(i < dims_[0] && j < dims_[1] && k < dims_[2] && l < dims_[3]);
    return ((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l;
  }

  std::array<std::size_t, 4> dims_{0, 0, 0, 0};
  std::vector<Scalar> data_;
};

using Tensor4c = Tensor4<cplx>;

inline double max_abs(const Tensor4c& a, const Tensor4c& b) { return (a - b).max_abs(); }

}  // namespace oatdcc
