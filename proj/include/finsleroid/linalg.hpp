#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace finsleroid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense rank-3 array over a single dimension, indexed (i, j, k).
template <class T>
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n, T fill = T{0})
      : n_(n), data_(static_cast<std::size_t>(n) * n * n, fill) {}

  int dim() const noexcept { return n_; }

  T& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  Tensor3& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }

  int n_ = 0;
  std::vector<T> data_;
};

template <class T>
double max_abs(const Tensor3<T>& t) {
  double m = 0.0;
  for (const auto& v : t.data()) m = std::max(m, static_cast<double>(std::abs(v)));
  return m;
}

template <class T>
double max_abs_diff(const Tensor3<T>& a, const Tensor3<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, static_cast<double>(std::abs(a.data()[i] - b.data()[i])));
  }
  return m;
}

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

inline double max_abs(double v) { return std::abs(v); }

/// |lhs - rhs|_inf / max(|lhs|_inf, |rhs|_inf, floor)
template <class A, class B>
double relative_residual(const Eigen::MatrixBase<A>& lhs, const Eigen::MatrixBase<B>& rhs,
                         double floor = 1e-300) {
  const double scale = std::max({max_abs(lhs), max_abs(rhs), floor});
  return max_abs(lhs - rhs) / scale;
}

inline double relative_residual(double lhs, double rhs, double floor = 1e-300) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), floor});
}

inline Mat outer(const Vec& a, const Vec& b) { return a * b.transpose(); }

inline Vec symmetric_eigenvalues(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace finsleroid
