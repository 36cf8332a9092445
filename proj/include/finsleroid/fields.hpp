#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "finsleroid/error.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/polynomial.hpp"

namespace finsleroid {

enum class Signature { PositiveDefinite, TimeSpace };

inline const char* to_string(Signature s) {
  return s == Signature::PositiveDefinite ? "pd" : "sr";
}

namespace detail {
inline std::span<const double> as_span(const Vec& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}
}  // namespace detail

/// Scalar field given by a polynomial, with its gradient precomputed.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Polynomial p) : poly_(std::move(p)) {
    for (int k = 0; k < poly_.num_vars(); ++k) grad_.push_back(poly_.derivative(k));
  }

  static ScalarField constant(int dim, double v) { return ScalarField(Polynomial::constant(dim, v)); }

  const Polynomial& polynomial() const noexcept { return poly_; }
  bool is_constant() const noexcept { return poly_.is_constant(); }

  double value(const Vec& x) const { return poly_(detail::as_span(x)); }

  Vec gradient(const Vec& x) const {
    Vec g(static_cast<Eigen::Index>(grad_.size()));
    for (std::size_t k = 0; k < grad_.size(); ++k) g(static_cast<Eigen::Index>(k)) = grad_[k](detail::as_span(x));
    return g;
  }

 private:
  Polynomial poly_;
  std::vector<Polynomial> grad_;
};

/// Covector field b_i(x).
class CovectorField {
 public:
  CovectorField() = default;
  explicit CovectorField(std::vector<ScalarField> components) : comps_(std::move(components)) {}

  static CovectorField constant(const Vec& v) {
    std::vector<ScalarField> c;
    for (Eigen::Index i = 0; i < v.size(); ++i) c.push_back(ScalarField::constant(static_cast<int>(v.size()), v(i)));
    return CovectorField(std::move(c));
  }

  int dim() const noexcept { return static_cast<int>(comps_.size()); }
  const ScalarField& component(int i) const { return comps_.at(static_cast<std::size_t>(i)); }

  bool is_constant() const noexcept {
    for (const auto& c : comps_) {
      if (!c.is_constant()) return false;
    }
    return true;
  }

  Vec value(const Vec& x) const {
    Vec v(dim());
    for (int i = 0; i < dim(); ++i) v(i) = comps_[static_cast<std::size_t>(i)].value(x);
    return v;
  }

  /// J(m, n) = d b_n / d x^m
  Mat jacobian(const Vec& x) const {
    Mat j(dim(), dim());
    for (int n = 0; n < dim(); ++n) j.col(n) = comps_[static_cast<std::size_t>(n)].gradient(x);
    return j;
  }

 private:
  std::vector<ScalarField> comps_;
};

/// Symmetric rank-2 field a_ij(x). Construction rejects asymmetric input.
class SymmetricField {
 public:
  SymmetricField() = default;

  SymmetricField(int dim, std::vector<ScalarField> entries) : dim_(dim), entries_(std::move(entries)) {
    if (static_cast<int>(entries_.size()) != dim * dim) {
      throw Error(Errc::SchemaError, "rank-2 field needs dim*dim entries");
    }
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) {
        if (entry(i, j).polynomial().terms() != entry(j, i).polynomial().terms()) {
          std::ostringstream os;
          os << "metric field is not symmetric in entry (" << i << "," << j << ")";
          throw Error(Errc::SchemaError, os.str());
        }
      }
    }
  }

  static SymmetricField constant(const Mat& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<ScalarField> e;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) e.push_back(ScalarField::constant(n, m(i, j)));
    }
    return SymmetricField(n, std::move(e));
  }

  int dim() const noexcept { return dim_; }
  const ScalarField& entry(int i, int j) const { return entries_.at(static_cast<std::size_t>(i * dim_ + j)); }

  bool is_constant() const noexcept {
    for (const auto& e : entries_) {
      if (!e.is_constant()) return false;
    }
    return true;
  }

  Mat value(const Vec& x) const {
    Mat m(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) m(i, j) = entry(i, j).value(x);
    }
    return m;
  }

  /// Returns d[k](i, j) = d a_ij / d x^k.
  std::vector<Mat> partials(const Vec& x) const {
    std::vector<Mat> d(static_cast<std::size_t>(dim_), Mat(dim_, dim_));
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        const Vec gr = entry(i, j).gradient(x);
        for (int k = 0; k < dim_; ++k) d[static_cast<std::size_t>(k)](i, j) = gr(k);
      }
    }
    return d;
  }

 private:
  int dim_ = 0;
  std::vector<ScalarField> entries_;
};

/// Background data defining the space: metric a_ij, axis 1-form b_i and
/// charge g, all polynomial in x. Immutable after construction.
struct FieldSet {
  int dim = 0;
  Signature signature = Signature::PositiveDefinite;
  SymmetricField a;
  CovectorField b;
  ScalarField g;

  FieldSet() = default;
  FieldSet(Signature sig, SymmetricField a_field, CovectorField b_field, ScalarField g_field)
      : dim(a_field.dim()), signature(sig), a(std::move(a_field)), b(std::move(b_field)), g(std::move(g_field)) {
    if (dim < 2) throw Error(Errc::SchemaError, "dimension must be at least 2");
    if (b.dim() != dim) throw Error(Errc::SchemaError, "1-form b has wrong dimension");
    if (g.polynomial().num_vars() != dim) throw Error(Errc::SchemaError, "charge g has wrong number of variables");
  }

  /// Copy with the charge replaced by a constant.
  FieldSet with_charge(double value) const {
    FieldSet f = *this;
    f.g = ScalarField::constant(dim, value);
    return f;
  }
};

struct MetricAt {
  Mat a;
  Mat a_inv;
  double det = 0.0;
};

inline MetricAt metric_at(const FieldSet& fields, const Vec& x) {
  MetricAt m;
  m.a = fields.a.value(x);
  const Vec ev = symmetric_eigenvalues(m.a);
  const double largest = ev.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || ev.cwiseAbs().minCoeff() <= 1e-13 * largest) {
    throw Error(Errc::SingularMetric, "metric a_ij is singular at the evaluated point");
  }
  if (fields.signature == Signature::PositiveDefinite) {
    if (ev.minCoeff() <= 0.0) throw Error(Errc::NotPositiveDefinite, "metric a_ij has a non-positive eigenvalue");
  } else {
    const auto positive = (ev.array() > 0.0).count();
    if (positive != 1) {
      throw Error(Errc::WrongSignature, "metric a_ij must have signature (+,-,...,-), found " +
                                            std::to_string(positive) + " positive eigenvalues");
    }
  }
  Eigen::PartialPivLU<Mat> lu(m.a);
  m.a_inv = lu.inverse();
  m.det = lu.determinant();
  return m;
}

/// Riemannian norm c of b at x. Outside 0 < c < 1 the positive-definite
/// space is not defined; in the time-space case only c^2 > 0 is enforced.
inline double norm_c(const FieldSet& fields, const Vec& x) {
  const MetricAt m = metric_at(fields, x);
  const Vec b = fields.b.value(x);
  const double c2 = b.dot(m.a_inv * b);
  if (!(c2 > 0.0)) {
    throw Error(Errc::NormOutOfRange, "a^ij b_i b_j = " + std::to_string(c2) + " must be positive (b non-vanishing)");
  }
  const double c = std::sqrt(c2);
  if (fields.signature == Signature::PositiveDefinite && !(c < 1.0)) {
    throw Error(Errc::NormOutOfRange, "norm c = " + std::to_string(c) + " violates 0 < c < 1");
  }
  return c;
}

/// Everything field-derived at one point x, validated once.
struct PointData {
  Vec x;
  int dim = 0;
  Signature signature = Signature::PositiveDefinite;
  Mat a;
  Mat a_inv;
  double det_a = 0.0;
  Vec b_low;
  Vec b_up;
  double c2 = 0.0;
  double c = 0.0;
  double g = 0.0;
  Vec g_grad;
  std::vector<std::string> warnings;
};

inline PointData evaluate_point(const FieldSet& fields, const Vec& x) {
  if (x.size() != fields.dim) throw Error(Errc::SchemaError, "point has wrong dimension");
  PointData p;
  p.x = x;
  p.dim = fields.dim;
  p.signature = fields.signature;
  MetricAt m = metric_at(fields, x);
  p.a = std::move(m.a);
  p.a_inv = std::move(m.a_inv);
  p.det_a = m.det;
  p.b_low = fields.b.value(x);
  p.b_up = p.a_inv * p.b_low;
  p.c2 = p.b_low.dot(p.b_up);
  if (!(p.c2 > 0.0)) {
    throw Error(Errc::NormOutOfRange, "a^ij b_i b_j = " + std::to_string(p.c2) + " must be positive (b non-vanishing)");
  }
  p.c = std::sqrt(p.c2);
  if (!(p.c < 1.0)) {
    if (fields.signature == Signature::PositiveDefinite) {
      throw Error(Errc::NormOutOfRange, "norm c = " + std::to_string(p.c) + " violates 0 < c < 1");
    }
    p.warnings.push_back("norm c = " + std::to_string(p.c) + " is not below 1 in the time-space case");
  }
  p.g = fields.g.value(x);
  p.g_grad = fields.g.gradient(x);
  if (fields.signature == Signature::PositiveDefinite && !(std::abs(p.g) < 2.0)) {
    throw Error(Errc::ConstraintViolation, "charge g = " + std::to_string(p.g) + " violates -2 < g < 2");
  }
  return p;
}

/// Christoffel symbols a^k_ij of the associated (pseudo-)Riemannian metric,
/// stored as gamma(k, i, j).
inline Tensor3<double> riemann_christoffel(const FieldSet& fields, const Vec& x) {
  const int n = fields.dim;
  const MetricAt m = metric_at(fields, x);
  const std::vector<Mat> d = fields.a.partials(x);
  Tensor3<double> lowered(n);  // lowered(l, i, j) = Gamma_{l, ij}
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        lowered(l, i, j) = 0.5 * (d[static_cast<std::size_t>(j)](l, i) + d[static_cast<std::size_t>(i)](l, j) -
                                  d[static_cast<std::size_t>(l)](j, i));
      }
    }
  }
  Tensor3<double> gamma(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += m.a_inv(k, l) * lowered(l, i, j);
        gamma(k, i, j) = s;
      }
    }
  }
  return gamma;
}

/// nabla(i, j) = d_i b_j - b_k a^k_ij
inline Mat covariant_derivative_b(const FieldSet& fields, const Vec& x) {
  const int n = fields.dim;
  const Tensor3<double> gamma = riemann_christoffel(fields, x);
  const Vec b = fields.b.value(x);
  Mat nabla = fields.b.jacobian(x);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += b(k) * gamma(k, i, j);
      nabla(i, j) -= s;
    }
  }
  return nabla;
}

/// Curl of b and its contractions with y.
struct FTensors {
  Mat f;      // f(m, n) = d_m b_n - d_n b_m
  Vec f_low;  // f_j = f_jn y^n
  Vec f_up;   // f^i = a^ik f_kn y^n
};

inline FTensors f_tensors(const FieldSet& fields, const Vec& x, const Vec& y) {
  FTensors t;
  const Mat j = fields.b.jacobian(x);
  t.f = j - j.transpose();
  t.f_low = t.f * y;
  t.f_up = metric_at(fields, x).a_inv * t.f_low;
  return t;
}

struct ChargeGradient {
  Vec g_h;
  double yg = 0.0;
};

inline ChargeGradient charge_gradient(const FieldSet& fields, const Vec& x, const Vec& y) {
  ChargeGradient cg;
  cg.g_h = fields.g.gradient(x);
  cg.yg = cg.g_h.dot(y);
  return cg;
}

}  // namespace finsleroid
