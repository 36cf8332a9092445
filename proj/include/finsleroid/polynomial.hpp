#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsleroid/error.hpp"

namespace finsleroid {

/// Multivariate polynomial with real coefficients in a fixed number of
/// variables. Terms are keyed by their exponent vector, so arithmetic and
/// differentiation are exact (no truncation).
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  Polynomial() = default;
  explicit Polynomial(int num_vars) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double value) {
    Polynomial p(num_vars);
    p.add_term(value, Exponents(static_cast<std::size_t>(num_vars), 0));
    return p;
  }

  static Polynomial variable(int num_vars, int index) {
    Polynomial p(num_vars);
    Exponents e(static_cast<std::size_t>(num_vars), 0);
    e.at(static_cast<std::size_t>(index)) = 1;
    p.add_term(1.0, e);
    return p;
  }

  int num_vars() const noexcept { return num_vars_; }

  void add_term(double coeff, const Exponents& powers) {
    if (static_cast<int>(powers.size()) != num_vars_) {
      throw Error(Errc::SchemaError, "monomial has " + std::to_string(powers.size()) +
                                         " exponents, expected " + std::to_string(num_vars_));
    }
    for (int p : powers) {
      if (p < 0) throw Error(Errc::SchemaError, "negative exponent in monomial");
    }
    if (coeff == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(powers, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  const std::map<Exponents, double>& terms() const noexcept { return terms_; }

  bool is_zero() const noexcept { return terms_.empty(); }

  int degree() const noexcept {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int p : e) s += p;
      d = std::max(d, s);
    }
    return d;
  }

  bool is_constant() const noexcept { return degree() == 0; }

  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != num_vars_) {
      throw std::invalid_argument("polynomial evaluated at point of wrong dimension");
    }
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = c;
      for (std::size_t i = 0; i < e.size(); ++i) {
        for (int k = 0; k < e[i]; ++k) m *= x[i];
      }
      sum += m;
    }
    return sum;
  }

  Polynomial derivative(int var) const {
    Polynomial d(num_vars_);
    const auto v = static_cast<std::size_t>(var);
    for (const auto& [e, c] : terms_) {
      if (e[v] == 0) continue;
      Exponents de = e;
      de[v] -= 1;
      d.add_term(c * e[v], de);
    }
    return d;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(c, e);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(-c, e);
    return *this;
  }

  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_compatible(b);
    Polynomial r(a.num_vars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e(ea.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(ca * cb, e);
      }
    }
    return r;
  }

  /// Substitutes x_i -> subs[i](x'), where every subs[i] shares one variable
  /// set. The result lives in that variable set.
  Polynomial compose(const std::vector<Polynomial>& subs) const {
    if (static_cast<int>(subs.size()) != num_vars_) {
      throw std::invalid_argument("compose needs one substitution per variable");
    }
    const int out_vars = subs.empty() ? 0 : subs.front().num_vars();
    Polynomial r(out_vars);
    for (const auto& [e, c] : terms_) {
      Polynomial m = constant(out_vars, c);
      for (std::size_t i = 0; i < e.size(); ++i) {
        for (int k = 0; k < e[i]; ++k) m = m * subs[i];
      }
      r += m;
    }
    return r;
  }

 private:
  void check_compatible(const Polynomial& o) const {
    if (o.num_vars_ != num_vars_) {
      throw std::invalid_argument("polynomials over different variable sets");
    }
  }

  int num_vars_ = 0;
  std::map<Exponents, double> terms_;
};

}  // namespace finsleroid
