#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/kernel.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/polynomial.hpp"
#include "finsleroid/pseudo.hpp"

namespace finsleroid {

using json = nlohmann::json;

struct Sample {
  Vec x;
  Vec y;
};

/// Per-coordinate interval [lo, hi].
using Box = std::vector<std::pair<double, double>>;

struct RandomSampling {
  int count = 0;
  std::uint64_t seed = 0;
  Box x_box;
  Box y_box;
};

struct Scenario {
  std::string id;
  FieldSet fields;
  std::vector<Sample> explicit_samples;
  std::optional<RandomSampling> random;
  std::map<std::string, double> tolerances;

  int dim() const noexcept { return fields.dim; }
  Signature signature() const noexcept { return fields.signature; }
};

namespace detail {

[[noreturn]] inline void schema_fail(const std::string& msg) { throw Error(Errc::SchemaError, msg); }

inline double as_number(const json& j, const std::string& what) {
  if (!j.is_number()) schema_fail(what + " must be a number");
  return j.get<double>();
}

inline Vec as_vector(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    schema_fail(what + " must be an array of " + std::to_string(n) + " numbers");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = as_number(j[static_cast<std::size_t>(i)], what);
  return v;
}

inline Mat as_matrix(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    schema_fail(what + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " array");
  }
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m.row(i) = as_vector(j[static_cast<std::size_t>(i)], n, what).transpose();
  return m;
}

inline Polynomial::Exponents as_powers(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    schema_fail(what + " powers must list " + std::to_string(n) + " exponents");
  }
  Polynomial::Exponents e;
  for (const auto& p : j) {
    if (!p.is_number_integer() || p.get<long long>() < 0) schema_fail(what + " powers must be non-negative integers");
    e.push_back(static_cast<int>(p.get<long long>()));
  }
  return e;
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema_fail(where + " is missing key \"" + key + "\"");
  return j.at(key);
}

/// Parses one field spec into `rows x cols` polynomials (row-major).
/// Shapes: scalar (0), vector (1) or matrix (2).
inline std::vector<Polynomial> parse_field(const json& spec, int n, int rank, const std::string& name) {
  const std::size_t count = rank == 0 ? 1u : rank == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n * n);
  const std::string kind = [&] {
    const json& k = require(spec, "kind", "field " + name);
    if (!k.is_string()) schema_fail("field " + name + " kind must be a string");
    return k.get<std::string>();
  }();
  auto flatten = [&](const json& v, const std::string& what) {
    std::vector<double> out;
    if (rank == 0) {
      out.push_back(as_number(v, what));
    } else if (rank == 1) {
      const Vec x = as_vector(v, n, what);
      out.assign(x.data(), x.data() + n);
    } else {
      const Mat m = as_matrix(v, n, what);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) out.push_back(m(i, k));
      }
    }
    return out;
  };
  std::vector<Polynomial> polys(count, Polynomial(n));
  if (kind == "constant") {
    const auto vals = flatten(require(spec, "value", "field " + name), "field " + name + " value");
    for (std::size_t i = 0; i < count; ++i) polys[i] = Polynomial::constant(n, vals[i]);
  } else if (kind == "polynomial") {
    const json& terms = require(spec, "terms", "field " + name);
    if (!terms.is_array()) schema_fail("field " + name + " terms must be an array");
    for (const auto& t : terms) {
      const auto vals = flatten(require(t, "coeff", "term of field " + name), "field " + name + " coeff");
      const auto powers = as_powers(require(t, "powers", "term of field " + name), n, "field " + name);
      for (std::size_t i = 0; i < count; ++i) polys[i].add_term(vals[i], powers);
    }
  } else {
    schema_fail("field " + name + " kind must be \"constant\" or \"polynomial\", got \"" + kind + "\"");
  }
  return polys;
}

inline Box parse_box(const json& j, int n, const std::string& what) {
  auto pair_of = [&](const json& p) {
    if (!p.is_array() || p.size() != 2) schema_fail(what + " intervals must be [lo, hi]");
    const double lo = as_number(p[0], what), hi = as_number(p[1], what);
    if (!(lo <= hi)) schema_fail(what + " interval has lo > hi");
    return std::make_pair(lo, hi);
  };
  if (j.is_array() && j.size() == 2 && j[0].is_number()) return Box(static_cast<std::size_t>(n), pair_of(j));
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    schema_fail(what + " must be one [lo, hi] pair or one pair per coordinate");
  }
  Box b;
  for (const auto& p : j) b.push_back(pair_of(p));
  return b;
}

inline json box_to_json(const Box& b) {
  json j = json::array();
  for (const auto& [lo, hi] : b) j.push_back({lo, hi});
  return j;
}

inline json polys_to_json(const std::vector<Polynomial>& polys, int n, int rank) {
  bool constant = true;
  for (const auto& p : polys) constant = constant && p.is_constant();
  auto shape = [&](const std::vector<double>& v) -> json {
    if (rank == 0) return v[0];
    if (rank == 1) return v;
    json m = json::array();
    for (int i = 0; i < n; ++i) {
      m.push_back(std::vector<double>(v.begin() + i * n, v.begin() + (i + 1) * n));
    }
    return m;
  };
  const Polynomial::Exponents zero(static_cast<std::size_t>(n), 0);
  if (constant) {
    std::vector<double> v;
    for (const auto& p : polys) {
      const auto it = p.terms().find(zero);
      v.push_back(it == p.terms().end() ? 0.0 : it->second);
    }
    return {{"kind", "constant"}, {"value", shape(v)}};
  }
  std::map<Polynomial::Exponents, std::vector<double>> by_power;
  for (std::size_t i = 0; i < polys.size(); ++i) {
    for (const auto& [e, c] : polys[i].terms()) {
      auto& v = by_power.try_emplace(e, polys.size(), 0.0).first->second;
      v[i] = c;
    }
  }
  json terms = json::array();
  for (const auto& [e, v] : by_power) terms.push_back({{"coeff", shape(v)}, {"powers", e}});
  return {{"kind", "polynomial"}, {"terms", terms}};
}

}  // namespace detail

inline Scenario parse_scenario(const json& j, const std::string& id) {
  if (!j.is_object()) detail::schema_fail("scenario must be a JSON object");
  Scenario s;
  s.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : id;

  const json& dim = detail::require(j, "dimension", "scenario");
  if (!dim.is_number_integer() || dim.get<long long>() < 2 || dim.get<long long>() > 16) {
    detail::schema_fail("dimension must be an integer between 2 and 16");
  }
  const int n = static_cast<int>(dim.get<long long>());

  const json& sig = detail::require(j, "signature", "scenario");
  Signature signature{};
  if (sig == "pd") {
    signature = Signature::PositiveDefinite;
  } else if (sig == "sr") {
    signature = Signature::TimeSpace;
  } else {
    detail::schema_fail("signature must be \"pd\" or \"sr\"");
  }

  const json& f = detail::require(j, "fields", "scenario");
  const auto a_polys = detail::parse_field(detail::require(f, "a", "fields"), n, 2, "a");
  const auto b_polys = detail::parse_field(detail::require(f, "b", "fields"), n, 1, "b");
  const auto g_polys = detail::parse_field(detail::require(f, "g", "fields"), n, 0, "g");
  std::vector<ScalarField> a_entries, b_comps;
  for (const auto& p : a_polys) a_entries.emplace_back(p);
  for (const auto& p : b_polys) b_comps.emplace_back(p);
  try {
    s.fields = FieldSet(signature, SymmetricField(n, std::move(a_entries)), CovectorField(std::move(b_comps)),
                        ScalarField(g_polys[0]));
  } catch (const Error& e) {
    detail::schema_fail(std::string("invalid fields: ") + e.what());
  }

  if (j.contains("samples")) {
    const json& samples = j["samples"];
    auto parse_random = [&](const json& r) {
      RandomSampling rs;
      const json& count = detail::require(r, "count", "random samples");
      if (!count.is_number_integer() || count.get<long long>() < 0 || count.get<long long>() > 1000000) {
        detail::schema_fail("random sample count must be a non-negative integer");
      }
      rs.count = static_cast<int>(count.get<long long>());
      if (r.contains("seed")) {
        if (!r["seed"].is_number_unsigned()) detail::schema_fail("random seed must be a non-negative integer");
        rs.seed = r["seed"].get<std::uint64_t>();
      }
      rs.x_box = detail::parse_box(detail::require(r, "x_box", "random samples"), n, "x_box");
      rs.y_box = detail::parse_box(detail::require(r, "y_box", "random samples"), n, "y_box");
      s.random = rs;
    };
    auto parse_explicit = [&](const json& e) {
      s.explicit_samples.push_back(
          {detail::as_vector(detail::require(e, "x", "sample"), n, "sample x"),
           detail::as_vector(detail::require(e, "y", "sample"), n, "sample y")});
    };
    if (samples.is_array()) {
      for (const auto& e : samples) {
        if (e.is_object() && e.contains("random")) {
          parse_random(e["random"]);
        } else {
          parse_explicit(e);
        }
      }
    } else if (samples.is_object()) {
      if (samples.contains("explicit")) {
        if (!samples["explicit"].is_array()) detail::schema_fail("explicit samples must be an array");
        for (const auto& e : samples["explicit"]) parse_explicit(e);
      }
      if (samples.contains("random")) parse_random(samples["random"]);
      if (!samples.contains("explicit") && !samples.contains("random")) {
        detail::schema_fail("samples object needs \"explicit\" and/or \"random\"");
      }
    } else {
      detail::schema_fail("samples must be an array or an object");
    }
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) detail::schema_fail("tolerances must be an object of name: value");
    for (const auto& [k, v] : t.items()) {
      const double x = detail::as_number(v, "tolerance " + k);
      if (!(x >= 0.0)) detail::schema_fail("tolerance " + k + " must be non-negative");
      s.tolerances[k] = x;
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::schema_fail("cannot read scenario file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    detail::schema_fail("scenario " + path + " is not valid JSON: " + e.what());
  }
  std::string id = path;
  const auto slash = id.find_last_of("/\\");
  if (slash != std::string::npos) id = id.substr(slash + 1);
  if (id.size() > 5 && id.ends_with(".json")) id.resize(id.size() - 5);
  return parse_scenario(j, id);
}

inline json scenario_to_json(const Scenario& s) {
  const int n = s.dim();
  std::vector<Polynomial> a, b;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) a.push_back(s.fields.a.entry(i, k).polynomial());
    b.push_back(s.fields.b.component(i).polynomial());
  }
  json j;
  j["id"] = s.id;
  j["dimension"] = n;
  j["signature"] = to_string(s.signature());
  j["fields"] = {{"a", detail::polys_to_json(a, n, 2)},
                 {"b", detail::polys_to_json(b, n, 1)},
                 {"g", detail::polys_to_json({s.fields.g.polynomial()}, n, 0)}};
  json samples = json::object();
  if (!s.explicit_samples.empty()) {
    json e = json::array();
    for (const auto& smp : s.explicit_samples) {
      e.push_back({{"x", std::vector<double>(smp.x.data(), smp.x.data() + n)},
                   {"y", std::vector<double>(smp.y.data(), smp.y.data() + n)}});
    }
    samples["explicit"] = e;
  }
  if (s.random) {
    samples["random"] = {{"count", s.random->count},
                         {"seed", s.random->seed},
                         {"x_box", detail::box_to_json(s.random->x_box)},
                         {"y_box", detail::box_to_json(s.random->y_box)}};
  }
  if (!samples.empty()) j["samples"] = samples;
  if (!s.tolerances.empty()) j["tolerances"] = s.tolerances;
  return j;
}

/// Checks that y is an admissible tangent vector at the (already validated)
/// point p; throws the kernel's domain error otherwise.
inline void check_admissible(const PointData& p, const Vec& y) {
  if (p.signature == Signature::PositiveDefinite) {
    (void)eval_kernel(p, y);
  } else {
    (void)eval_pseudo_kernel(p, y);
  }
}

/// Uniform doubles in [0, 1) from the top 53 bits of a 64-bit Mersenne
/// twister, so sample sets do not depend on the standard library's
/// distribution implementation.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : eng_(seed) {}
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double in(double lo, double hi) { return lo + (hi - lo) * unit(); }
  Vec in_box(const Box& b) {
    Vec v(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) v(static_cast<Eigen::Index>(i)) = in(b[i].first, b[i].second);
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

/// Random time-space vectors closer than this (relative to max |y^i|) to
/// the light cone or to B = 0 are redrawn: inside that layer finite
/// differences of F^2 in double precision cannot resolve g_ij to the
/// tolerances the checks use.
inline constexpr double kTimeSpaceSampleMargin = 0.05;

/// Explicit samples (validated, errors propagate) followed by random
/// samples. Random points must satisfy the field constraints; random
/// vectors are redrawn until admissible, which matters in the time-space
/// case where only a cone of vectors is usable.
inline std::vector<Sample> scenario_samples(const Scenario& s, std::optional<std::uint64_t> seed_override = {}) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < s.explicit_samples.size(); ++i) {
    const auto& smp = s.explicit_samples[i];
    try {
      check_admissible(evaluate_point(s.fields, smp.x), smp.y);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.message());
    }
    out.push_back(smp);
  }
  if (!s.random || s.random->count == 0) return out;
  SampleRng rng(seed_override.value_or(s.random->seed));
  const int max_tries = 10000;
  for (int i = 0; i < s.random->count; ++i) {
    const Vec x = rng.in_box(s.random->x_box);
    PointData p;
    try {
      p = evaluate_point(s.fields, x);
    } catch (const Error& e) {
      throw Error(e.code(), "random sample " + std::to_string(i) + ": " + e.message());
    }
    bool found = false;
    for (int t = 0; t < max_tries && !found; ++t) {
      const Vec y = rng.in_box(s.random->y_box);
      try {
        check_admissible(p, y);
        if (p.signature == Signature::TimeSpace &&
            pseudo_regularity_margin(eval_pseudo_kernel(p, y), y) < kTimeSpaceSampleMargin) {
          continue;
        }
        out.push_back({x, y});
        found = true;
      } catch (const Error& e) {
        if (!e.is_domain_error()) throw;
      }
    }
    if (!found) {
      throw Error(Errc::SchemaError, "y_box holds no admissible vector at random sample " + std::to_string(i));
    }
  }
  return out;
}

/// Built-in reference scenarios.
namespace scenarios {

inline Polynomial var(int n, int i) { return Polynomial::variable(n, i); }
inline Polynomial cst(int n, double v) { return Polynomial::constant(n, v); }

inline RandomSampling box_sampling(int n, int count, std::uint64_t seed, double x_half, double y_half) {
  return {count, seed, Box(static_cast<std::size_t>(n), {-x_half, x_half}),
          Box(static_cast<std::size_t>(n), {-y_half, y_half})};
}

inline Scenario make(std::string id, FieldSet f, std::optional<RandomSampling> r, std::vector<Sample> e = {}) {
  Scenario s;
  s.id = std::move(id);
  s.fields = std::move(f);
  s.random = std::move(r);
  s.explicit_samples = std::move(e);
  return s;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

/// Flat metric, b = (0.8, 0, 0), g = 0.5.
inline Scenario s1() {
  FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)),
             CovectorField::constant(vec({0.8, 0, 0})), ScalarField::constant(3, 0.5));
  return make("S1", std::move(f), box_sampling(3, 20, 1, 1.0, 1.0), {{Vec::Zero(3), vec({1, 1, 1})}});
}

inline CovectorField varying_b() {
  return CovectorField({ScalarField(cst(3, 0.7) + 0.05 * var(3, 1) * var(3, 1)), ScalarField::constant(3, 0.0),
                        ScalarField::constant(3, 0.0)});
}

inline ScalarField varying_g() { return ScalarField(cst(3, 0.5) + 0.1 * var(3, 0)); }

/// b_1 = 0.7 + 0.05 (x^2)^2 varies, g = 0.5.
inline Scenario s2() {
  FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)), varying_b(),
             ScalarField::constant(3, 0.5));
  return make("S2", std::move(f), box_sampling(3, 20, 2, 1.0, 1.0), {{vec({0, 1, 0}), vec({1, 1, 1})}});
}

/// b constant, g = 0.5 + 0.1 x^1 varies.
inline Scenario s3() {
  FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)),
             CovectorField::constant(vec({0.8, 0, 0})), varying_g());
  return make("S3", std::move(f), box_sampling(3, 20, 3, 1.0, 1.0), {{Vec::Zero(3), vec({1, 1, 1})}});
}

/// Both b and g vary.
inline Scenario s23() {
  FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)), varying_b(), varying_g());
  return make("S23", std::move(f), box_sampling(3, 20, 23, 1.0, 1.0), {{vec({0, 1, 0}), vec({1, 1, 1})}});
}

/// S1 written in curvilinear coordinates: the Cartesian coordinates of S1
/// are z^1 = x^1 + 0.05 sum_j (x^j)^2 and z^i = x^i otherwise, and a, b are
/// pulled back exactly through the polynomial Jacobian dz/dx.
inline Scenario s4() {
  const int n = 3;
  std::vector<std::vector<Polynomial>> jac(n, std::vector<Polynomial>(n, Polynomial(n)));
  Polynomial z0 = var(n, 0);
  for (int j = 0; j < n; ++j) z0 = z0 + 0.05 * var(n, j) * var(n, j);
  for (int j = 0; j < n; ++j) {
    jac[0][static_cast<std::size_t>(j)] = z0.derivative(j);
    for (int i = 1; i < n; ++i) jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cst(n, i == j ? 1.0 : 0.0);
  }
  std::vector<ScalarField> a, b;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Polynomial e(n);
      for (int k = 0; k < n; ++k) {
        e = e + jac[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                    jac[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      }
      a.emplace_back(e);
    }
    b.emplace_back(0.8 * jac[0][static_cast<std::size_t>(i)]);
  }
  FieldSet f(Signature::PositiveDefinite, SymmetricField(n, std::move(a)), CovectorField(std::move(b)),
             ScalarField::constant(n, 0.5));
  return make("S4", std::move(f), box_sampling(3, 20, 4, 1.0, 1.0), {{vec({0.2, -0.3, 0.4}), vec({1, 1, 1})}});
}

/// Time-space signature diag(1, -1, -1, -1), b = (0.8, 0, 0, 0), g = 0.5.
inline Scenario s5() {
  Mat a = Mat::Identity(4, 4);
  a(1, 1) = a(2, 2) = a(3, 3) = -1.0;
  FieldSet f(Signature::TimeSpace, SymmetricField::constant(a), CovectorField::constant(vec({0.8, 0, 0, 0})),
             ScalarField::constant(4, 0.5));
  RandomSampling r{20, 5, Box(4, {-1.0, 1.0}), Box{{0.5, 1.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}}};
  return make("S5", std::move(f), r, {{Vec::Zero(4), vec({1, 0.8, 0, 0})}});
}

inline std::optional<Scenario> by_name(const std::string& name) {
  if (name == "S1") return s1();
  if (name == "S2") return s2();
  if (name == "S3") return s3();
  if (name == "S23") return s23();
  if (name == "S4") return s4();
  if (name == "S5") return s5();
  return std::nullopt;
}

}  // namespace scenarios

}  // namespace finsleroid
