// Command-line front end: check, spray, geodesic, report.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finsleroid/checks.hpp"
#include "finsleroid/report.hpp"
#include "finsleroid/scenario.hpp"
#include "finsleroid/spray.hpp"

namespace {

using namespace finsleroid;

constexpr int kPass = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;

int input_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kInputError;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Vec to_vec(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim) {
    throw Error(Errc::SchemaError, std::string(what) + " needs " + std::to_string(dim) + " components, got " +
                                       std::to_string(v.size()));
  }
  return Eigen::Map<const Vec>(v.data(), dim);
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::SchemaError, "--tol-override expects key=value, got " + item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) throw Error(Errc::SchemaError, "--tol-override value is not a number: " + item);
    out[key] = v;
  }
  return out;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return static_cast<bool>(out);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << (v == 0.0 ? 0.0 : v);
  return os.str();
}

std::string fmt(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v(i));
  os << ")";
  return os.str();
}

struct CheckArgs {
  std::string scenario;
  std::string out;
  std::string csv;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool no_timestamp = false;
  unsigned threads = 0;
};

int cmd_check(const CheckArgs& a) {
  Report r;
  try {
    const Scenario sc = load_scenario(a.scenario);
    SuiteOptions opt;
    opt.seed = a.seed;
    opt.overrides = parse_overrides(a.overrides);
    opt.threads = a.threads;
    r = run_check_suite(sc, opt);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  if (!a.no_timestamp) r.timestamp = utc_timestamp();
  const std::string text = to_json(r).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else if (!write_file(a.out, text)) {
    return input_error("cannot write " + a.out);
  }
  if (!a.csv.empty() && !write_file(a.csv, render_csv(r))) return input_error("cannot write " + a.csv);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  const ReportSummary s = r.summary();
  std::cerr << r.scenario << ": " << s.passed << " passed, " << s.failed << " failed, " << s.skipped << " skipped\n";
  return s.failed == 0 ? kPass : kCheckFailed;
}

int cmd_spray(const std::string& path, const std::vector<double>& xs, const std::vector<double>& ys) {
  try {
    const Scenario sc = load_scenario(path);
    if (sc.signature() != Signature::PositiveDefinite) {
      return input_error("spray coefficients are only defined for positive-definite scenarios");
    }
    const Vec x = to_vec(xs, sc.dim(), "--x");
    const Vec y = to_vec(ys, sc.dim(), "--y");
    const SprayData sd = spray_closed_form(sc.fields, x, y);
    const auto oracle = spray_oracle(sc.fields, x, y);
    const double scale = std::max({max_abs(oracle.value), max_abs(sd.G), 1e-300});
    std::cout << "drift      " << fmt(sd.drift) << "\n"
              << "torsion    " << fmt(sd.torsion) << "\n"
              << "E          " << fmt(sd.E) << "\n"
              << "riemannian " << fmt(sd.riemann) << "\n"
              << "G          " << fmt(sd.G) << "\n"
              << "oracle     " << fmt(oracle.value) << "\n"
              << "rel_error  " << fmt(max_abs(Vec(sd.G - oracle.value)) / scale) << "\n"
              << "M          " << fmt(sd.M) << "\n";
    return kPass;
  } catch (const Error& e) {
    return input_error(e.what());
  }
}

int cmd_geodesic(const std::string& path, const std::vector<double>& x0s, const std::vector<double>& y0s, double t_end,
                 double step, const std::string& out_path) {
  Scenario sc;
  Vec x0, y0;
  try {
    sc = load_scenario(path);
    if (sc.signature() != Signature::PositiveDefinite) {
      return input_error("geodesics are only integrated for positive-definite scenarios");
    }
    x0 = to_vec(x0s, sc.dim(), "--x0");
    y0 = to_vec(y0s, sc.dim(), "--y0");
    if (!(step > 0.0) || !(t_end >= 0.0)) return input_error("--step must be positive and --t-end non-negative");
    (void)eval_kernel(evaluate_point(sc.fields, x0), y0);
  } catch (const Error& e) {
    return input_error(e.what());
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) return input_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  const int n = sc.dim();
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < n; ++i) out << ",y" << i;
  out << ",K,residual\n";
  out << std::setprecision(17);
  try {
    integrate_geodesic(sc.fields, x0, y0, t_end, step, [&](const GeodesicState& s) {
      out << s.t;
      for (int i = 0; i < n; ++i) out << ',' << s.x(i);
      for (int i = 0; i < n; ++i) out << ',' << s.y(i);
      out << ',' << s.K << ',' << s.residual << '\n';
    });
  } catch (const Error& e) {
    out.flush();
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  out.flush();
  return kPass;
}

int cmd_report(const std::string& path, const std::string& format) {
  Report r;
  try {
    std::ifstream in(path);
    if (!in) return input_error("cannot read report " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      return input_error(std::string("malformed report: ") + e.what());
    }
    r = report_from_json(j);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  std::cout << (format == "csv" ? render_csv(r) : render_table(r));
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsleroid-regular metric verification harness"};
  app.set_version_flag("--version", std::string(finsleroid::kToolVersion));
  app.require_subcommand(1);

  CheckArgs ca;
  std::uint64_t seed = 0;
  auto* check = app.add_subcommand("check", "run the identity, oracle and Berwald batteries on a scenario");
  check->add_option("scenario", ca.scenario, "scenario JSON file")->required();
  check->add_option("--out", ca.out, "write the JSON report here (default: stdout)");
  check->add_option("--csv", ca.csv, "also write the records as CSV");
  auto* seed_opt = check->add_option("--seed", seed, "seed for the random samples");
  check->add_option("--tol-override", ca.overrides, "override a tolerance, key=value (repeatable)");
  check->add_flag("--no-timestamp", ca.no_timestamp, "omit the timestamp so reports are byte-identical");
  check->add_option("--threads", ca.threads, "worker threads (0: all cores)");

  std::string spray_path;
  std::vector<double> sx, sy;
  auto* spray = app.add_subcommand("spray", "print the spray decomposition at one point");
  spray->add_option("scenario", spray_path, "scenario JSON file")->required();
  spray->add_option("--x", sx, "point, comma separated")->required()->delimiter(',');
  spray->add_option("--y", sy, "tangent vector, comma separated")->required()->delimiter(',');

  std::string geo_path, geo_out;
  std::vector<double> gx, gy;
  double t_end = 1.0, step = 1e-3;
  auto* geo = app.add_subcommand("geodesic", "integrate x'' + G(x, x') = 0 and write a CSV trajectory");
  geo->add_option("scenario", geo_path, "scenario JSON file")->required();
  geo->add_option("--x0", gx, "initial point, comma separated")->required()->delimiter(',');
  geo->add_option("--y0", gy, "initial velocity, comma separated")->required()->delimiter(',');
  geo->add_option("--t-end", t_end, "final parameter value");
  geo->add_option("--step", step, "fixed step size");
  geo->add_option("--out", geo_out, "CSV output (default: stdout)");

  std::string report_path, format = "table";
  auto* rep = app.add_subcommand("report", "render a JSON report as a table or CSV");
  rep->add_option("report", report_path, "report JSON file")->required();
  rep->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  if (check->parsed()) {
    if (seed_opt->count() > 0) ca.seed = seed;
    return cmd_check(ca);
  }
  if (spray->parsed()) return cmd_spray(spray_path, sx, sy);
  if (geo->parsed()) return cmd_geodesic(geo_path, gx, gy, t_end, step, geo_out);
  return cmd_report(report_path, format);
}
