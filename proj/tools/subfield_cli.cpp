// subfield <experiment> --config <file> [--seed N] [--out DIR] [--threads K] [section.key=value ...]
//
// Exit status: 0 success, 2 usage or config error, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "subfield/covariance.hpp"
#include "subfield/fit.hpp"
#include "subfield/moments.hpp"
#include "subfield/spectral.hpp"

namespace fs = std::filesystem;
using namespace subfield;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what) {}
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every key the runner understands, by section.
const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "out", "threads"}},
    {"model", {"covariance", "nu", "length", "sigma", "subordinator", "subordinator_y", "abs", "horizon"}},
    {"point", {"x", "y"}},
    {"grid", {"n"}},
    {"pointwise", {"samples", "alpha", "nodes", "mixture"}},
    {"charfn", {"xi_max", "nodes", "samples", "mixture"}},
    {"density", {"nodes", "cpa_samples", "cpa_eps"}},
    {"covariance", {"p", "q", "samples"}},
    {"rmse", {"p", "q", "sizes", "repeats"}},
    {"fit", {"mode", "truth", "init", "iterations"}},
    {"trace", {"ps", "sizes", "runs"}},
    {"test", {"ps", "samples", "beta", "resamples", "alpha", "runs"}},
};

// Key/value configuration: INI file plus command-line overrides, overrides
// winning. Records every value it hands out (defaults included) so the
// manifest can echo the resolved configuration.
class Config {
 public:
  void load(const std::string& file) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(file, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(file, e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw ConfigError(section, "top-level keys are not allowed; put it in a section");
      for (const auto& [key, v] : body) set(section + "." + key, v.get_value<std::string>());
    }
  }

  void set(const std::string& path, const std::string& value) {
    const auto dot = path.find('.');
    if (dot == std::string::npos) throw ConfigError(path, "expected section.key");
    const auto sec = kSchema.find(path.substr(0, dot));
    if (sec == kSchema.end()) throw ConfigError(path, "unknown section");
    if (!sec->second.count(path.substr(dot + 1))) throw ConfigError(path, "unknown key");
    raw_[path] = value;
  }

  bool has(const std::string& path) const { return raw_.count(path) > 0; }

  std::string str(const std::string& path, const std::string& def) {
    const auto it = raw_.find(path);
    std::string v = it == raw_.end() ? def : it->second;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    resolved_[path] = v;
    return v;
  }

  double num(const std::string& path, double def) {
    std::ostringstream d;
    d << std::setprecision(17) << def;
    const std::string s = str(path, d.str());
    return parse_double(path, s);
  }

  double positive(const std::string& path, double def) {
    const double v = num(path, def);
    if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
    return v;
  }

  std::size_t count(const std::string& path, std::size_t def, std::size_t min = 1) {
    const std::size_t v = to_count(path, num(path, static_cast<double>(def)));
    if (v < min) throw ConfigError(path, "must be at least " + std::to_string(min));
    return v;
  }

  bool flag(const std::string& path, bool def) {
    const std::string s = str(path, def ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(path, "expected true or false, got '" + s + "'");
  }

  // Comma or space separated, optional brackets: "1, 2, 3" or "[1 2 3]".
  std::vector<double> list(const std::string& path, const std::vector<double>& def) {
    std::ostringstream d;
    d << std::setprecision(17);
    for (std::size_t i = 0; i < def.size(); ++i) d << (i ? ", " : "") << def[i];
    std::string s = str(path, d.str());
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '[' || c == ']'; }, ' ');
    std::istringstream in(s);
    std::vector<double> out;
    for (std::string tok; in >> tok;) out.push_back(parse_double(path, tok));
    if (out.empty()) throw ConfigError(path, "empty list");
    return out;
  }

  std::vector<std::size_t> counts(const std::string& path, const std::vector<std::size_t>& def) {
    std::vector<double> d(def.begin(), def.end());
    std::vector<std::size_t> out;
    for (double v : list(path, d)) out.push_back(to_count(path, v));
    for (std::size_t k = 0; k < out.size(); ++k)
      if (out[k] == 0 || (k > 0 && out[k] <= out[k - 1])) throw ConfigError(path, "sizes must be positive and increasing");
    return out;
  }

  Point point(const std::string& path, const Point& def) {
    const auto v = list(path, def);
    if (v.size() != 2) throw ConfigError(path, "expected two coordinates");
    return v;
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  static double parse_double(const std::string& path, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError(path, "expected a number, got '" + s + "'");
    return v;
  }

  static std::size_t to_count(const std::string& path, double v) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw ConfigError(path, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  std::map<std::string, std::string> raw_;
  std::map<std::string, std::string> resolved_;
};

SubordinatorModel parse_subordinator(const std::string& path, const std::string& spec) {
  static const std::regex re(R"(\s*(gamma|poisson|student-t)\s*\(([^)]*)\)\s*)");
  std::smatch m;
  if (!std::regex_match(spec, m, re))
    throw ConfigError(path, "expected gamma(a,b), poisson(lambda) or student-t(nu), got '" + spec + "'");
  std::vector<double> args;
  std::string body = m[2];
  std::replace(body.begin(), body.end(), ',', ' ');
  std::istringstream in(body);
  for (double v; in >> v;) args.push_back(v);
  if (!in.eof()) throw ConfigError(path, "malformed arguments in '" + spec + "'");
  const std::string kind = m[1];
  try {
    if (kind == "gamma" && args.size() == 2) return SubordinatorModel::gamma(args[0], args[1]);
    if (kind == "poisson" && args.size() == 1) return SubordinatorModel::poisson(args[0]);
    if (kind == "student-t" && args.size() == 1) return SubordinatorModel::student_t(args[0]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "wrong number of arguments in '" + spec + "'");
}

FieldModel build_model(Config& cfg) {
  const std::string cov = cfg.str("model.covariance", "sqrt-scaled");
  const double nu = cfg.positive("model.nu", 1.5), r = cfg.positive("model.length", 1.0);
  const double sigma = cfg.positive("model.sigma", 2.0), horizon = cfg.positive("model.horizon", 1.0);
  const std::string sx = cfg.str("model.subordinator", "gamma(4,12)");
  const std::string sy = cfg.str("model.subordinator_y", sx);
  FieldModel model;
  model.subs = {parse_subordinator("model.subordinator", sx), parse_subordinator("model.subordinator_y", sy)};
  const bool any_t = std::any_of(model.subs.begin(), model.subs.end(), [](const auto& s) { return !s.is_subordinator(); });
  model.abs_mode = cfg.flag("model.abs", any_t);
  model.horizon = {horizon, horizon};
  try {
    if (cov == "sqrt-scaled")
      model.cov = CovarianceModel::sqrt_scaled(2, nu, r, sigma * sigma);
    else if (cov == "matern")
      model.cov = CovarianceModel::matern(2, nu, r, sigma * sigma);
    else if (cov == "brownian-sheet")
      model.cov = CovarianceModel::brownian_sheet(2);
    else
      throw ConfigError("model.covariance", "expected sqrt-scaled, matern or brownian-sheet, got '" + cov + "'");
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  return model;
}

Point checked_point(Config& cfg, const FieldModel& model, const std::string& path, const Point& def) {
  const Point x = cfg.point(path, def);
  try {
    model.check_point(x);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return x;
}

Point main_point(Config& cfg, const FieldModel& model) {
  const double x = cfg.num("point.x", 1.0), y = cfg.num("point.y", 1.0);
  try {
    model.check_point({x, y});
  } catch (const std::invalid_argument& e) {
    throw ConfigError("point", e.what());
  }
  return {x, y};
}

// Closed form where the covariance allows it, otherwise the subordinator mixture.
CharFn pointwise_charfn(const FieldModel& model, const Point& x, std::size_t n_mc, RngStream& rng) {
  try {
    return charfn_levy_khinchin(model, x);
  } catch (const UnsupportedOperation&) {
    return charfn_mixture(model, x, n_mc, rng);
  }
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << vals, first = false), ...);
    out_ << '\n';
    ++rows_;
  }
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::size_t rows_ = 0;
};

// Tracks the files of one run so they can be checksummed, or removed when
// the run fails.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  Csv open(const std::string& name, const std::vector<std::string>& header) {
    fs::create_directories(dir_);
    files_.push_back(name);
    return Csv(dir_ / name, header);
  }

  void summary(const std::string& key, nlohmann::json value) { summary_[key] = std::move(value); }

  void write_manifest(const std::string& experiment, std::uint64_t seed, std::size_t threads, const Config& cfg) {
    nlohmann::json m;
    m["experiment"] = experiment;
    m["seed"] = seed;
    m["threads"] = threads;
    m["config"] = cfg.resolved();
    m["summary"] = summary_;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : files_) files.push_back({{"file", f}, {"sha256", sha256_file(dir_ / f)}});
    m["artifacts"] = files;
    files_.push_back("manifest.json");
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest");
  }

  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f, ec);
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  nlohmann::json summary_ = nlohmann::json::object();
};

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalFailure(what + " is not finite");
}

struct Run {
  Config& cfg;
  const FieldModel& model;
  RngStream rng;
  Artifacts& out;
};

void run_sample_grid(Run& r) {
  const std::size_t n = r.cfg.count("grid.n", 65, 1);
  if (n * n > kMaxGridPoints) throw ConfigError("grid.n", "at most 100 nodes per axis");
  RngStream s = r.rng.substream(0);
  const auto g = sample_grid(s, r.model, {n, n});
  auto csv = r.out.open("grid.csv", {"x", "y", "value"});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = g.values[i * n + j];
      require_finite(v, "grid sample");
      csv.row(g.axes[0][i], g.axes[1][j], v);
    }
}

void run_pointwise_dist(Run& r) {
  const Point x = main_point(r.cfg, r.model);
  const std::size_t n = r.cfg.count("pointwise.samples", 10000, 2);
  const double alpha = r.cfg.positive("pointwise.alpha", 0.05);
  const std::size_t nodes = r.cfg.count("pointwise.nodes", 401, 2);
  const std::size_t n_mc = r.cfg.count("pointwise.mixture", 20000);
  if (alpha >= 1.0) throw ConfigError("pointwise.alpha", "must lie in (0,1)");

  RngStream s = r.rng.substream(0), c = r.rng.substream(1);
  FieldSampler sampler(r.model, {x});
  std::vector<double> samples(n), v;
  for (auto& z : samples) {
    sampler.draw(s, v);
    z = v[0];
  }
  const auto cf = pointwise_charfn(r.model, x, n_mc, c);
  const FourierInverter inv(cf);
  const TabulatedCdf tab(inv);
  const auto rep = ks_test(samples, [&](double z) { return tab(z); }, alpha);
  require_finite(rep.statistic, "KS statistic");

  auto cs = r.out.open("pointwise_samples.csv", {"index", "value"});
  for (std::size_t i = 0; i < n; ++i) cs.row(i, samples[i]);
  auto cl = r.out.open("pointwise_law.csv", {"z", "pdf", "cdf"});
  const double lo = tab.quantile(1e-4), hi = tab.quantile(1.0 - 1e-4);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double z = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nodes - 1);
    cl.row(z, inv.pdf(z), tab(z));
  }
  auto ck = r.out.open("pointwise_ks.csv", {"statistic", "threshold", "verdict", "n", "alpha", "provenance", "heavy_tail"});
  ck.row(rep.statistic, rep.threshold, verdict_name(rep.verdict), rep.n, alpha, provenance_name(cf.provenance),
         inv.heavy_tail() ? "true" : "false");
  r.out.summary("ks_verdict", verdict_name(rep.verdict));
  r.out.summary("ks_statistic", rep.statistic);
}

void run_charfn(Run& r) {
  const Point x = main_point(r.cfg, r.model);
  const double xi_max = r.cfg.positive("charfn.xi_max", 10.0);
  const std::size_t nodes = r.cfg.count("charfn.nodes", 41, 2);
  const std::size_t n = r.cfg.count("charfn.samples", 100000);
  const std::size_t n_mc = r.cfg.count("charfn.mixture", 20000);

  RngStream s = r.rng.substream(0), c = r.rng.substream(1);
  FieldSampler sampler(r.model, {x});
  std::vector<double> samples(n), v;
  for (auto& z : samples) {
    sampler.draw(s, v);
    z = v[0];
  }
  const auto emp = charfn_empirical(samples, x);
  const auto mix = charfn_mixture(r.model, x, n_mc, c);
  std::optional<CharFn> closed, sharp;
  try {
    closed = charfn_levy_khinchin(r.model, x);
    sharp = charfn_from_nusharp(r.model, x);
  } catch (const UnsupportedOperation&) {
  }
  auto csv = r.out.open("charfn.csv", {"xi", "re_closed", "re_nusharp", "re_mixture", "re_empirical", "im_empirical"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double worst = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double xi = -xi_max + 2.0 * xi_max * static_cast<double>(k) / static_cast<double>(nodes - 1);
    const auto e = emp(xi);
    const double rc = closed ? (*closed)(xi).real() : nan, rs = sharp ? (*sharp)(xi).real() : nan;
    const double rm = mix(xi).real();
    require_finite(rm, "mixture charfn");
    if (closed) worst = std::max(worst, std::fabs(rc - e.real()));
    csv.row(xi, rc, rs, rm, e.real(), e.imag());
  }
  if (closed) r.out.summary("max_abs_closed_minus_empirical", worst);
}

void run_density(Run& r) {
  const Point x = main_point(r.cfg, r.model);
  const std::size_t nodes = r.cfg.count("density.nodes", 401, 2);
  const std::size_t n_cpa = r.cfg.count("density.cpa_samples", 0, 0);
  const double eps = r.cfg.positive("density.cpa_eps", 1e-3);

  const auto cf = charfn_levy_khinchin(r.model, x);
  const FourierInverter inv(cf);
  const TabulatedCdf tab(inv);
  auto cl = r.out.open("density.csv", {"z", "pdf", "cdf"});
  const double lo = tab.quantile(1e-4), hi = tab.quantile(1.0 - 1e-4);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double z = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nodes - 1);
    const double f = inv.pdf(z);
    require_finite(f, "inverted density");
    cl.row(z, f, tab(z));
  }
  r.out.summary("heavy_tail", inv.heavy_tail());
  if (n_cpa == 0) return;

  // l~_1(x) + l~_2(y) by compound-Poisson approximation of each nu#_k
  if (r.model.cov.kind != CovarianceKind::SqrtScaledStationary)
    throw ConfigError("density.cpa_samples", "the CPA sum needs a sqrt-scaled covariance");
  std::vector<SymmetricCpa> cpa;
  for (const auto& sub : r.model.subs) cpa.push_back(symmetric_cpa_build(NuSharp{sub, r.model.cov.matern_sigma2}, eps));
  RngStream s = r.rng.substream(0), f = r.rng.substream(1);
  FieldSampler sampler(r.model, {x});
  std::vector<double> sums(n_cpa), field(n_cpa), v;
  auto cs = r.out.open("density_cpa.csv", {"index", "cpa_sum", "field"});
  for (std::size_t i = 0; i < n_cpa; ++i) {
    sums[i] = symmetric_cpa_sample(s, cpa[0], x[0]) + symmetric_cpa_sample(s, cpa[1], x[1]);
    sampler.draw(f, v);
    field[i] = v[0];
    cs.row(i, sums[i], field[i]);
  }
  r.out.summary("cpa_skewness", skewness(sums));
  r.out.summary("field_skewness", skewness(field));
}

void run_covariance(Run& r) {
  const Point p = checked_point(r.cfg, r.model, "covariance.p", {0.5, 0.5});
  const Point q = checked_point(r.cfg, r.model, "covariance.q", {1.0, 1.0});
  const std::size_t m = r.cfg.count("covariance.samples", 100000, 2);
  RngStream s = r.rng.substream(0);
  const double analytic = cov_analytic(r.model, p, q);
  const double mc = cov_mc_estimate(s, r.model, p, q, m);
  require_finite(analytic, "analytic covariance");
  require_finite(mc, "MC covariance");
  auto csv = r.out.open("covariance.csv", {"p_x", "p_y", "q_x", "q_y", "analytic", "mc", "samples"});
  csv.row(p[0], p[1], q[0], q[1], analytic, mc, m);
}

void run_rmse_study(Run& r) {
  const Point p = checked_point(r.cfg, r.model, "rmse.p", {0.5, 0.5});
  const Point q = checked_point(r.cfg, r.model, "rmse.q", {1.0, 1.0});
  const auto sizes = r.cfg.counts("rmse.sizes", {100, 1000, 10000, 100000});
  const std::size_t repeats = r.cfg.count("rmse.repeats", 100);
  const auto st = rmse_convergence_study(r.rng, r.model, p, q, sizes, repeats);
  auto csv = r.out.open("rmse.csv", {"samples", "rmse"});
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    require_finite(st.rmse[k], "RMSE");
    csv.row(st.sample_sizes[k], st.rmse[k]);
  }
  r.out.summary("reference", st.reference);
  if (st.slope) r.out.summary("loglog_slope", *st.slope);
}

FitParams fit_params(Config& cfg, const std::string& path, const FitParams& def) {
  const auto v = cfg.list(path, {def.begin(), def.end()});
  if (v.size() != 5) throw ConfigError(path, "expected five values a1, b1, a2, b2, sigma");
  FitParams t;
  for (std::size_t i = 0; i < 5; ++i) {
    if (!(v[i] >= 0.0)) throw ConfigError(path, "parameters must be >= 0");
    t[i] = v[i];
  }
  return t;
}

void run_fit(Run& r) {
  const std::string mode = r.cfg.str("fit.mode", "charfn");
  if (mode != "charfn" && mode != "density") throw ConfigError("fit.mode", "expected charfn or density");
  const FitParams truth = fit_params(r.cfg, "fit.truth", {3, 10, 3, 10, 2});
  const FitParams init = fit_params(r.cfg, "fit.init", {2, 12, 4, 9, 1});
  const std::size_t iters = r.cfg.count("fit.iterations", mode == "charfn" ? 50 : 5, 0);
  for (std::size_t k : {0, 1, 2, 3})
    if (truth[k] <= 0.0) throw ConfigError("fit.truth", "Gamma parameters of the target must be > 0");

  const auto pts = default_fit_points();
  std::vector<CharFn> targets;
  for (const auto& p : pts) targets.push_back(fit_model_charfn(truth, p));
  const auto pr = mode == "charfn" ? make_charfn_problem(pts, targets, init) : make_density_problem(pts, targets, init);
  FitResult res;
  try {
    res = lm_minimize([&](const FitParams& th) { return residual(th, pr); }, init, iters);
  } catch (const std::runtime_error& e) {
    throw NumericalFailure(e.what());
  }

  auto ct = r.out.open("fit_trajectory.csv", {"step", "residual_norm"});
  for (std::size_t k = 0; k < res.trajectory.size(); ++k) ct.row(k, res.trajectory[k]);
  auto cp = r.out.open("fit_params.csv", {"name", "truth", "init", "fitted"});
  const char* names[] = {"a1", "b1", "a2", "b2", "sigma"};
  for (std::size_t i = 0; i < 5; ++i) cp.row(names[i], truth[i], init[i], res.theta_hat[i]);
  auto cc = r.out.open("fit_curves.csv", {"point", "x", "y", mode == "charfn" ? "xi" : "z", "target", "initial", "fitted"});
  const auto r0 = residual(init, pr), r1 = residual(res.theta_hat, pr);
  std::size_t idx = 0;
  for (std::size_t j = 0; j < pts.size(); ++j)
    for (std::size_t k = 0; k < pr.grids[j].size(); ++k, ++idx) {
      const double t = pr.targets[j][k];
      cc.row(j + 1, pts[j][0], pts[j][1], pr.grids[j][k], t, t + r0[idx], t + r1[idx]);
    }
  r.out.summary("sup_error", sup_error(res.theta_hat, pr));
  r.out.summary("residual_norm", res.residual_norm);
  r.out.summary("iterations", res.n_iterations);
  r.out.summary("stop_reason", res.stop_reason);
}

void run_moment_trace(Run& r) {
  const Point x = main_point(r.cfg, r.model);
  const auto ps = r.cfg.list("trace.ps", {4, 6, 8});
  const auto sizes = r.cfg.counts("trace.sizes", {1000, 10000, 100000, 1000000});
  const std::size_t runs = r.cfg.count("trace.runs", 5);
  for (double p : ps)
    if (!(p >= 1.0)) throw ConfigError("trace.ps", "p must be >= 1");
  const auto traces = moment_traces(r.rng, r.model, x, ps, sizes, runs);
  auto csv = r.out.open("moment_trace.csv", {"run", "p", "samples", "estimate"});
  nlohmann::json spread = nlohmann::json::object();
  for (const auto& tr : traces) {
    for (std::size_t run = 0; run < runs; ++run)
      for (std::size_t k = 0; k < sizes.size(); ++k) csv.row(run, tr.p, sizes[k], tr.estimates[run][k]);
    std::ostringstream key;
    key << tr.p;
    const double s = trace_spread(tr);
    spread[key.str()] = std::isfinite(s) ? nlohmann::json(s) : nlohmann::json("inf");
  }
  r.out.summary("relative_spread", spread);
}

void run_moment_test(Run& r) {
  const Point x = main_point(r.cfg, r.model);
  const auto ps = r.cfg.list("test.ps", {1, 2, 3, 4, 4.5, 5, 5.2, 5.4, 5.6, 5.8, 6, 6.5, 7, 8});
  const std::size_t n = r.cfg.count("test.samples", 1000000);
  BootstrapConfig bc;
  bc.subsample_exponent = r.cfg.num("test.beta", bc.subsample_exponent);
  bc.n_resamples = r.cfg.count("test.resamples", bc.n_resamples);
  bc.alpha_s = r.cfg.num("test.alpha", bc.alpha_s);
  const std::size_t runs = r.cfg.count("test.runs", 1);
  for (double p : ps)
    if (!(p > 0.0)) throw ConfigError("test.ps", "p must be > 0");
  try {
    bc.validate(n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("test", e.what());
  }

  const double bound = moment_bound(moment_bound_input(r.model));
  auto csv = r.out.open("moment_test.csv", {"run", "p", "statistic", "threshold", "verdict", "samples", "subsample", "resamples"});
  FieldSampler sampler(r.model, {x});
  std::vector<double> samples(n), v;
  for (std::size_t run = 0; run < runs; ++run) {
    RngStream s = r.rng.substream(2 * run), b = r.rng.substream(2 * run + 1);
    for (auto& z : samples) {
      sampler.draw(s, v);
      z = v[0];
    }
    const auto reps = bootstrap_moment_tests(b, samples, ps, bc);
    for (std::size_t k = 0; k < ps.size(); ++k)
      csv.row(run, ps[k], reps[k].statistic, reps[k].threshold, verdict_name(reps[k].verdict), n, bc.subsample_size(n),
              bc.n_resamples);
  }
  r.out.summary("moment_bound", std::isfinite(bound) ? nlohmann::json(bound) : nlohmann::json("inf"));
}

const std::map<std::string, void (*)(Run&)> kExperiments = {
    {"sample-grid", run_sample_grid},   {"pointwise-dist", run_pointwise_dist}, {"charfn", run_charfn},
    {"density", run_density},           {"covariance", run_covariance},         {"rmse-study", run_rmse_study},
    {"fit", run_fit},                   {"moment-trace", run_moment_trace},     {"moment-test", run_moment_test},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subordinated Gaussian random field experiments"};
  std::string experiment, config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::vector<std::string> overrides;
  std::vector<std::string> names;
  for (const auto& [k, _] : kExperiments) names.push_back(k);
  app.add_option("experiment", experiment, "Experiment to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_file, "Key/value configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides run.seed)");
  app.add_option("--out", out_dir, "Output directory (overrides run.out)");
  app.add_option("--threads", threads, "Thread cap (overrides run.threads)")->check(CLI::PositiveNumber);
  app.add_option("overrides", overrides, "section.key=value settings that win over the file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  Config cfg;
  std::unique_ptr<Artifacts> artifacts;
  try {
    cfg.load(config_file);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError(o, "override must look like section.key=value");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed) cfg.set("run.seed", std::to_string(*seed));
    if (out_dir) cfg.set("run.out", *out_dir);
    if (threads) cfg.set("run.threads", std::to_string(*threads));

    const std::uint64_t s = cfg.count("run.seed", 1, 0);
    const std::size_t k = cfg.count("run.threads", 1);
    const fs::path dir = cfg.str("run.out", "results/" + experiment);
    const FieldModel model = build_model(cfg);
    artifacts = std::make_unique<Artifacts>(dir);
    Run run{cfg, model, RngStream(s), *artifacts};
    kExperiments.at(experiment)(run);
    artifacts->write_manifest(experiment, s, k, cfg);
    std::cout << "wrote " << dir.string() << "/manifest.json\n";
    return 0;
  } catch (const ConfigError& e) {
    if (artifacts) artifacts->remove_all();
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedOperation& e) {
    if (artifacts) artifacts->remove_all();
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    if (artifacts) artifacts->remove_all();
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    if (artifacts) artifacts->remove_all();
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
