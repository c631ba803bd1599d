#include "subfield/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "subfield/rng.hpp"

namespace subfield {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

double ks_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_critical: alpha must lie in (0,1)");
  if (alpha == 0.05) return 1.358;
  if (alpha == 0.01) return 1.628;
  return std::sqrt(-0.5 * std::log(0.5 * alpha));
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

TestReport ks_test(std::span<const double> samples, const std::function<double(double)>& target_cdf, double alpha) {
  if (samples.size() < 10) throw std::invalid_argument("ks_test: need at least 10 samples");
  TestReport r;
  r.procedure = "ks-one-sample";
  r.n = samples.size();
  r.statistic = ks_statistic(samples, target_cdf);
  r.threshold = ks_critical(alpha) / std::sqrt(static_cast<double>(r.n));
  r.verdict = r.statistic > r.threshold ? Verdict::Reject : Verdict::Accept;
  return r;
}

double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha) {
  TestReport r;
  r.procedure = "ks-two-sample";
  r.n = a.size() + b.size();
  r.statistic = ks_two_sample_statistic(a, b);
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  r.threshold = ks_critical(alpha) * std::sqrt((n + m) / (n * m));
  r.verdict = r.statistic > r.threshold ? Verdict::Reject : Verdict::Accept;
  return r;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return compensated_sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need two samples");
  const double m = mean(x);
  KahanAccumulator acc;
  for (double v : x) acc.add((v - m) * (v - m));
  return acc.value() / static_cast<double>(x.size() - 1);
}

double skewness(std::span<const double> x) {
  const double m = mean(x);
  KahanAccumulator m2, m3;
  for (double v : x) {
    const double d = v - m;
    m2.add(d * d);
    m3.add(d * d * d);
  }
  const double n = static_cast<double>(x.size());
  const double s2 = m2.value() / n;
  return s2 > 0.0 ? (m3.value() / n) / std::pow(s2, 1.5) : 0.0;
}

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median: empty sample");
  const std::size_t h = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h), x.end());
  if (x.size() % 2 == 1) return x[h];
  const double hi = x[h];
  const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lo + hi);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired values");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log10(x[i]), ly = std::log10(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace subfield
