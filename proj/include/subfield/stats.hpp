#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace subfield {

enum class Verdict { Accept, Reject, Inconclusive };
const char* verdict_name(Verdict v);

struct TestReport {
  std::string procedure;
  double statistic = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Accept;
  std::size_t n = 0;          // sample size
  std::size_t resamples = 0;  // bootstrap resamples (0 for KS)
  std::uint64_t seed = 0;
  bool rejects() const { return verdict == Verdict::Reject; }
};

// Asymptotic KS critical constant: c(0.05) = 1.358, c(0.01) = 1.628, and
// sqrt(-log(alpha/2)/2) for other levels.
double ks_critical(double alpha);

// One-sample Kolmogorov-Smirnov distance sup |F_n - F|; samples need not be
// sorted.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);
TestReport ks_test(std::span<const double> samples, const std::function<double(double)>& target_cdf, double alpha);

double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b);
// Rejects iff D > c(alpha) sqrt((n+m)/(n m)).
TestReport ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // unbiased
double skewness(std::span<const double> x);  // moment estimator g1
double median(std::vector<double> x);

// Least-squares slope of log10(y) against log10(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace subfield
