#include "subfield/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "subfield/special.hpp"

namespace subfield {

double gaussian_abs_moment(double p, double sigma) {
  if (!(p > -1.0)) throw std::invalid_argument("gaussian_abs_moment: p must exceed -1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_abs_moment: negative sigma");
  const double cp = std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0))) / std::sqrt(std::numbers::pi);
  if (sigma == 0.0) return p > 0.0 ? 0.0 : (p == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  return cp * std::pow(sigma, p);
}

double moment_bound(const MomentBoundInput& input) {
  double a = std::numeric_limits<double>::infinity();
  for (const auto& row : input.alphas) {
    if (row.size() != input.etas.size()) throw std::invalid_argument("moment_bound: alpha row and eta sizes differ");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] < 0.0) throw std::invalid_argument("moment_bound: negative exponent");
      if (row[i] == 0.0 || std::isinf(input.etas[i])) continue;
      a = std::min(a, (input.etas[i] - 1.0) / row[i]);
    }
  }
  return a;
}

MomentBoundInput moment_bound_input(const FieldModel& model) {
  model.validate();
  const std::size_t d = model.dim();
  MomentBoundInput in;
  switch (model.cov.kind) {
    case CovarianceKind::BrownianSheet:
      in.alphas.assign(1, std::vector<double>(d, 0.5));
      in.coefficients.assign(1, 1.0);
      break;
    case CovarianceKind::SqrtScaledStationary:
      for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> row(d, 0.0);
        row[j] = 0.5;
        in.alphas.push_back(row);
      }
      // sqrt(x_1 + ... + x_d) <= sum_j sqrt(x_j), times sigma
      in.coefficients.assign(d, std::sqrt(model.cov.matern_sigma2));
      break;
    case CovarianceKind::MaternStationary:
      in.alphas.assign(1, std::vector<double>(d, 0.0));
      in.coefficients.assign(1, std::sqrt(model.cov.matern_sigma2));
      break;
  }
  for (const auto& s : model.subs)
    in.etas.push_back(s.kind == SubordinatorKind::StudentTUnitTime ? s.t_dof + 1.0 : kNoTailBound);
  return in;
}

std::vector<MomentTrace> moment_traces(const RngStream& rng, const FieldModel& model, const Point& x,
                                       const std::vector<double>& ps, const std::vector<std::size_t>& sizes,
                                       std::size_t n_runs) {
  if (sizes.empty() || n_runs == 0) throw std::invalid_argument("moment_trace: empty design");
  for (std::size_t k = 0; k < sizes.size(); ++k)
    if (sizes[k] == 0 || (k > 0 && sizes[k] <= sizes[k - 1]))
      throw std::invalid_argument("moment_trace: sizes must be positive and increasing");
  for (double p : ps)
    if (!(p >= 1.0)) throw std::invalid_argument("moment_trace: p must be at least 1");

  std::vector<MomentTrace> out(ps.size());
  for (std::size_t j = 0; j < ps.size(); ++j) {
    out[j].p = ps[j];
    out[j].sizes = sizes;
    out[j].estimates.assign(n_runs, std::vector<double>(sizes.size(), 0.0));
  }
  std::vector<KahanAccumulator> acc(ps.size());
  std::vector<double> v;
  for (std::size_t run = 0; run < n_runs; ++run) {
    RngStream sub = rng.substream(run);
    FieldSampler sampler(model, {x});
    std::fill(acc.begin(), acc.end(), KahanAccumulator{});
    std::size_t next = 0;
    for (std::size_t i = 1; i <= sizes.back(); ++i) {
      sampler.draw(sub, v);
      const double la = std::log(std::fabs(v[0]));
      for (std::size_t j = 0; j < ps.size(); ++j) acc[j].add(std::exp(ps[j] * la));
      if (i == sizes[next]) {
        for (std::size_t j = 0; j < ps.size(); ++j)
          out[j].estimates[run][next] = acc[j].value() / static_cast<double>(i);
        ++next;
      }
    }
  }
  return out;
}

MomentTrace moment_trace(const RngStream& rng, const FieldModel& model, const Point& x, double p,
                         const std::vector<std::size_t>& sizes, std::size_t n_runs) {
  return moment_traces(rng, model, x, {p}, sizes, n_runs).front();
}

double trace_spread(const MomentTrace& trace) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& run : trace.estimates) {
    lo = std::min(lo, run.back());
    hi = std::max(hi, run.back());
  }
  if (hi == 0.0) return 0.0;
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo - 1.0;
}

void BootstrapConfig::validate(std::size_t n) const {
  if (!(subsample_exponent > 0.0 && subsample_exponent < 1.0))
    throw std::invalid_argument("BootstrapConfig: subsample exponent must lie in (0,1)");
  if (n_resamples < 200) throw std::invalid_argument("BootstrapConfig: need at least 200 resamples");
  if (!(alpha_s > 0.0 && alpha_s < 1.0)) throw std::invalid_argument("BootstrapConfig: alpha_s must lie in (0,1)");
  if (n < 1000) throw std::invalid_argument("bootstrap_moment_test: need at least 1000 samples");
  if (subsample_size(n) < 30) throw std::invalid_argument("BootstrapConfig: subsample size below 30");
}

std::size_t BootstrapConfig::subsample_size(std::size_t n) const {
  // nudge so exact powers (n = 10^6, beta = 0.5) are not lost to rounding
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), subsample_exponent) * (1.0 + 1e-12)));
}

std::vector<TestReport> bootstrap_moment_tests(RngStream& rng, const std::vector<double>& samples,
                                               const std::vector<double>& ps, const BootstrapConfig& cfg) {
  const std::size_t n = samples.size();
  cfg.validate(n);
  for (double p : ps)
    if (!(p > 0.0)) throw std::invalid_argument("bootstrap_moment_test: p must be positive");
  const std::size_t np = ps.size(), m = cfg.subsample_size(n), B = cfg.n_resamples;

  // Row-major n x np table of Y = |X|^(p/2), computed in log space so that
  // overflow shows up as +inf.
  std::vector<double> y(n * np);
  std::vector<KahanAccumulator> total(np);
  for (std::size_t i = 0; i < n; ++i) {
    const double la = std::log(std::fabs(samples[i]));
    for (std::size_t k = 0; k < np; ++k) {
      const double v = std::exp(0.5 * ps[k] * la);
      y[i * np + k] = v;
      total[k].add(v);
    }
  }
  std::vector<double> full_mean(np);
  for (std::size_t k = 0; k < np; ++k) full_mean[k] = total[k].value() / static_cast<double>(n);

  std::vector<std::vector<double>> t(np, std::vector<double>(B));
  std::vector<std::size_t> flat(np, 0);
  // Sums of deviations from the full-sample mean: the shifted second moment
  // has no cancellation to speak of and the inner loop vectorizes.
  std::vector<double> s1(np), s2(np);
  constexpr std::size_t kBatch = 256;
  std::vector<std::size_t> batch(kBatch);
  const double md = static_cast<double>(m);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(s1.begin(), s1.end(), 0.0);
    std::fill(s2.begin(), s2.end(), 0.0);
    // Indices are drawn in batches and their rows prefetched: the table is
    // far larger than cache.
    for (std::size_t start = 0; start < m; start += kBatch) {
      const std::size_t len = std::min(kBatch, m - start);
      for (std::size_t j = 0; j < len; ++j) {
        batch[j] = static_cast<std::size_t>((static_cast<unsigned __int128>(rng.next_u64()) * n) >> 64);
        __builtin_prefetch(&y[batch[j] * np]);
        __builtin_prefetch(&y[batch[j] * np + np - 1]);
      }
      double* __restrict a1 = s1.data();
      double* __restrict a2 = s2.data();
      const double* __restrict mean_p = full_mean.data();
      for (std::size_t j = 0; j < len; ++j) {
        const double* __restrict row = &y[batch[j] * np];
        for (std::size_t k = 0; k < np; ++k) {
          const double d = row[k] - mean_p[k];
          a1[k] += d;
          a2[k] += d * d;
        }
      }
    }
    for (std::size_t k = 0; k < np; ++k) {
      const double var = (s2[k] - s1[k] * s1[k] / md) / (md - 1.0);
      if (var > 0.0) {
        t[k][b] = (s1[k] / md) * std::sqrt(md / var);
      } else {
        t[k][b] = 0.0;
        ++flat[k];
      }
    }
  }

  std::vector<TestReport> out(np);
  const double threshold = ks_critical(cfg.alpha_s) / std::sqrt(static_cast<double>(B));
  for (std::size_t k = 0; k < np; ++k) {
    auto& r = out[k];
    r.procedure = "m-out-of-n bootstrap moment test";
    r.threshold = threshold;
    r.n = n;
    r.resamples = B;
    r.seed = rng.seed();
    if (!std::isfinite(full_mean[k])) {
      r.statistic = std::numeric_limits<double>::infinity();
      r.verdict = Verdict::Reject;
    } else if (static_cast<double>(flat[k]) > 0.01 * static_cast<double>(B)) {
      r.statistic = std::numeric_limits<double>::quiet_NaN();
      r.verdict = Verdict::Inconclusive;
    } else {
      r.statistic = ks_statistic(t[k], normal_cdf);
      r.verdict = r.statistic > threshold ? Verdict::Reject : Verdict::Accept;
    }
  }
  return out;
}

TestReport bootstrap_moment_test(RngStream& rng, const std::vector<double>& samples, double p,
                                 const BootstrapConfig& cfg) {
  return bootstrap_moment_tests(rng, samples, {p}, cfg).front();
}

}  // namespace subfield
