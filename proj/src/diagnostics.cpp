#include "mima/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace mima {

double rhat(const std::vector<Vec>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) throw DiagnosticsError("rhat requires at least 2 chains");
  const auto n = chains[0].size();
  if (n < 4) throw DiagnosticsError("rhat requires chains of length >= 4");
  for (const Vec& c : chains) {
    if (c.size() != n) throw DiagnosticsError("rhat requires equal-length chains");
  }

  Vec means(m), vars(m);
  for (int k = 0; k < m; ++k) {
    means[k] = chains[k].mean();
    vars[k] = (chains[k].array() - means[k]).square().sum() / static_cast<double>(n - 1);
  }
  const double w = vars.mean();
  const double grand = means.mean();
  const double b_over_n =
      (means.array() - grand).square().sum() / static_cast<double>(m - 1);
  if (w <= 0.0) return 1.0;  // identical constant chains
  const double nn = static_cast<double>(n);
  const double vhat = (nn - 1.0) / nn * w + b_over_n;
  return std::sqrt(vhat / w);
}

double ess(const Vec& draws) {
  const auto n = draws.size();
  if (n < 8) throw DiagnosticsError("ess requires at least 8 draws");
  const double mean = draws.mean();
  const Vec centered = draws.array() - mean;
  const double c0 = centered.squaredNorm() / static_cast<double>(n);
  if (c0 <= 0.0) return static_cast<double>(n);

  auto gamma = [&](Eigen::Index lag) {
    return centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<double>(n);
  };

  // Geyer initial monotone positive sequence over pair sums rho_{2m}+rho_{2m+1}.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (gamma(2 * m) + gamma(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    const double monotone = std::min(pair, prev_pair);
    tau += 2.0 * monotone;
    prev_pair = monotone;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

FitStats dic(const Vec& deviance_trace, double deviance_at_posterior_mean, int n_obs) {
  if (deviance_trace.size() == 0) throw DiagnosticsError("empty deviance trace");
  FitStats fs;
  fs.dbar = deviance_trace.mean();
  fs.pd = fs.dbar - deviance_at_posterior_mean;
  fs.dic = fs.dbar + fs.pd;
  fs.mean_residual_deviance = fs.dbar;
  fs.n_obs = n_obs;
  fs.negative_pd_warning = fs.pd < 0.0;
  return fs;
}

Sharing select_model(const std::map<Sharing, FitStats>& fits,
                     const std::vector<Sharing>& complexity_order) {
  if (fits.empty()) throw DiagnosticsError("select_model requires at least one fitted structure");

  std::vector<Sharing> order = complexity_order;
  if (order.empty()) {
    for (const auto& [s, fs] : fits) order.push_back(s);
  }
  auto rank = [&](Sharing s) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == s) return i;
    }
    return order.size();
  };

  double best_dic = std::numeric_limits<double>::infinity();
  for (const auto& [s, fs] : fits) best_dic = std::min(best_dic, fs.dic);

  Sharing chosen = fits.begin()->first;
  bool have = false;
  for (const auto& [s, fs] : fits) {
    if (fs.dic > best_dic + 3.0) continue;
    if (!have) {
      chosen = s;
      have = true;
      continue;
    }
    const FitStats& cur = fits.at(chosen);
    if (fs.pd < cur.pd || (fs.pd == cur.pd && rank(s) < rank(chosen))) chosen = s;
  }
  return chosen;
}

double quantile_type7(const Vec& draws, double q) {
  std::vector<double> x(draws.data(), draws.data() + draws.size());
  std::sort(x.begin(), x.end());
  const auto n = x.size();
  if (n == 1) return x[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  return x[lo] + (h - std::floor(h)) * (x[hi] - x[lo]);
}

SummaryRow summarize_posterior(std::string name, const Vec& draws) {
  if (draws.size() == 0) throw DiagnosticsError("summarize_posterior requires draws");
  SummaryRow row;
  row.name = std::move(name);
  row.mean = draws.mean();
  const auto n = draws.size();
  row.sd = n > 1 ? std::sqrt((draws.array() - row.mean).square().sum() /
                             static_cast<double>(n - 1))
                 : 0.0;
  row.median = quantile_type7(draws, 0.5);
  row.lo95 = quantile_type7(draws, 0.025);
  row.hi95 = quantile_type7(draws, 0.975);
  return row;
}

}  // namespace mima
