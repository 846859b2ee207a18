#pragma once

#include <map>
#include <string>
#include <vector>

#include "mima/model.hpp"

namespace mima {

struct FitStats {
  double dbar = 0.0;
  double pd = 0.0;
  double dic = 0.0;
  double mean_residual_deviance = 0.0;
  int n_obs = 0;
  bool negative_pd_warning = false;
};

struct ConvergenceRow {
  std::string name;
  double rhat = 1.0;
  double ess = 0.0;
  bool flagged = false;  // rhat > 1.05 or ess < 400
  bool degenerate = false;  // constant draws; ess reported as n by definition
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool any_flagged = false;
};

struct DiagnosticsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Classic Gelman-Rubin potential scale reduction over >= 2 equal-length
// chains; 1.0 when every chain is the same constant.
double rhat(const std::vector<Vec>& chains);

// Effective sample size of one sequence: n / (1 + 2 * sum of autocorrelations)
// with Geyer's initial monotone positive pair-sum truncation, capped at n.
// Constant input returns n (degenerate, flagged by callers).
double ess(const Vec& draws);

FitStats dic(const Vec& deviance_trace, double deviance_at_posterior_mean, int n_obs = 0);

// Minimum-DIC structure, except that candidates within 3 units of the best
// fall back to the smallest measured pD; remaining ties break by the order
// given (or enumeration order of the map).
Sharing select_model(const std::map<Sharing, FitStats>& fits,
                     const std::vector<Sharing>& complexity_order = {});

struct SummaryRow {
  std::string name;
  std::string group;
  std::string indication;  // empty for pooled quantities
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

// Type-7 quantile of a sample (the spreadsheet/R default).
double quantile_type7(const Vec& draws, double q);

SummaryRow summarize_posterior(std::string name, const Vec& draws);

}  // namespace mima
