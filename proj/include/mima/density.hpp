#pragma once

#include <optional>

#include "mima/model.hpp"

namespace mima {

// Study-level data cached in model-row order. Univariate modes place the
// endpoint in (y1, se1); bivariate keeps PFS in 1 and OS in 2.
struct StudyData {
  int indication = 0;
  double y1 = 0.0;
  double se1 = 1.0;
  double y2 = 0.0;
  double se2 = 1.0;
  bool has2 = false;
};

// Spec + evidence compiled for repeated density work.
struct ModelView {
  ModelSpec spec;
  ParameterLayout layout;
  std::vector<StudyData> studies;
  std::vector<std::string> indications;

  static ModelView compile(const ModelSpec& spec, const EvidenceSet& e);

  int n_studies() const { return layout.n_studies; }
  int n_indications() const { return layout.n_indications; }
  // Scalar observation count (bivariate counts each endpoint separately).
  int n_obs() const;
};

// Effective indication-level value of a shared parameter: the component the
// likelihood reads, given the current mixture indicators.
double effective_value(const ParameterLayout& layout, const SharingGroup& g,
                       const ParameterValues& v, int j);

struct DensityTermReport {
  Vec study_loglik;             // per model row
  double loglik = 0.0;          // sum of study terms
  double hierarchy_study = 0.0;       // delta | d, tau and delta_os | lambda, psi terms
  double hierarchy_indication = 0.0;  // exchangeable copies | (mu, sigma) / |N(0,h)| terms
  double indicator_mass = 0.0;        // Bernoulli(c_j | p_j) mass
  double logprior = 0.0;
  double total = 0.0;
};

double loglik_univariate(double y, double se, double delta);

// Bivariate normal log density with within-study covariance
// [[se1^2, se1*se2*rho], [., se2^2]]; marginal in y1 when y2 is absent.
// Correlations with |rho| >= 1 - 1e-12 are rejected as -inf.
double loglik_bivariate(double y1, std::optional<double> y2, double se1,
                        std::optional<double> se2, double rho, double delta1, double delta2);

DensityTermReport log_density_report(const ModelView& m, const ParameterValues& v);
double log_joint(const ModelView& m, const ParameterValues& v);
double log_joint(const ModelSpec& spec, const EvidenceSet& e, const ParameterValues& v);

// Values of the likelihood's direct parents (the BUGS-style deviance focus).
struct DevianceFocus {
  Vec delta1;  // univariate effective delta; bivariate delta_pfs
  Vec delta2;  // bivariate delta_os (unused univariate)
  Vec rho;     // bivariate within-study correlations (unused univariate)
};

DevianceFocus extract_focus(const ModelView& m, const ParameterValues& v);

// Residual deviance against the saturated model, no constant terms:
// univariate sum of squared standardised residuals, bivariate per-study
// Mahalanobis distance (marginal form when OS is missing).
double residual_deviance(const ModelView& m, const DevianceFocus& focus);
double residual_deviance(const ModelView& m, const ParameterValues& v);
double residual_deviance(const ModelSpec& spec, const EvidenceSet& e, const ParameterValues& v);

// Sum over studies of indication j of the density binding them to the
// indication-level parameters, with those parameters overridden. These are
// the G factors of the mixture-indicator full conditionals and the data
// terms of the scale random walks.
double univariate_indication_term(const ModelView& m, const ParameterValues& v, int j,
                                  double location, double tau);
double bivariate_regression_term(const ModelView& m, const ParameterValues& v, int j,
                                 double lambda0, double lambda1, double psi);

}  // namespace mima
