#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mima/evidence.hpp"

namespace mima {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Between-indications sharing structures.
enum class Sharing { IP, CP, MCIP, RP, MRIP };

enum class EndpointMode { UnivariatePFS, UnivariateOS, BivariateSurrogacy };

const char* to_string(Sharing s);
const char* to_string(EndpointMode m);
Sharing sharing_from_string(const std::string& s);
EndpointMode endpoint_mode_from_string(const std::string& s);

inline bool is_mixture(Sharing s) { return s == Sharing::MCIP || s == Sharing::MRIP; }

struct PriorSettings {
  double tau_halfnormal_scale = 0.5;   // tau_j ~ |N(0, scale^2)|
  double effect_normal_sd = 10.0;      // vague effect / intercept / slope prior sd
  double psi_halfnormal_scale = 0.5;   // psi_j ~ |N(0, scale^2)| (IP/CP component)
  double xi_halfnormal_scale = 0.5;    // xi_0, xi_1 ~ |N(0, scale^2)|
  double h_gamma_shape = 1.0;          // h ~ Gamma(shape, rate), h a variance
  double h_gamma_rate = 0.01;
  std::pair<double, double> mixture_beta = {1.0, 1.0};        // p_j ~ Beta(a, b)
  std::pair<double, double> rho_uniform_bounds = {-1.0, 1.0};  // rho_wij ~ U(lo, hi)

  void validate() const;
};

PriorSettings default_priors();

struct ModelSpec {
  EndpointMode endpoint_mode = EndpointMode::UnivariateOS;
  Sharing sharing = Sharing::IP;
  // Sharing structure for the conditional variance; unset = inherit `sharing`.
  std::optional<Sharing> sharing_psi;
  PriorSettings priors;
  bool common_effect_within_indication = false;  // tau_j = 0, delta_ij = d_j
  bool tie_mixture_probabilities = false;  // one indicator per indication across all 3 surrogacy params
  double p_new = 1.0;  // new-indication mixture weight

  Sharing psi_sharing() const { return sharing_psi.value_or(sharing); }
  bool bivariate() const { return endpoint_mode == EndpointMode::BivariateSurrogacy; }

  void validate() const;
};

enum class Support { Real, Positive, UnitInterval, SignedUnit };

enum class UpdateKind { ConjugateNormal, ConjugateBernoulli, ConjugateBeta, RandomWalkLog, RandomWalkAtanh };

struct ParamBlock {
  std::string name;
  int dim = 0;
  Support support = Support::Real;
  UpdateKind update = UpdateKind::ConjugateNormal;
  int offset = 0;                 // into the flat parameter vector
  std::vector<std::uint8_t> latent;  // per element; used for missing-OS delta_os entries
};

// One indication-level parameter with a sharing structure over it. Block
// indices are -1 when the structure does not instantiate them.
struct SharingGroup {
  Sharing sharing = Sharing::IP;
  int value = -1;    // per-indication block (IP values / RP-MRIP exchangeable copies)
  int common = -1;   // CP/MCIP pooled scalar
  int indep = -1;    // MCIP/MRIP independent copies
  int mu = -1;       // RP/MRIP exchangeability mean (locations only)
  int sigma = -1;    // RP/MRIP exchangeability sd (locations only)
  int hvar = -1;     // RP/MRIP between-indication variance (psi only)
  int c = -1;        // mixture indicators
  int p = -1;        // mixture weights
};

struct ParameterLayout {
  std::vector<ParamBlock> blocks;
  int total_dim = 0;

  int n_indications = 0;
  int n_studies = 0;  // rows of the study-level blocks (endpoint-bearing records)

  // Study-level blocks (-1 when absent).
  int delta = -1;       // univariate true effects
  int delta_pfs = -1;   // bivariate true PFS effects
  int delta_os = -1;    // bivariate true OS effects (latent where OS missing)
  int rho_w = -1;       // within-study correlations
  int tau = -1;         // within-indication between-study sd

  SharingGroup effect;   // univariate d_j
  SharingGroup lambda0;  // bivariate intercepts
  SharingGroup lambda1;  // bivariate slopes
  SharingGroup psi;      // bivariate conditional sds

  bool tied_mixture = false;
  int tied_c = -1;
  int tied_p = -1;

  // model_rows[k] = record index in the evidence set for study-level row k;
  // studies_by_indication groups rows by indication index.
  std::vector<int> model_rows;
  std::vector<std::vector<int>> studies_by_indication;

  const ParamBlock& block(int id) const { return blocks[static_cast<std::size_t>(id)]; }
  int find_block(const std::string& name) const;  // -1 when absent
  bool has(int id) const { return id >= 0; }
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Enumerates the parameter blocks implied by (spec, e). Univariate modes
// include only records carrying that endpoint in the study-level blocks but
// keep every indication's d_j / tau_j. Bivariate mode requires PFS on every
// record and at least one dual-endpoint study.
ParameterLayout build_layout(const ModelSpec& spec, const EvidenceSet& e);

// Flat assignment of values conforming to a layout.
using ParameterValues = Vec;

// Sum of log prior densities over top-level blocks only; hierarchical terms
// (delta | d, tau; d | m_d, tau_d; ...) belong to the joint, not here.
// Returns -inf out of support.
double log_prior(const ParameterLayout& layout, const ParameterValues& v, const ModelSpec& spec);

// Density helpers shared across the model code.
double log_normal_pdf(double x, double mean, double sd);
double log_half_normal_pdf(double x, double scale);
double log_gamma_pdf(double x, double shape, double rate);
double log_beta_pdf(double x, double a, double b);
double log_uniform_pdf(double x, double lo, double hi);

}  // namespace mima
