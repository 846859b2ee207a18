#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mima/sampler.hpp"

namespace mima {

enum class EffectMode { Common, Exchangeable, OneExtreme };

const char* to_string(EffectMode m);
EffectMode effect_mode_from_string(const std::string& s);

// Controlled multi-indication scenario. Surrogacy truth is shared across
// indications unless the per-indication vectors are filled.
struct ScenarioSpec {
  int n_indications = 3;
  int trials_per_indication = 4;
  EffectMode effect_mode = EffectMode::Exchangeable;
  double effect_mean = -0.3;    // true PFS effect location
  double effect_tau = 0.2;      // between-indication sd (Exchangeable)
  double extreme_offset = 1.0;  // added to indication 1's effect (OneExtreme)
  double within_tau = 0.1;      // between-study sd of true PFS effects
  double lambda0 = 0.0;
  double lambda1 = 1.0;
  double psi = 0.1;
  std::vector<double> lambda0_by_indication;  // optional overrides, length J
  std::vector<double> lambda1_by_indication;
  std::vector<double> psi_by_indication;
  double se_min = 0.1;
  double se_max = 0.3;
  double rho_within = 0.0;
  double missing_os_fraction = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ScenarioTruth {
  Vec d_pfs;  // per indication: true mean PFS effect
  Vec d_os;   // lambda0_j + lambda1_j * d_pfs_j
  Vec lambda0, lambda1, psi;
  Vec study_delta_pfs, study_delta_os;  // per study, evidence-set order
};

struct GeneratedData {
  EvidenceSet evidence;
  ScenarioTruth truth;
};

GeneratedData generate(const ScenarioSpec& s);

// Normal-normal conjugacy for a single observation.
struct ConjugatePosterior {
  double mean = 0.0;
  double sd = 0.0;
};
ConjugatePosterior conjugate_posterior(double y, double se, double prior_mean, double prior_sd);

// Deterministic tensor-product Simpson quadrature over the free scalars of a
// small univariate model, after analytic marginalisation of the conjugate
// study-effect blocks (and, for MCIP toys, of the independent copies and
// mixture weights). Supports IP/CP with <= 3 free scalars and MCIP with the
// common-effect flag.
struct GridOptions {
  int nodes = 401;         // minimum nodes per axis, made odd
  bool auto_refine = true;  // add nodes where the posterior is much narrower than the box
};

struct GridResult {
  std::vector<std::string> labels;
  Vec mean;
  Vec sd;
  double log_z = 0.0;
  double boundary_mass = 0.0;
  Vec p_c1;  // per indication; empty unless the spec is a mixture
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

GridResult grid_posterior(const ModelSpec& spec, const EvidenceSet& e, const GridOptions& opts = {});

// The oracle's unnormalised log density over the free scalars (independent
// of log_joint's code path); exposed for normalisation cross-checks.
double oracle_log_density(const ModelSpec& spec, const EvidenceSet& e, const Vec& free_scalars);
std::vector<std::string> oracle_free_scalars(const ModelSpec& spec, const EvidenceSet& e);

// Repeated generate-fit-score over derived seeds.
struct CalibrationReplicate {
  int replication = 0;
  int indication = 0;
  double truth = 0.0;
  double est_mean = 0.0;
  double est_median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  bool covered = false;
  double width = 0.0;
};

struct CalibrationRow {
  std::string estimand;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_width = 0.0;
  int replications = 0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  std::vector<CalibrationReplicate> detail;
};

CalibrationResult calibration_run(const ScenarioSpec& scen, const ModelSpec& spec,
                                  const SamplerConfig& cfg, int replications);

}  // namespace mima
