#include "mima/model.hpp"

#include <cmath>
#include <limits>

namespace mima {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kVarFloor = 1e-300;
}  // namespace

const char* to_string(Sharing s) {
  switch (s) {
    case Sharing::IP: return "IP";
    case Sharing::CP: return "CP";
    case Sharing::MCIP: return "MCIP";
    case Sharing::RP: return "RP";
    case Sharing::MRIP: return "MRIP";
  }
  return "?";
}

const char* to_string(EndpointMode m) {
  switch (m) {
    case EndpointMode::UnivariatePFS: return "univariate_pfs";
    case EndpointMode::UnivariateOS: return "univariate_os";
    case EndpointMode::BivariateSurrogacy: return "bivariate";
  }
  return "?";
}

Sharing sharing_from_string(const std::string& s) {
  if (s == "IP") return Sharing::IP;
  if (s == "CP") return Sharing::CP;
  if (s == "MCIP") return Sharing::MCIP;
  if (s == "RP") return Sharing::RP;
  if (s == "MRIP") return Sharing::MRIP;
  throw ModelError("unknown sharing structure '" + s + "' (expected IP|CP|MCIP|RP|MRIP)");
}

EndpointMode endpoint_mode_from_string(const std::string& s) {
  if (s == "univariate_pfs") return EndpointMode::UnivariatePFS;
  if (s == "univariate_os") return EndpointMode::UnivariateOS;
  if (s == "bivariate" || s == "bivariate_surrogacy") return EndpointMode::BivariateSurrogacy;
  throw ModelError("unknown endpoint_mode '" + s +
                   "' (expected univariate_pfs|univariate_os|bivariate)");
}

void PriorSettings::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ModelError(std::string(name) + " must be > 0");
  };
  positive(tau_halfnormal_scale, "tau_halfnormal_scale");
  positive(effect_normal_sd, "effect_normal_sd");
  positive(psi_halfnormal_scale, "psi_halfnormal_scale");
  positive(xi_halfnormal_scale, "xi_halfnormal_scale");
  positive(h_gamma_shape, "h_gamma_shape");
  positive(h_gamma_rate, "h_gamma_rate");
  positive(mixture_beta.first, "mixture_beta first element");
  positive(mixture_beta.second, "mixture_beta second element");
  const auto [lo, hi] = rho_uniform_bounds;
  if (!(lo >= -1.0 && hi <= 1.0 && lo < hi)) {
    throw ModelError("rho_uniform_bounds must satisfy -1 <= lo < hi <= 1");
  }
}

PriorSettings default_priors() { return PriorSettings{}; }

void ModelSpec::validate() const {
  priors.validate();
  if (sharing_psi && !bivariate()) {
    throw ModelError("sharing_psi applies only to the bivariate endpoint mode");
  }
  if (tie_mixture_probabilities && (!bivariate() || !is_mixture(sharing))) {
    throw ModelError("tie_mixture_probabilities requires MCIP or MRIP in bivariate mode");
  }
  if (!(p_new >= 0.0 && p_new <= 1.0)) throw ModelError("p_new must lie in [0, 1]");
}

int ParameterLayout::find_block(const std::string& name) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

struct LayoutBuilder {
  ParameterLayout layout;

  int add(const std::string& name, int dim, Support support, UpdateKind update) {
    ParamBlock b;
    b.name = name;
    b.dim = dim;
    b.support = support;
    b.update = update;
    b.offset = layout.total_dim;
    layout.total_dim += dim;
    layout.blocks.push_back(std::move(b));
    return static_cast<int>(layout.blocks.size()) - 1;
  }

  // Location parameter (d, lambda0, lambda1) under a sharing structure.
  SharingGroup location_group(Sharing s, int J, const std::string& value_name,
                              const std::string& common_name, const std::string& ind_name,
                              const std::string& mu_name, const std::string& sigma_name,
                              const std::string& c_name, const std::string& p_name,
                              bool own_mixture) {
    SharingGroup g;
    g.sharing = s;
    switch (s) {
      case Sharing::IP:
        g.value = add(value_name, J, Support::Real, UpdateKind::ConjugateNormal);
        break;
      case Sharing::CP:
        g.common = add(common_name, 1, Support::Real, UpdateKind::ConjugateNormal);
        break;
      case Sharing::MCIP:
        g.common = add(common_name, 1, Support::Real, UpdateKind::ConjugateNormal);
        g.indep = add(ind_name, J, Support::Real, UpdateKind::ConjugateNormal);
        break;
      case Sharing::RP:
        g.value = add(value_name, J, Support::Real, UpdateKind::ConjugateNormal);
        g.mu = add(mu_name, 1, Support::Real, UpdateKind::ConjugateNormal);
        g.sigma = add(sigma_name, 1, Support::Positive, UpdateKind::RandomWalkLog);
        break;
      case Sharing::MRIP:
        g.value = add(value_name, J, Support::Real, UpdateKind::ConjugateNormal);
        g.indep = add(ind_name, J, Support::Real, UpdateKind::ConjugateNormal);
        g.mu = add(mu_name, 1, Support::Real, UpdateKind::ConjugateNormal);
        g.sigma = add(sigma_name, 1, Support::Positive, UpdateKind::RandomWalkLog);
        break;
    }
    if (is_mixture(s) && own_mixture) {
      g.c = add(c_name, J, Support::UnitInterval, UpdateKind::ConjugateBernoulli);
      g.p = add(p_name, J, Support::UnitInterval, UpdateKind::ConjugateBeta);
    }
    return g;
  }

  // Conditional-sd parameter (psi) under a sharing structure.
  SharingGroup psi_group(Sharing s, int J, bool own_mixture) {
    SharingGroup g;
    g.sharing = s;
    switch (s) {
      case Sharing::IP:
        g.value = add("psi", J, Support::Positive, UpdateKind::RandomWalkLog);
        break;
      case Sharing::CP:
        g.common = add("psi", 1, Support::Positive, UpdateKind::RandomWalkLog);
        break;
      case Sharing::MCIP:
        g.common = add("psi_common", 1, Support::Positive, UpdateKind::RandomWalkLog);
        g.indep = add("psi_ind", J, Support::Positive, UpdateKind::RandomWalkLog);
        break;
      case Sharing::RP:
        g.value = add("psi", J, Support::Positive, UpdateKind::RandomWalkLog);
        g.hvar = add("h", 1, Support::Positive, UpdateKind::RandomWalkLog);
        break;
      case Sharing::MRIP:
        g.value = add("psi", J, Support::Positive, UpdateKind::RandomWalkLog);
        g.indep = add("psi_ind", J, Support::Positive, UpdateKind::RandomWalkLog);
        g.hvar = add("h", 1, Support::Positive, UpdateKind::RandomWalkLog);
        break;
    }
    if (is_mixture(s) && own_mixture) {
      g.c = add("c_psi", J, Support::UnitInterval, UpdateKind::ConjugateBernoulli);
      g.p = add("p_psi", J, Support::UnitInterval, UpdateKind::ConjugateBeta);
    }
    return g;
  }
};

}  // namespace

ParameterLayout build_layout(const ModelSpec& spec, const EvidenceSet& e) {
  spec.validate();
  if (e.n_records() == 0) throw ModelError("evidence set is empty");

  LayoutBuilder b;
  ParameterLayout& L = b.layout;
  const int J = e.n_indications();
  L.n_indications = J;
  L.studies_by_indication.assign(J, {});

  if (!spec.bivariate()) {
    const bool use_pfs = spec.endpoint_mode == EndpointMode::UnivariatePFS;
    for (int i = 0; i < e.n_records(); ++i) {
      const bool has = use_pfs ? e.records[i].has_pfs() : e.records[i].has_os();
      if (has) {
        L.studies_by_indication[e.indication_of(i)].push_back(
            static_cast<int>(L.model_rows.size()));
        L.model_rows.push_back(i);
      }
    }
    L.n_studies = static_cast<int>(L.model_rows.size());
    if (L.n_studies == 0) {
      throw ModelError(std::string("no record reports the ") + (use_pfs ? "PFS" : "OS") +
                       " endpoint");
    }
    if (!spec.common_effect_within_indication) {
      L.delta = b.add("delta", L.n_studies, Support::Real, UpdateKind::ConjugateNormal);
    }
    L.effect = b.location_group(spec.sharing, J, "d", "theta", "d_ind", "m_d", "tau_d", "c", "p",
                                /*own_mixture=*/true);
    if (!spec.common_effect_within_indication) {
      L.tau = b.add("tau", J, Support::Positive, UpdateKind::RandomWalkLog);
    }
    return L;
  }

  // Bivariate surrogacy mode.
  bool any_dual = false;
  for (int i = 0; i < e.n_records(); ++i) {
    const TrialRecord& r = e.records[i];
    if (!r.has_pfs()) {
      throw ModelError("bivariate mode requires PFS on every record (study '" + r.study_id + "')");
    }
    any_dual = any_dual || r.has_both();
    L.studies_by_indication[e.indication_of(i)].push_back(static_cast<int>(L.model_rows.size()));
    L.model_rows.push_back(i);
  }
  if (!any_dual) throw ModelError("bivariate mode requires at least one dual-endpoint study");
  L.n_studies = static_cast<int>(L.model_rows.size());

  L.delta_pfs = b.add("delta_pfs", L.n_studies, Support::Real, UpdateKind::ConjugateNormal);
  L.delta_os = b.add("delta_os", L.n_studies, Support::Real, UpdateKind::ConjugateNormal);
  auto& latent = b.layout.blocks[static_cast<std::size_t>(L.delta_os)].latent;
  latent.resize(static_cast<std::size_t>(L.n_studies));
  for (int s = 0; s < L.n_studies; ++s) {
    latent[static_cast<std::size_t>(s)] = e.records[L.model_rows[s]].has_os() ? 0 : 1;
  }
  L.rho_w = b.add("rho_w", L.n_studies, Support::SignedUnit, UpdateKind::RandomWalkAtanh);

  const bool tied = spec.tie_mixture_probabilities;
  L.lambda0 = b.location_group(spec.sharing, J, "lambda0", "lambda0", "lambda0_ind", "beta0",
                               "xi0", "c_lambda0", "p_lambda0", /*own_mixture=*/!tied);
  L.lambda1 = b.location_group(spec.sharing, J, "lambda1", "lambda1", "lambda1_ind", "beta1",
                               "xi1", "c_lambda1", "p_lambda1", /*own_mixture=*/!tied);
  L.psi = b.psi_group(spec.psi_sharing(), J, /*own_mixture=*/!tied);
  if (tied) {
    L.tied_mixture = true;
    L.tied_c = b.add("c", J, Support::UnitInterval, UpdateKind::ConjugateBernoulli);
    L.tied_p = b.add("p", J, Support::UnitInterval, UpdateKind::ConjugateBeta);
    L.lambda0.c = L.lambda1.c = L.tied_c;
    L.lambda0.p = L.lambda1.p = L.tied_p;
    if (is_mixture(spec.psi_sharing())) {
      L.psi.c = L.tied_c;
      L.psi.p = L.tied_p;
    }
  }
  return L;
}

double log_normal_pdf(double x, double mean, double sd) {
  const double var = sd * sd;
  if (!(var > kVarFloor)) return -kInf;
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

double log_half_normal_pdf(double x, double scale) {
  if (x < 0.0) return -kInf;
  if (!(scale * scale > kVarFloor)) return -kInf;
  const double z = x / scale;
  return std::log(2.0) - kLogSqrt2Pi - std::log(scale) - 0.5 * z * z;
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return -kInf;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log(1.0 - x) - lbeta;
}

double log_uniform_pdf(double x, double lo, double hi) {
  if (x < lo || x > hi) return -kInf;
  return -std::log(hi - lo);
}

namespace {

bool in_support(const ParamBlock& blk, double v, const PriorSettings& priors) {
  switch (blk.support) {
    case Support::Real: return std::isfinite(v);
    case Support::Positive: return v > 0.0 && std::isfinite(v);
    case Support::UnitInterval:
      if (blk.update == UpdateKind::ConjugateBernoulli) return v == 0.0 || v == 1.0;
      return v > 0.0 && v < 1.0;
    case Support::SignedUnit: {
      const auto [lo, hi] = priors.rho_uniform_bounds;
      return v > lo && v < hi && std::abs(v) < 1.0 - 1e-12;
    }
  }
  return false;
}

}  // namespace

double log_prior(const ParameterLayout& layout, const ParameterValues& v, const ModelSpec& spec) {
  if (v.size() != layout.total_dim) throw ModelError("parameter vector does not match layout");
  const PriorSettings& pr = spec.priors;
  for (const ParamBlock& blk : layout.blocks) {
    for (int k = 0; k < blk.dim; ++k) {
      if (!in_support(blk, v[blk.offset + k], pr)) return -kInf;
    }
  }

  double lp = 0.0;
  const double S = pr.effect_normal_sd;

  auto vague_normal_block = [&](int id) {
    if (id < 0) return;
    const ParamBlock& blk = layout.block(id);
    for (int k = 0; k < blk.dim; ++k) lp += log_normal_pdf(v[blk.offset + k], 0.0, S);
  };
  auto half_normal_block = [&](int id, double scale) {
    if (id < 0) return;
    const ParamBlock& blk = layout.block(id);
    for (int k = 0; k < blk.dim; ++k) lp += log_half_normal_pdf(v[blk.offset + k], scale);
  };
  auto beta_block = [&](int id) {
    if (id < 0) return;
    const ParamBlock& blk = layout.block(id);
    for (int k = 0; k < blk.dim; ++k) {
      lp += log_beta_pdf(v[blk.offset + k], pr.mixture_beta.first, pr.mixture_beta.second);
    }
  };
  auto location_group_prior = [&](const SharingGroup& g) {
    switch (g.sharing) {
      case Sharing::IP: vague_normal_block(g.value); break;
      case Sharing::CP: vague_normal_block(g.common); break;
      case Sharing::MCIP:
        vague_normal_block(g.common);
        vague_normal_block(g.indep);
        break;
      case Sharing::RP:
        vague_normal_block(g.mu);
        half_normal_block(g.sigma, pr.xi_halfnormal_scale);
        break;
      case Sharing::MRIP:
        vague_normal_block(g.indep);
        vague_normal_block(g.mu);
        half_normal_block(g.sigma, pr.xi_halfnormal_scale);
        break;
    }
  };

  if (!spec.bivariate()) {
    // Univariate: tau_d uses the same weakly informative scale as tau_j.
    const SharingGroup& g = layout.effect;
    switch (g.sharing) {
      case Sharing::IP: vague_normal_block(g.value); break;
      case Sharing::CP: vague_normal_block(g.common); break;
      case Sharing::MCIP:
        vague_normal_block(g.common);
        vague_normal_block(g.indep);
        break;
      case Sharing::RP:
        vague_normal_block(g.mu);
        half_normal_block(g.sigma, pr.tau_halfnormal_scale);
        break;
      case Sharing::MRIP:
        vague_normal_block(g.indep);
        vague_normal_block(g.mu);
        half_normal_block(g.sigma, pr.tau_halfnormal_scale);
        break;
    }
    beta_block(g.p);
    half_normal_block(layout.tau, pr.tau_halfnormal_scale);
    return lp;
  }

  // Bivariate.
  vague_normal_block(layout.delta_pfs);
  if (layout.has(layout.rho_w)) {
    const ParamBlock& blk = layout.block(layout.rho_w);
    const auto [lo, hi] = pr.rho_uniform_bounds;
    for (int k = 0; k < blk.dim; ++k) lp += log_uniform_pdf(v[blk.offset + k], lo, hi);
  }
  location_group_prior(layout.lambda0);
  location_group_prior(layout.lambda1);
  switch (layout.psi.sharing) {
    case Sharing::IP: half_normal_block(layout.psi.value, pr.psi_halfnormal_scale); break;
    case Sharing::CP: half_normal_block(layout.psi.common, pr.psi_halfnormal_scale); break;
    case Sharing::MCIP:
      half_normal_block(layout.psi.common, pr.psi_halfnormal_scale);
      half_normal_block(layout.psi.indep, pr.psi_halfnormal_scale);
      break;
    case Sharing::RP:
      if (layout.psi.hvar >= 0) {
        lp += log_gamma_pdf(v[layout.block(layout.psi.hvar).offset], pr.h_gamma_shape,
                            pr.h_gamma_rate);
      }
      break;
    case Sharing::MRIP:
      half_normal_block(layout.psi.indep, pr.psi_halfnormal_scale);
      if (layout.psi.hvar >= 0) {
        lp += log_gamma_pdf(v[layout.block(layout.psi.hvar).offset], pr.h_gamma_shape,
                            pr.h_gamma_rate);
      }
      break;
  }
  if (layout.tied_mixture) {
    beta_block(layout.tied_p);
  } else {
    beta_block(layout.lambda0.p);
    beta_block(layout.lambda1.p);
    beta_block(layout.psi.p);
  }
  return lp;
}

}  // namespace mima
