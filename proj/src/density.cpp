#include "mima/density.hpp"

#include <cmath>
#include <limits>

namespace mima {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kRhoCap = 1.0 - 1e-12;
}  // namespace

ModelView ModelView::compile(const ModelSpec& spec, const EvidenceSet& e) {
  ModelView m;
  m.spec = spec;
  m.layout = build_layout(spec, e);
  m.indications = e.indications;
  m.studies.reserve(static_cast<std::size_t>(m.layout.n_studies));
  const bool biv = spec.bivariate();
  const bool use_pfs = spec.endpoint_mode != EndpointMode::UnivariateOS;
  for (int row : m.layout.model_rows) {
    const TrialRecord& r = e.records[static_cast<std::size_t>(row)];
    StudyData s;
    s.indication = e.indication_index.at(r.indication);
    if (biv) {
      s.y1 = *r.lhr_pfs;
      s.se1 = *r.se_pfs;
      s.has2 = r.has_os();
      if (s.has2) {
        s.y2 = *r.lhr_os;
        s.se2 = *r.se_os;
      }
    } else {
      s.y1 = use_pfs ? *r.lhr_pfs : *r.lhr_os;
      s.se1 = use_pfs ? *r.se_pfs : *r.se_os;
    }
    m.studies.push_back(s);
  }
  return m;
}

int ModelView::n_obs() const {
  if (!spec.bivariate()) return n_studies();
  int n = 0;
  for (const StudyData& s : studies) n += s.has2 ? 2 : 1;
  return n;
}

double effective_value(const ParameterLayout& layout, const SharingGroup& g,
                       const ParameterValues& v, int j) {
  auto at = [&](int id, int k) { return v[layout.block(id).offset + k]; };
  switch (g.sharing) {
    case Sharing::IP:
    case Sharing::RP:
      return at(g.value, j);
    case Sharing::CP:
      return at(g.common, 0);
    case Sharing::MCIP:
      return at(g.c, j) > 0.5 ? at(g.common, 0) : at(g.indep, j);
    case Sharing::MRIP:
      return at(g.c, j) > 0.5 ? at(g.value, j) : at(g.indep, j);
  }
  return 0.0;
}

double loglik_univariate(double y, double se, double delta) {
  return log_normal_pdf(y, delta, se);
}

double loglik_bivariate(double y1, std::optional<double> y2, double se1,
                        std::optional<double> se2, double rho, double delta1, double delta2) {
  if (!y2.has_value()) return log_normal_pdf(y1, delta1, se1);
  if (!(std::abs(rho) < kRhoCap)) return -kInf;
  if (!(se1 > 0.0) || !(*se2 > 0.0)) return -kInf;
  const double z1 = (y1 - delta1) / se1;
  const double z2 = (*y2 - delta2) / *se2;
  const double omr2 = 1.0 - rho * rho;
  const double q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / omr2;
  return -kLog2Pi - std::log(se1) - std::log(*se2) - 0.5 * std::log(omr2) - 0.5 * q;
}

namespace {

// Hierarchy terms shared between the full report and the sampler helpers.

double location_hierarchy(const ParameterLayout& L, const SharingGroup& g,
                          const ParameterValues& v, double sigma_override_scale = -1.0) {
  // Exchangeable copies around (mu, sigma). sigma_override_scale unused here;
  // kept for symmetry with the psi version.
  (void)sigma_override_scale;
  if (g.sharing != Sharing::RP && g.sharing != Sharing::MRIP) return 0.0;
  const ParamBlock& val = L.block(g.value);
  const double mu = v[L.block(g.mu).offset];
  const double sigma = v[L.block(g.sigma).offset];
  double acc = 0.0;
  for (int j = 0; j < val.dim; ++j) acc += log_normal_pdf(v[val.offset + j], mu, sigma);
  return acc;
}

double psi_hierarchy(const ParameterLayout& L, const SharingGroup& g, const ParameterValues& v) {
  if (g.sharing != Sharing::RP && g.sharing != Sharing::MRIP) return 0.0;
  const ParamBlock& val = L.block(g.value);
  const double h = v[L.block(g.hvar).offset];
  if (!(h > 0.0)) return -kInf;
  const double scale = std::sqrt(h);
  double acc = 0.0;
  for (int j = 0; j < val.dim; ++j) acc += log_half_normal_pdf(v[val.offset + j], scale);
  return acc;
}

double indicator_mass(const ParameterLayout& L, int c_block, int p_block,
                      const ParameterValues& v) {
  if (c_block < 0) return 0.0;
  const ParamBlock& cb = L.block(c_block);
  const ParamBlock& pb = L.block(p_block);
  double acc = 0.0;
  for (int j = 0; j < cb.dim; ++j) {
    const double p = v[pb.offset + j];
    if (!(p > 0.0 && p < 1.0)) return -kInf;
    acc += v[cb.offset + j] > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return acc;
}

}  // namespace

double univariate_indication_term(const ModelView& m, const ParameterValues& v, int j,
                                  double location, double tau) {
  const ParameterLayout& L = m.layout;
  double acc = 0.0;
  if (m.spec.common_effect_within_indication) {
    for (int s : L.studies_by_indication[static_cast<std::size_t>(j)]) {
      acc += log_normal_pdf(m.studies[static_cast<std::size_t>(s)].y1, location,
                            m.studies[static_cast<std::size_t>(s)].se1);
    }
  } else {
    const int off = L.block(L.delta).offset;
    for (int s : L.studies_by_indication[static_cast<std::size_t>(j)]) {
      acc += log_normal_pdf(v[off + s], location, tau);
    }
  }
  return acc;
}

double bivariate_regression_term(const ModelView& m, const ParameterValues& v, int j,
                                 double lambda0, double lambda1, double psi) {
  const ParameterLayout& L = m.layout;
  const int off1 = L.block(L.delta_pfs).offset;
  const int off2 = L.block(L.delta_os).offset;
  double acc = 0.0;
  for (int s : L.studies_by_indication[static_cast<std::size_t>(j)]) {
    acc += log_normal_pdf(v[off2 + s], lambda0 + lambda1 * v[off1 + s], psi);
  }
  return acc;
}

DensityTermReport log_density_report(const ModelView& m, const ParameterValues& v) {
  const ParameterLayout& L = m.layout;
  DensityTermReport rep;
  rep.logprior = log_prior(L, v, m.spec);
  rep.study_loglik = Vec::Zero(L.n_studies);
  if (!std::isfinite(rep.logprior)) {
    rep.total = -kInf;
    return rep;
  }

  if (!m.spec.bivariate()) {
    const bool common = m.spec.common_effect_within_indication;
    for (int s = 0; s < L.n_studies; ++s) {
      const StudyData& sd = m.studies[static_cast<std::size_t>(s)];
      const double delta = common
                               ? effective_value(L, L.effect, v, sd.indication)
                               : v[L.block(L.delta).offset + s];
      rep.study_loglik[s] = loglik_univariate(sd.y1, sd.se1, delta);
    }
    rep.loglik = rep.study_loglik.sum();
    if (!common) {
      const int toff = L.block(L.tau).offset;
      for (int j = 0; j < L.n_indications; ++j) {
        rep.hierarchy_study +=
            univariate_indication_term(m, v, j, effective_value(L, L.effect, v, j), v[toff + j]);
      }
    }
    rep.hierarchy_indication = location_hierarchy(L, L.effect, v);
    rep.indicator_mass = indicator_mass(L, L.effect.c, L.effect.p, v);
  } else {
    const int off1 = L.block(L.delta_pfs).offset;
    const int off2 = L.block(L.delta_os).offset;
    const int offr = L.block(L.rho_w).offset;
    for (int s = 0; s < L.n_studies; ++s) {
      const StudyData& sd = m.studies[static_cast<std::size_t>(s)];
      if (sd.has2) {
        rep.study_loglik[s] = loglik_bivariate(sd.y1, sd.y2, sd.se1, sd.se2, v[offr + s],
                                               v[off1 + s], v[off2 + s]);
      } else {
        rep.study_loglik[s] = loglik_univariate(sd.y1, sd.se1, v[off1 + s]);
      }
    }
    rep.loglik = rep.study_loglik.sum();
    for (int j = 0; j < L.n_indications; ++j) {
      rep.hierarchy_study += bivariate_regression_term(
          m, v, j, effective_value(L, L.lambda0, v, j), effective_value(L, L.lambda1, v, j),
          effective_value(L, L.psi, v, j));
    }
    rep.hierarchy_indication = location_hierarchy(L, L.lambda0, v) +
                               location_hierarchy(L, L.lambda1, v) + psi_hierarchy(L, L.psi, v);
    if (L.tied_mixture) {
      rep.indicator_mass = indicator_mass(L, L.tied_c, L.tied_p, v);
    } else {
      rep.indicator_mass = indicator_mass(L, L.lambda0.c, L.lambda0.p, v) +
                           indicator_mass(L, L.lambda1.c, L.lambda1.p, v) +
                           indicator_mass(L, L.psi.c, L.psi.p, v);
    }
  }

  rep.total = rep.loglik + rep.hierarchy_study + rep.hierarchy_indication + rep.indicator_mass +
              rep.logprior;
  if (std::isnan(rep.total)) rep.total = -kInf;
  return rep;
}

double log_joint(const ModelView& m, const ParameterValues& v) {
  return log_density_report(m, v).total;
}

double log_joint(const ModelSpec& spec, const EvidenceSet& e, const ParameterValues& v) {
  return log_joint(ModelView::compile(spec, e), v);
}

DevianceFocus extract_focus(const ModelView& m, const ParameterValues& v) {
  const ParameterLayout& L = m.layout;
  DevianceFocus f;
  if (!m.spec.bivariate()) {
    f.delta1 = Vec::Zero(L.n_studies);
    if (m.spec.common_effect_within_indication) {
      for (int s = 0; s < L.n_studies; ++s) {
        f.delta1[s] = effective_value(L, L.effect, v, m.studies[static_cast<std::size_t>(s)].indication);
      }
    } else {
      f.delta1 = v.segment(L.block(L.delta).offset, L.n_studies);
    }
    return f;
  }
  f.delta1 = v.segment(L.block(L.delta_pfs).offset, L.n_studies);
  f.delta2 = v.segment(L.block(L.delta_os).offset, L.n_studies);
  f.rho = v.segment(L.block(L.rho_w).offset, L.n_studies);
  return f;
}

double residual_deviance(const ModelView& m, const DevianceFocus& focus) {
  double dev = 0.0;
  for (int s = 0; s < m.n_studies(); ++s) {
    const StudyData& sd = m.studies[static_cast<std::size_t>(s)];
    const double z1 = (sd.y1 - focus.delta1[s]) / sd.se1;
    if (!m.spec.bivariate() || !sd.has2) {
      dev += z1 * z1;
      continue;
    }
    const double z2 = (sd.y2 - focus.delta2[s]) / sd.se2;
    const double rho = focus.rho[s];
    dev += (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (1.0 - rho * rho);
  }
  return dev;
}

double residual_deviance(const ModelView& m, const ParameterValues& v) {
  return residual_deviance(m, extract_focus(m, v));
}

double residual_deviance(const ModelSpec& spec, const EvidenceSet& e, const ParameterValues& v) {
  const ModelView m = ModelView::compile(spec, e);
  return residual_deviance(m, v);
}

}  // namespace mima
