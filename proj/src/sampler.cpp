#include "mima/sampler.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "mima/rng.hpp"

namespace mima {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SamplerConfig::validate() const {
  if (n_chains < 1) throw SamplerError("n_chains must be >= 1");
  if (burn_in < 0) throw SamplerError("burn_in must be >= 0");
  if (samples_per_chain < 1) throw SamplerError("samples_per_chain must be >= 1");
  if (thin < 1) throw SamplerError("thin must be >= 1");
  if (samples_per_chain % thin != 0) {
    throw SamplerError("samples_per_chain must be a multiple of thin");
  }
  if (!(adapt_target_acceptance > 0.0 && adapt_target_acceptance < 1.0)) {
    throw SamplerError("adapt_target_acceptance must lie in (0, 1)");
  }
  if (adapt_window < 1) throw SamplerError("adapt_window must be >= 1");
}

double adapt_step(double current_scale, double recent_acceptance, double target,
                  int window_count) {
  const double kappa = 1.0 / std::sqrt(static_cast<double>(std::max(1, window_count)));
  return current_scale * std::exp(kappa * (recent_acceptance - target));
}

ParameterValues initial_values(const ModelView& m, int chain_index, std::uint64_t seed) {
  const ParameterLayout& L = m.layout;
  Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(chain_index)));
  ParameterValues v = Vec::Zero(L.total_dim);
  const double spread = 1.0 + chain_index;
  const auto [rho_lo, rho_hi] = m.spec.priors.rho_uniform_bounds;

  for (std::size_t bi = 0; bi < L.blocks.size(); ++bi) {
    const ParamBlock& blk = L.blocks[bi];
    const int id = static_cast<int>(bi);
    for (int k = 0; k < blk.dim; ++k) {
      double& x = v[blk.offset + k];
      if (id == L.delta || id == L.delta_pfs) {
        x = m.studies[static_cast<std::size_t>(k)].y1;
      } else if (id == L.delta_os) {
        x = m.studies[static_cast<std::size_t>(k)].has2 ? m.studies[static_cast<std::size_t>(k)].y2
                                                        : 0.0;
      } else if (id == L.rho_w) {
        x = 0.5 * (rho_lo + rho_hi);
      } else {
        switch (blk.support) {
          case Support::Real: x = spread * rng.normal(); break;
          case Support::Positive: x = std::abs(rng.normal(0.0, 0.25)) + 0.1; break;
          case Support::UnitInterval:
            x = blk.update == UpdateKind::ConjugateBernoulli ? 1.0 : 0.5;
            break;
          case Support::SignedUnit: x = 0.5 * (rho_lo + rho_hi); break;
        }
      }
    }
  }
  return v;
}

namespace {

// Quadratic form of a normal full conditional: log density has the shape
// -(prec*x^2)/2 + b*x + const, so the draw is N(b/prec, 1/prec).
struct NormalQuad {
  double prec = 0.0;
  double b = 0.0;
  void add(double precision, double mean_times_prec) {
    prec += precision;
    b += mean_times_prec;
  }
  void add_obs(double value, double variance) { add(1.0 / variance, value / variance); }
  double draw(Rng& rng) const { return rng.normal(b / prec, 1.0 / std::sqrt(prec)); }
};

struct AdaptState {
  double scale = 0.5;
  int proposals = 0;
  int accepts = 0;
  int windows = 0;
  long post_proposals = 0;
  long post_accepts = 0;
};

class ChainSampler {
 public:
  ChainSampler(const ModelView& m, const SamplerConfig& cfg, int chain_index)
      : m_(m),
        L_(m.layout),
        cfg_(cfg),
        rng_(Rng::derive(cfg.seed, static_cast<std::uint64_t>(chain_index))),
        chain_index_(chain_index) {
    adapt_.assign(static_cast<std::size_t>(L_.total_dim), AdaptState{});
  }

  ChainDraws sample() {
    init();
    const int retained = cfg_.retained_per_chain();
    ChainDraws out;
    out.draws.resize(retained, L_.total_dim);
    out.deviance.resize(retained);

    for (int it = 0; it < cfg_.burn_in; ++it) {
      sweep(/*adapting=*/true);
    }
    int kept = 0;
    for (int it = 0; it < cfg_.samples_per_chain; ++it) {
      sweep(/*adapting=*/false);
      if ((it + 1) % cfg_.thin == 0) {
        out.draws.row(kept) = v_.transpose();
        out.deviance[kept] = residual_deviance(m_, v_);
        ++kept;
      }
    }

    for (const ParamBlock& blk : L_.blocks) {
      if (blk.update != UpdateKind::RandomWalkLog && blk.update != UpdateKind::RandomWalkAtanh) {
        continue;
      }
      long props = 0, accs = 0;
      for (int k = 0; k < blk.dim; ++k) {
        props += adapt_[static_cast<std::size_t>(blk.offset + k)].post_proposals;
        accs += adapt_[static_cast<std::size_t>(blk.offset + k)].post_accepts;
      }
      out.acceptance[blk.name] = props > 0 ? static_cast<double>(accs) / props : 1.0;
    }
    return out;
  }

 private:
  void init() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      v_ = initial_values(m_, chain_index_, cfg_.seed + static_cast<std::uint64_t>(attempt));
      if (std::isfinite(log_joint(m_, v_))) return;
    }
    throw SamplerError("non-finite log joint at initialization (offending block: " +
                       offending_block() + ")");
  }

  std::string offending_block() const {
    for (const ParamBlock& blk : L_.blocks) {
      for (int k = 0; k < blk.dim; ++k) {
        if (!std::isfinite(v_[blk.offset + k])) return blk.name;
      }
    }
    return "joint";
  }

  // ---- generic random-walk on a transformed scale ----

  template <typename LogTarget>
  void rw_update(int flat_index, UpdateKind kind, LogTarget&& log_target, bool adapting) {
    AdaptState& st = adapt_[static_cast<std::size_t>(flat_index)];
    double& x = v_[flat_index];
    const bool is_log = kind == UpdateKind::RandomWalkLog;
    const double u = is_log ? std::log(x) : std::atanh(x);
    const double u_prop = u + st.scale * rng_.normal();
    const double x_prop = is_log ? std::exp(u_prop) : std::tanh(u_prop);
    const double jac = is_log ? u_prop - u
                              : std::log1p(-x_prop * x_prop) - std::log1p(-x * x);
    const double cur = log_target(x);
    const double prop = log_target(x_prop);
    bool accept = false;
    if (std::isfinite(prop)) {
      const double lr = prop - cur + jac;
      accept = lr >= 0.0 || std::log(rng_.uniform_pos()) < lr;
    }
    if (accept) x = x_prop;

    if (adapting) {
      ++st.proposals;
      st.accepts += accept ? 1 : 0;
      if (st.proposals >= cfg_.adapt_window) {
        ++st.windows;
        st.scale = adapt_step(st.scale, static_cast<double>(st.accepts) / st.proposals,
                              cfg_.adapt_target_acceptance, st.windows);
        st.proposals = 0;
        st.accepts = 0;
      }
    } else {
      ++st.post_proposals;
      st.post_accepts += accept ? 1 : 0;
    }
  }

  // ---- helpers over the current state ----

  double at(int block, int k = 0) const { return v_[L_.block(block).offset + k]; }
  double& mut(int block, int k = 0) { return v_[L_.block(block).offset + k]; }
  bool ind_on(const SharingGroup& g, int j) const { return g.c < 0 || at(g.c, j) > 0.5; }
  double eff(const SharingGroup& g, int j) const { return effective_value(L_, g, v_, j); }

  double prior_sd() const { return m_.spec.priors.effect_normal_sd; }

  // Indication-level data quads for the three conjugate location families.
  NormalQuad effect_quad(int j) const {
    NormalQuad q;
    if (m_.spec.common_effect_within_indication) {
      for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
        const StudyData& sd = m_.studies[static_cast<std::size_t>(s)];
        q.add_obs(sd.y1, sd.se1 * sd.se1);
      }
    } else {
      const double tau = at(L_.tau, j);
      const double var = tau * tau;
      for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
        q.add_obs(v_[L_.block(L_.delta).offset + s], var);
      }
    }
    return q;
  }

  NormalQuad lambda0_quad(int j) const {
    NormalQuad q;
    const double l1 = eff(L_.lambda1, j);
    const double psi = eff(L_.psi, j);
    const double var = psi * psi;
    const int off1 = L_.block(L_.delta_pfs).offset;
    const int off2 = L_.block(L_.delta_os).offset;
    for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
      q.add_obs(v_[off2 + s] - l1 * v_[off1 + s], var);
    }
    return q;
  }

  NormalQuad lambda1_quad(int j) const {
    NormalQuad q;
    const double l0 = eff(L_.lambda0, j);
    const double psi = eff(L_.psi, j);
    const double var = psi * psi;
    const int off1 = L_.block(L_.delta_pfs).offset;
    const int off2 = L_.block(L_.delta_os).offset;
    for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
      const double d1 = v_[off1 + s];
      q.add(d1 * d1 / var, d1 * (v_[off2 + s] - l0) / var);
    }
    return q;
  }

  // ---- block updates ----

  void update_delta_univariate() {
    const int off = L_.block(L_.delta).offset;
    for (int j = 0; j < L_.n_indications; ++j) {
      const double dj = eff(L_.effect, j);
      const double tau = at(L_.tau, j);
      const double tau_var = tau * tau;
      for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
        const StudyData& sd = m_.studies[static_cast<std::size_t>(s)];
        NormalQuad q;
        q.add_obs(sd.y1, sd.se1 * sd.se1);
        q.add_obs(dj, tau_var);
        v_[off + s] = q.draw(rng_);
      }
    }
  }

  void update_delta_pfs() {
    const int off1 = L_.block(L_.delta_pfs).offset;
    const int off2 = L_.block(L_.delta_os).offset;
    const int offr = L_.block(L_.rho_w).offset;
    const double S = prior_sd();
    for (int j = 0; j < L_.n_indications; ++j) {
      const double l0 = eff(L_.lambda0, j);
      const double l1 = eff(L_.lambda1, j);
      const double psi = eff(L_.psi, j);
      const double psi_var = psi * psi;
      for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
        const StudyData& sd = m_.studies[static_cast<std::size_t>(s)];
        NormalQuad q;
        q.add(1.0 / (S * S), 0.0);
        q.add(l1 * l1 / psi_var, l1 * (v_[off2 + s] - l0) / psi_var);
        if (sd.has2) {
          const double rho = v_[offr + s];
          const double omr2 = 1.0 - rho * rho;
          const double o11 = 1.0 / (sd.se1 * sd.se1 * omr2);
          const double o12 = -rho / (sd.se1 * sd.se2 * omr2);
          q.add(o11, o11 * sd.y1 + o12 * (sd.y2 - v_[off2 + s]));
        } else {
          q.add_obs(sd.y1, sd.se1 * sd.se1);
        }
        v_[off1 + s] = q.draw(rng_);
      }
    }
  }

  void update_delta_os() {
    const int off1 = L_.block(L_.delta_pfs).offset;
    const int off2 = L_.block(L_.delta_os).offset;
    const int offr = L_.block(L_.rho_w).offset;
    for (int j = 0; j < L_.n_indications; ++j) {
      const double l0 = eff(L_.lambda0, j);
      const double l1 = eff(L_.lambda1, j);
      const double psi = eff(L_.psi, j);
      const double psi_var = psi * psi;
      for (int s : L_.studies_by_indication[static_cast<std::size_t>(j)]) {
        const StudyData& sd = m_.studies[static_cast<std::size_t>(s)];
        NormalQuad q;
        q.add_obs(l0 + l1 * v_[off1 + s], psi_var);
        if (sd.has2) {
          const double rho = v_[offr + s];
          const double omr2 = 1.0 - rho * rho;
          const double o22 = 1.0 / (sd.se2 * sd.se2 * omr2);
          const double o12 = -rho / (sd.se1 * sd.se2 * omr2);
          q.add(o22, o22 * sd.y2 + o12 * (sd.y1 - v_[off1 + s]));
        }
        v_[off2 + s] = q.draw(rng_);
      }
    }
  }

  void update_rho(bool adapting) {
    const ParamBlock& blk = L_.block(L_.rho_w);
    const int off1 = L_.block(L_.delta_pfs).offset;
    const int off2 = L_.block(L_.delta_os).offset;
    const auto [lo, hi] = m_.spec.priors.rho_uniform_bounds;
    for (int s = 0; s < blk.dim; ++s) {
      const StudyData& sd = m_.studies[static_cast<std::size_t>(s)];
      if (!sd.has2) {
        // No likelihood term: the full conditional is the uniform prior.
        v_[blk.offset + s] = rng_.uniform(lo, hi);
        continue;
      }
      const double d1 = v_[off1 + s];
      const double d2 = v_[off2 + s];
      rw_update(blk.offset + s, UpdateKind::RandomWalkAtanh,
                [&](double rho) {
                  if (rho <= lo || rho >= hi) return -kInf;
                  return loglik_bivariate(sd.y1, sd.y2, sd.se1, sd.se2, rho, d1, d2);
                },
                adapting);
    }
  }

  void update_tau(bool adapting) {
    const ParamBlock& blk = L_.block(L_.tau);
    const double scale = m_.spec.priors.tau_halfnormal_scale;
    for (int j = 0; j < blk.dim; ++j) {
      const double dj = eff(L_.effect, j);
      rw_update(blk.offset + j, UpdateKind::RandomWalkLog,
                [&](double tau) {
                  return log_half_normal_pdf(tau, scale) +
                         univariate_indication_term(m_, v_, j, dj, tau);
                },
                adapting);
    }
  }

  // Location-family conjugate updates. quad(j) is the data contribution of
  // indication j to the shared parameter.
  template <typename QuadFn>
  void update_location_value(const SharingGroup& g, QuadFn&& quad) {
    const double S = prior_sd();
    const ParamBlock& blk = L_.block(g.value);
    const bool exch = g.sharing == Sharing::RP || g.sharing == Sharing::MRIP;
    const double mu = exch ? at(g.mu) : 0.0;
    const double sig = exch ? at(g.sigma) : S;
    for (int j = 0; j < blk.dim; ++j) {
      NormalQuad q;
      q.add_obs(mu, sig * sig);
      if (g.sharing != Sharing::MRIP || ind_on(g, j)) {
        const NormalQuad dq = quad(j);
        q.add(dq.prec, dq.b);
      }
      mut(g.value, j) = q.draw(rng_);
    }
  }

  template <typename QuadFn>
  void update_location_common(const SharingGroup& g, QuadFn&& quad) {
    const double S = prior_sd();
    NormalQuad q;
    q.add(1.0 / (S * S), 0.0);
    for (int j = 0; j < L_.n_indications; ++j) {
      if (g.sharing == Sharing::CP || ind_on(g, j)) {
        const NormalQuad dq = quad(j);
        q.add(dq.prec, dq.b);
      }
    }
    mut(g.common) = q.draw(rng_);
  }

  template <typename QuadFn>
  void update_location_indep(const SharingGroup& g, QuadFn&& quad) {
    const double S = prior_sd();
    const ParamBlock& blk = L_.block(g.indep);
    for (int j = 0; j < blk.dim; ++j) {
      NormalQuad q;
      q.add(1.0 / (S * S), 0.0);
      if (!ind_on(g, j)) {
        const NormalQuad dq = quad(j);
        q.add(dq.prec, dq.b);
      }
      mut(g.indep, j) = q.draw(rng_);
    }
  }

  void update_location_mu(const SharingGroup& g) {
    const double S = prior_sd();
    const double sig = at(g.sigma);
    const ParamBlock& blk = L_.block(g.value);
    NormalQuad q;
    q.add(1.0 / (S * S), 0.0);
    for (int j = 0; j < blk.dim; ++j) q.add_obs(at(g.value, j), sig * sig);
    mut(g.mu) = q.draw(rng_);
  }

  void update_location_sigma(const SharingGroup& g, double prior_scale, bool adapting) {
    const ParamBlock& blk = L_.block(g.value);
    const double mu = at(g.mu);
    rw_update(L_.block(g.sigma).offset, UpdateKind::RandomWalkLog,
              [&](double sig) {
                double t = log_half_normal_pdf(sig, prior_scale);
                for (int j = 0; j < blk.dim; ++j) t += log_normal_pdf(at(g.value, j), mu, sig);
                return t;
              },
              adapting);
  }

  // Mixture indicator: exact Bernoulli full conditional from the two
  // component G factors; the component priors cancel.
  template <typename GFn>
  void update_indicator(const SharingGroup& g, GFn&& log_g) {
    const ParamBlock& blk = L_.block(g.c);
    for (int j = 0; j < blk.dim; ++j) {
      const double p = at(g.p, j);
      const double lg1 = log_g(j, true);
      const double lg0 = log_g(j, false);
      const double logit = std::log(p) - std::log1p(-p) + lg1 - lg0;
      double prob;
      if (logit > 35.0) {
        prob = 1.0;
      } else if (logit < -35.0) {
        prob = 0.0;
      } else {
        prob = 1.0 / (1.0 + std::exp(-logit));
      }
      mut(g.c, j) = rng_.bernoulli(prob) ? 1.0 : 0.0;
    }
  }

  void update_mixture_p(const SharingGroup& g) {
    const auto [a, b] = m_.spec.priors.mixture_beta;
    const ParamBlock& blk = L_.block(g.p);
    for (int j = 0; j < blk.dim; ++j) {
      const double c = at(g.c, j);
      mut(g.p, j) = rng_.beta(a + c, b + 1.0 - c);
    }
  }

  // Component value of a location group under a forced indicator state.
  double location_component(const SharingGroup& g, int j, bool shared) const {
    switch (g.sharing) {
      case Sharing::MCIP: return shared ? at(g.common) : at(g.indep, j);
      case Sharing::MRIP: return shared ? at(g.value, j) : at(g.indep, j);
      default: return eff(g, j);
    }
  }

  double psi_component(int j, bool shared) const {
    const SharingGroup& g = L_.psi;
    if (!is_mixture(g.sharing)) return eff(g, j);
    return g.sharing == Sharing::MCIP ? (shared ? at(g.common) : at(g.indep, j))
                                      : (shared ? at(g.value, j) : at(g.indep, j));
  }

  // ---- psi-family updates ----

  void update_psi_values(bool adapting) {
    const SharingGroup& g = L_.psi;
    const double c0 = m_.spec.priors.psi_halfnormal_scale;
    const bool exch = g.sharing == Sharing::RP || g.sharing == Sharing::MRIP;
    const double prior_scale = exch ? std::sqrt(at(g.hvar)) : c0;
    const ParamBlock& blk = L_.block(g.value);
    for (int j = 0; j < blk.dim; ++j) {
      const bool coupled = g.sharing != Sharing::MRIP || ind_on(g, j);
      if (!coupled) {
        mut(g.value, j) = std::abs(rng_.normal(0.0, prior_scale));
        continue;
      }
      const double l0 = eff(L_.lambda0, j);
      const double l1 = eff(L_.lambda1, j);
      rw_update(blk.offset + j, UpdateKind::RandomWalkLog,
                [&](double psi) {
                  return log_half_normal_pdf(psi, prior_scale) +
                         bivariate_regression_term(m_, v_, j, l0, l1, psi);
                },
                adapting);
    }
  }

  void update_psi_common(bool adapting) {
    const SharingGroup& g = L_.psi;
    const double c0 = m_.spec.priors.psi_halfnormal_scale;
    rw_update(L_.block(g.common).offset, UpdateKind::RandomWalkLog,
              [&](double psi) {
                double t = log_half_normal_pdf(psi, c0);
                for (int j = 0; j < L_.n_indications; ++j) {
                  if (g.sharing == Sharing::CP || ind_on(g, j)) {
                    t += bivariate_regression_term(m_, v_, j, eff(L_.lambda0, j),
                                                   eff(L_.lambda1, j), psi);
                  }
                }
                return t;
              },
              adapting);
  }

  void update_psi_indep(bool adapting) {
    const SharingGroup& g = L_.psi;
    const double c0 = m_.spec.priors.psi_halfnormal_scale;
    const ParamBlock& blk = L_.block(g.indep);
    for (int j = 0; j < blk.dim; ++j) {
      if (ind_on(g, j)) {
        mut(g.indep, j) = std::abs(rng_.normal(0.0, c0));
        continue;
      }
      const double l0 = eff(L_.lambda0, j);
      const double l1 = eff(L_.lambda1, j);
      rw_update(blk.offset + j, UpdateKind::RandomWalkLog,
                [&](double psi) {
                  return log_half_normal_pdf(psi, c0) +
                         bivariate_regression_term(m_, v_, j, l0, l1, psi);
                },
                adapting);
    }
  }

  void update_h(bool adapting) {
    const SharingGroup& g = L_.psi;
    const ParamBlock& blk = L_.block(g.value);
    const double shape = m_.spec.priors.h_gamma_shape;
    const double rate = m_.spec.priors.h_gamma_rate;
    rw_update(L_.block(g.hvar).offset, UpdateKind::RandomWalkLog,
              [&](double h) {
                double t = log_gamma_pdf(h, shape, rate);
                const double sc = std::sqrt(h);
                for (int j = 0; j < blk.dim; ++j) t += log_half_normal_pdf(at(g.value, j), sc);
                return t;
              },
              adapting);
  }

  // ---- sweep ----

  void sweep(bool adapting) {
    const bool biv = m_.spec.bivariate();
    auto effect_quad_fn = [this](int j) { return effect_quad(j); };
    auto l0_quad_fn = [this](int j) { return lambda0_quad(j); };
    auto l1_quad_fn = [this](int j) { return lambda1_quad(j); };

    for (std::size_t bi = 0; bi < L_.blocks.size(); ++bi) {
      const int id = static_cast<int>(bi);
      if (id == L_.delta) {
        update_delta_univariate();
      } else if (id == L_.delta_pfs) {
        update_delta_pfs();
      } else if (id == L_.delta_os) {
        update_delta_os();
      } else if (id == L_.rho_w) {
        update_rho(adapting);
      } else if (id == L_.tau) {
        update_tau(adapting);
      } else if (!biv && id == L_.effect.value) {
        update_location_value(L_.effect, effect_quad_fn);
      } else if (!biv && id == L_.effect.common) {
        update_location_common(L_.effect, effect_quad_fn);
      } else if (!biv && id == L_.effect.indep) {
        update_location_indep(L_.effect, effect_quad_fn);
      } else if (!biv && id == L_.effect.mu) {
        update_location_mu(L_.effect);
      } else if (!biv && id == L_.effect.sigma) {
        update_location_sigma(L_.effect, m_.spec.priors.tau_halfnormal_scale, adapting);
      } else if (!biv && id == L_.effect.c) {
        update_indicator(L_.effect, [&](int j, bool shared) {
          const double tau =
              m_.spec.common_effect_within_indication ? 0.0 : at(L_.tau, j);
          return univariate_indication_term(m_, v_, j, location_component(L_.effect, j, shared),
                                            tau);
        });
      } else if (!biv && id == L_.effect.p) {
        update_mixture_p(L_.effect);
      } else if (biv && id == L_.lambda0.value) {
        update_location_value(L_.lambda0, l0_quad_fn);
      } else if (biv && id == L_.lambda0.common) {
        update_location_common(L_.lambda0, l0_quad_fn);
      } else if (biv && id == L_.lambda0.indep) {
        update_location_indep(L_.lambda0, l0_quad_fn);
      } else if (biv && id == L_.lambda0.mu) {
        update_location_mu(L_.lambda0);
      } else if (biv && id == L_.lambda0.sigma) {
        update_location_sigma(L_.lambda0, m_.spec.priors.xi_halfnormal_scale, adapting);
      } else if (biv && id == L_.lambda1.value) {
        update_location_value(L_.lambda1, l1_quad_fn);
      } else if (biv && id == L_.lambda1.common) {
        update_location_common(L_.lambda1, l1_quad_fn);
      } else if (biv && id == L_.lambda1.indep) {
        update_location_indep(L_.lambda1, l1_quad_fn);
      } else if (biv && id == L_.lambda1.mu) {
        update_location_mu(L_.lambda1);
      } else if (biv && id == L_.lambda1.sigma) {
        update_location_sigma(L_.lambda1, m_.spec.priors.xi_halfnormal_scale, adapting);
      } else if (biv && id == L_.psi.value) {
        update_psi_values(adapting);
      } else if (biv && id == L_.psi.common) {
        update_psi_common(adapting);
      } else if (biv && id == L_.psi.indep) {
        update_psi_indep(adapting);
      } else if (biv && id == L_.psi.hvar) {
        update_h(adapting);
      } else if (biv && L_.tied_mixture && id == L_.tied_c) {
        update_indicator(L_.lambda0, [&](int j, bool shared) {
          return bivariate_regression_term(m_, v_, j, location_component(L_.lambda0, j, shared),
                                           location_component(L_.lambda1, j, shared),
                                           psi_component(j, shared));
        });
      } else if (biv && L_.tied_mixture && id == L_.tied_p) {
        update_mixture_p(L_.lambda0);
      } else if (biv && !L_.tied_mixture && id == L_.lambda0.c) {
        update_indicator(L_.lambda0, [&](int j, bool shared) {
          return bivariate_regression_term(m_, v_, j, location_component(L_.lambda0, j, shared),
                                           eff(L_.lambda1, j), eff(L_.psi, j));
        });
      } else if (biv && !L_.tied_mixture && id == L_.lambda0.p) {
        update_mixture_p(L_.lambda0);
      } else if (biv && !L_.tied_mixture && id == L_.lambda1.c) {
        update_indicator(L_.lambda1, [&](int j, bool shared) {
          return bivariate_regression_term(m_, v_, j, eff(L_.lambda0, j),
                                           location_component(L_.lambda1, j, shared),
                                           eff(L_.psi, j));
        });
      } else if (biv && !L_.tied_mixture && id == L_.lambda1.p) {
        update_mixture_p(L_.lambda1);
      } else if (biv && !L_.tied_mixture && id == L_.psi.c) {
        update_indicator(L_.psi, [&](int j, bool shared) {
          return bivariate_regression_term(m_, v_, j, eff(L_.lambda0, j), eff(L_.lambda1, j),
                                           psi_component(j, shared));
        });
      } else if (biv && !L_.tied_mixture && id == L_.psi.p) {
        update_mixture_p(L_.psi);
      }
    }
  }

  const ModelView& m_;
  const ParameterLayout& L_;
  SamplerConfig cfg_;
  Rng rng_;
  int chain_index_;
  ParameterValues v_;
  std::vector<AdaptState> adapt_;
};

}  // namespace

PosteriorDraws run(const ModelSpec& spec, const EvidenceSet& e, const SamplerConfig& cfg) {
  cfg.validate();
  const ModelView m = ModelView::compile(spec, e);

  PosteriorDraws out;
  out.spec = spec;
  out.layout = m.layout;
  out.indications = m.indications;
  out.config = cfg;
  out.chains.resize(static_cast<std::size_t>(cfg.n_chains));

  auto run_chain = [&](int k) {
    ChainSampler chain(m, cfg, k);
    out.chains[static_cast<std::size_t>(k)] = chain.sample();
  };

  if (cfg.parallel_chains && cfg.n_chains > 1) {
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    threads.reserve(static_cast<std::size_t>(cfg.n_chains));
    for (int k = 0; k < cfg.n_chains; ++k) {
      threads.emplace_back([&, k] {
        try {
          run_chain(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (int k = 0; k < cfg.n_chains; ++k) run_chain(k);
  }
  return out;
}

Vec PosteriorDraws::chain_scalar(int chain, int block, int elem) const {
  const ParamBlock& blk = layout.block(block);
  return chains[static_cast<std::size_t>(chain)].draws.col(blk.offset + elem);
}

Vec PosteriorDraws::pooled_scalar(int block, int elem) const {
  const int per = retained_per_chain();
  Vec out(total_retained());
  for (int k = 0; k < n_chains(); ++k) out.segment(k * per, per) = chain_scalar(k, block, elem);
  return out;
}

Vec PosteriorDraws::chain_effective(int chain, const SharingGroup& g, int j) const {
  switch (g.sharing) {
    case Sharing::IP:
    case Sharing::RP:
      return chain_scalar(chain, g.value, j);
    case Sharing::CP:
      return chain_scalar(chain, g.common, 0);
    case Sharing::MCIP: {
      const Vec c = chain_scalar(chain, g.c, j);
      const Vec shared = chain_scalar(chain, g.common, 0);
      const Vec ind = chain_scalar(chain, g.indep, j);
      return (c.array() * shared.array() + (1.0 - c.array()) * ind.array()).matrix();
    }
    case Sharing::MRIP: {
      const Vec c = chain_scalar(chain, g.c, j);
      const Vec exch = chain_scalar(chain, g.value, j);
      const Vec ind = chain_scalar(chain, g.indep, j);
      return (c.array() * exch.array() + (1.0 - c.array()) * ind.array()).matrix();
    }
  }
  return Vec();
}

Vec PosteriorDraws::pooled_effective(const SharingGroup& g, int j) const {
  const int per = retained_per_chain();
  Vec out(total_retained());
  for (int k = 0; k < n_chains(); ++k) out.segment(k * per, per) = chain_effective(k, g, j);
  return out;
}

Vec PosteriorDraws::pooled_deviance() const {
  const int per = retained_per_chain();
  Vec out(total_retained());
  for (int k = 0; k < n_chains(); ++k) {
    out.segment(k * per, per) = chains[static_cast<std::size_t>(k)].deviance;
  }
  return out;
}

}  // namespace mima
