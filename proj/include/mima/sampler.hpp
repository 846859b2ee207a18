#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mima/density.hpp"

namespace mima {

struct SamplerConfig {
  int n_chains = 3;
  int burn_in = 20000;
  int samples_per_chain = 80000;
  int thin = 1;
  std::uint64_t seed = 0;
  double adapt_target_acceptance = 0.44;
  int adapt_window = 50;
  bool parallel_chains = true;

  int retained_per_chain() const { return samples_per_chain / thin; }
  void validate() const;
};

struct ChainDraws {
  Mat draws;     // retained x total_dim, one row per retained sweep
  Vec deviance;  // residual deviance per retained sweep
  std::map<std::string, double> acceptance;  // post-burn-in rate per random-walk block
};

struct PosteriorDraws {
  ModelSpec spec;
  ParameterLayout layout;
  std::vector<std::string> indications;
  SamplerConfig config;
  std::vector<ChainDraws> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int retained_per_chain() const { return config.retained_per_chain(); }
  int total_retained() const { return n_chains() * retained_per_chain(); }

  Vec chain_scalar(int chain, int block, int elem = 0) const;
  Vec pooled_scalar(int block, int elem = 0) const;
  Vec chain_effective(int chain, const SharingGroup& g, int j) const;
  Vec pooled_effective(const SharingGroup& g, int j) const;
  Vec pooled_deviance() const;
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Over-dispersed starting point for one chain: delta blocks at the observed
// estimates, locations N(0,1) scaled by (1+chain_index), scales |N(0,0.25)|+0.1,
// indicators 1, probabilities 0.5, correlations at the prior midpoint.
ParameterValues initial_values(const ModelView& m, int chain_index, std::uint64_t seed);

// Robbins-Monro scale update, kappa = 1/sqrt(window_count); burn-in only.
double adapt_step(double current_scale, double recent_acceptance, double target,
                  int window_count);

// Multi-chain Metropolis-within-Gibbs. Conjugate blocks use exact full
// conditionals; positive scales random-walk on the log scale and
// correlations on the atanh scale, with adaptation frozen after burn-in.
// A pure function of (spec, e, cfg) including the seed.
PosteriorDraws run(const ModelSpec& spec, const EvidenceSet& e, const SamplerConfig& cfg);

}  // namespace mima
