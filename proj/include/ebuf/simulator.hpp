#pragma once

#include <cstdint>
#include <vector>

#include "ebuf/channel.hpp"
#include "ebuf/eh_model.hpp"

namespace ebuf {

struct SimConfig {
  PolicySpec spec;
  GammaEHModel eh;
  std::int64_t slots = 1'000'000;
  std::int64_t burn_in = 10'000;
  std::uint64_t seed = 1;
  int histogram_bins = 400;
  double initial_energy = 0.0;

  void validate() const;
};

struct SimSummary {
  // Uniform bins over [0, x_max]; bin_mass sums to 1 - empirical_atom.
  std::vector<double> bin_mass;
  double bin_width = 0.0;
  double x_max = 0.0;
  double empirical_atom = 0.0;  // fraction of slots with B == K (finite K)
  double p_M_hat = 0.0;         // fraction of slots with P_UL == M
  double mean_p_ul = 0.0;
  std::uint64_t seed = 0;

  double empirical_pdf(int bin) const { return bin_mass[bin] / bin_width; }
};

struct StepResult {
  double b_next;
  double p_ul;
};

// One slot of the storage recursion, including the imperfection
// substitutions (M_eff = P_C + rho*M, harvested energy scaled by beta).
// x is the raw harvested energy X(i).
StepResult step(const PolicySpec& spec, double b, double x);

// 1% of slots, at least 10^4 (and never >= slots).
std::int64_t default_burn_in(std::int64_t slots);

SimSummary run(const SimConfig& cfg);

// Per-slot outage frequency: draws a Nakagami-m_ul power gain each slot and
// counts gamma < gamma_thr, with P_UL = 0 slots counting as outages.
double outage_sim(const SimConfig& cfg, const UplinkChannel& ul);

}  // namespace ebuf
