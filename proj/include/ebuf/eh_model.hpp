#pragma once

#include <optional>
#include <random>

namespace ebuf {

enum class Policy { BestEffort, OnOff };

// Gamma-distributed harvested energy per slot: shape m (integer), mean
// mean_x, rate = m / mean_x.
struct GammaEHModel {
  int m = 1;
  double mean_x = 1.0;
  double rate = 1.0;

  GammaEHModel() = default;
  GammaEHModel(int shape, double mean);
};

struct Imperfections {
  double rho = 1.0;   // power-amplifier inefficiency, >= 1
  double beta = 1.0;  // storage efficiency, in (0, 1]
  double p_c = 0.0;   // circuit power per slot, >= 0

  void validate() const;
};

struct PolicySpec {
  Policy kind = Policy::BestEffort;
  double m_power = 1.0;                // desired UL power M
  std::optional<double> capacity;      // K; nullopt = infinite buffer
  Imperfections imperfections;
};

// Parameters after the imperfize substitutions M -> M_eff = P_C + rho*M,
// mean_x -> beta*mean_x, rate -> rate/beta; finite K decomposed as
// K = l*M_eff + Delta with integer l >= 1 and 0 <= Delta < M_eff.
struct EffectiveParams {
  double m_eff = 0.0;
  double mean_x_eff = 0.0;
  double rate_eff = 0.0;
  double delta_eff = 0.0;  // M_eff / mean_x_eff
  std::optional<double> capacity;
  std::optional<int> l;
  std::optional<double> delta_cap;  // the Delta remainder

  GammaEHModel effective_eh(int m) const {
    return GammaEHModel(m, mean_x_eff);
  }
};

EffectiveParams effective_params(const PolicySpec& spec,
                                 const GammaEHModel& eh);

double harvest_pdf(const GammaEHModel& eh, double x);
double harvest_ccdf(const GammaEHModel& eh, double x);

// One Gamma(m, rate) draw as a sum of m exponential(rate) variates.
double sample_harvest(const GammaEHModel& eh, std::mt19937_64& rng);

}  // namespace ebuf
