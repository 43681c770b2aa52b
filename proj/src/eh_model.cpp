#include "ebuf/eh_model.hpp"

#include <cmath>

#include "ebuf/errors.hpp"
#include "ebuf/special.hpp"

namespace ebuf {

GammaEHModel::GammaEHModel(int shape, double mean) : m(shape), mean_x(mean) {
  if (shape < 1) throw config_error("GammaEHModel: shape m must be >= 1");
  if (!(mean > 0.0)) throw config_error("GammaEHModel: mean must be > 0");
  rate = shape / mean;
}

void Imperfections::validate() const {
  if (!(rho >= 1.0)) throw config_error("Imperfections: rho must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0))
    throw config_error("Imperfections: beta must be in (0, 1]");
  if (!(p_c >= 0.0)) throw config_error("Imperfections: p_c must be >= 0");
}

EffectiveParams effective_params(const PolicySpec& spec,
                                 const GammaEHModel& eh) {
  spec.imperfections.validate();
  if (!(spec.m_power > 0.0))
    throw config_error("PolicySpec: M must be > 0");
  EffectiveParams p;
  p.m_eff = spec.imperfections.p_c + spec.imperfections.rho * spec.m_power;
  p.mean_x_eff = spec.imperfections.beta * eh.mean_x;
  p.rate_eff = eh.rate / spec.imperfections.beta;
  p.delta_eff = p.m_eff / p.mean_x_eff;
  if (spec.capacity) {
    const double k = *spec.capacity;
    if (!(k > p.m_eff))
      throw config_error("PolicySpec: finite capacity K must exceed M_eff");
    p.capacity = k;
    int l = static_cast<int>(std::floor(k / p.m_eff));
    double delta = k - l * p.m_eff;
    // Guard against floating noise when K is an exact multiple of M_eff.
    if (delta >= p.m_eff * (1.0 - 1e-12)) {
      ++l;
      delta = 0.0;
    }
    if (delta < p.m_eff * 1e-12) delta = 0.0;
    p.l = l;
    p.delta_cap = delta;
  }
  return p;
}

double harvest_pdf(const GammaEHModel& eh, double x) {
  if (x < 0.0) throw config_error("harvest_pdf: x must be >= 0");
  const double lx = eh.rate * x;
  if (eh.m == 1) return eh.rate * std::exp(-lx);
  if (x == 0.0) return 0.0;
  // rate^m x^{m-1} e^{-rate x} / (m-1)! computed in log space.
  const double logp = eh.m * std::log(eh.rate) + (eh.m - 1) * std::log(x) -
                      lx - std::log(special::factorial(eh.m - 1));
  return std::exp(logp);
}

double harvest_ccdf(const GammaEHModel& eh, double x) {
  if (x < 0.0) throw config_error("harvest_ccdf: x must be >= 0");
  const double lx = eh.rate * x;
  if (lx > 700.0) return 0.0;
  double sum = 0.0, term = 1.0;
  for (int r = 0; r < eh.m; ++r) {
    sum += term;
    term *= lx / (r + 1);
  }
  return std::exp(-lx) * sum;
}

double sample_harvest(const GammaEHModel& eh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double s = 0.0;
  for (int i = 0; i < eh.m; ++i) {
    double v = u(rng);
    if (v <= 0.0) v = 1e-300;
    s -= std::log(v);
  }
  return s / eh.rate;
}

}  // namespace ebuf
