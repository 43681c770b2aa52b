#include "ebuf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ebuf/errors.hpp"

namespace ebuf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double capacity_of(const PolicySpec& spec) {
  return spec.capacity ? *spec.capacity : kInf;
}

// Walks the chain and hands every post-burn-in (state, p_ul) pair to sink.
template <typename Sink>
void walk(const SimConfig& cfg, Sink&& sink) {
  std::mt19937_64 rng(cfg.seed);
  double b = cfg.initial_energy;
  for (std::int64_t i = 0; i < cfg.slots; ++i) {
    const double x = sample_harvest(cfg.eh, rng);
    const auto [b_next, p_ul] = step(cfg.spec, b, x);
    if (i >= cfg.burn_in) sink(b, p_ul, rng);
    b = b_next;
  }
}

}  // namespace

void SimConfig::validate() const {
  spec.imperfections.validate();
  if (!(spec.m_power > 0.0))
    throw config_error("SimConfig: m_power must be positive");
  if (spec.capacity && !(*spec.capacity > 0.0))
    throw config_error("SimConfig: capacity must be positive");
  if (slots <= 0) throw config_error("SimConfig: slots must be positive");
  if (burn_in < 0 || burn_in >= slots)
    throw config_error("SimConfig: need 0 <= burn_in < slots");
  if (histogram_bins <= 0)
    throw config_error("SimConfig: histogram_bins must be positive");
  if (initial_energy < 0.0 || initial_energy > capacity_of(spec))
    throw config_error("SimConfig: initial_energy outside [0, K]");
}

StepResult step(const PolicySpec& spec, double b, double x) {
  const auto& imp = spec.imperfections;
  const double m_eff = imp.p_c + imp.rho * spec.m_power;
  const double gain = imp.beta * x;
  const double cap = capacity_of(spec);
  StepResult res;
  if (spec.kind == Policy::BestEffort) {
    if (b > m_eff) {
      res.p_ul = spec.m_power;
      res.b_next = b - m_eff + gain;
    } else {
      res.p_ul = std::max(b - imp.p_c, 0.0) / imp.rho;
      res.b_next = gain;
    }
  } else {
    if (b > m_eff) {
      res.p_ul = spec.m_power;
      res.b_next = b - m_eff + gain;
    } else {
      res.p_ul = 0.0;
      res.b_next = b + gain;
    }
  }
  res.b_next = std::min(res.b_next, cap);
  return res;
}

std::int64_t default_burn_in(std::int64_t slots) {
  return std::min(std::max(slots / 100, std::int64_t{10'000}), slots - 1);
}

SimSummary run(const SimConfig& cfg) {
  cfg.validate();
  const double cap = capacity_of(cfg.spec);
  SimSummary out;
  out.seed = cfg.seed;

  double x_max;
  if (std::isfinite(cap)) {
    x_max = cap;
  } else {
    // Two-pass: estimate the 99.99% state quantile from a subsample, then
    // histogram over [0, x_q] with everything above folded into the top bin.
    std::vector<double> sub;
    const std::int64_t stride =
        std::max<std::int64_t>(1, (cfg.slots - cfg.burn_in) / 100'000);
    std::int64_t n = 0;
    walk(cfg, [&](double b, double, std::mt19937_64&) {
      if (n++ % stride == 0) sub.push_back(b);
    });
    std::sort(sub.begin(), sub.end());
    x_max = sub[static_cast<size_t>(0.9999 * (sub.size() - 1))];
    x_max = std::max(x_max, cfg.spec.m_power);
  }

  const int bins = cfg.histogram_bins;
  out.bin_mass.assign(bins, 0.0);
  out.bin_width = x_max / bins;
  out.x_max = x_max;

  std::int64_t atom_count = 0, p_m_count = 0, total = 0;
  double p_ul_sum = 0.0;
  walk(cfg, [&](double b, double p_ul, std::mt19937_64&) {
    ++total;
    p_ul_sum += p_ul;
    if (p_ul == cfg.spec.m_power) ++p_m_count;
    if (std::isfinite(cap) && b == cap) {
      ++atom_count;
    } else {
      int bin = static_cast<int>(b / out.bin_width);
      bin = std::clamp(bin, 0, bins - 1);
      out.bin_mass[bin] += 1.0;
    }
  });
  for (double& v : out.bin_mass) v /= static_cast<double>(total);
  out.empirical_atom = static_cast<double>(atom_count) / total;
  out.p_M_hat = static_cast<double>(p_m_count) / total;
  out.mean_p_ul = p_ul_sum / total;
  return out;
}

double outage_sim(const SimConfig& cfg, const UplinkChannel& ul) {
  cfg.validate();
  const GammaEHModel fading(ul.m_ul, ul.omega_ul);
  std::int64_t outages = 0, total = 0;
  walk(cfg, [&](double, double p_ul, std::mt19937_64& rng) {
    ++total;
    if (p_ul <= 0.0) {
      ++outages;
      return;
    }
    const double h = sample_harvest(fading, rng);
    if (p_ul * h / ul.sigma2 < ul.gamma_thr) ++outages;
  });
  return static_cast<double>(outages) / total;
}

}  // namespace ebuf
