#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ebuf/channel.hpp"
#include "ebuf/dist_finite.hpp"
#include "ebuf/dist_infinite.hpp"
#include "ebuf/eh_model.hpp"

namespace ebuf {

enum class OutageCase {
  DeltaLeOne,   // infinite buffer, delta_eff <= 1: P_UL pinned at M
  BeInfinite,
  OoInfinite,
  BeFinite,
  OoFinite,
};

struct OutageReport {
  double p_M = 0.0;
  double p_out = 0.0;
  double p_out_given_M = 0.0;
  double throughput = 0.0;  // R * (1 - p_out)
  OutageCase case_tag = OutageCase::DeltaLeOne;
  double sigma_term = 0.0;  // Sigma_I / Sigma_F; zero for on-off
  bool approx_l = false;
};

// Conditional outage probability at fixed UL transmit power M (net of
// imperfections): regularized lower incomplete gamma at Gamma_thr / M.
double p_out_given_M(const UplinkChannel& ul, double M);

// Infinite-buffer case with delta_eff <= 1: P_M = 1 and the outage equals the
// conditional one at M = (m_eff - p_c) / rho.
OutageReport p_out_delta_le_one(const UplinkChannel& ul,
                                const Imperfections& imp, double m_eff);

// Infinite- and finite-buffer outage from the solved stationary distribution.
OutageReport p_out_analytic(const ExpMixtureDist& dist,
                            const UplinkChannel& ul, const Imperfections& imp);
OutageReport p_out_analytic(const StripeDist& dist, const UplinkChannel& ul,
                            const Imperfections& imp);

// Best-effort below-threshold outage contribution evaluated by direct
// quadrature of the supplied density on (p_c, m_eff); equals Sigma_I/Sigma_F.
double sigma_be_numeric(const std::function<double(double)>& pdf,
                        const UplinkChannel& ul, const Imperfections& imp,
                        double m_eff);

// Buffer-less baseline (storage efficiency treated as 1).
double p_out_bufferless(const GammaEHModel& eh, const UplinkChannel& ul,
                        const Imperfections& imp);

struct SuperiorityInputs {
  double b = 0.0;          // gamma_thr*sigma2*rho / (omega_ul*(mean_x_eff-p_c))
  double delta_b = 0.0;    // (m_eff - p_c) / (mean_x_eff - p_c)
  double G = 0.0;          // regularized upper gamma at m_ul*b
  double G_delta_b = 0.0;  // regularized upper gamma at m_ul*b/delta_b
  double Sigma = 0.0;      // best-effort sigma term at the comparison point
};

SuperiorityInputs superiority_inputs(const UplinkChannel& ul,
                                     const Imperfections& imp,
                                     double mean_x_eff, double m_eff,
                                     double sigma);

struct SuperiorityVerdict {
  bool oo_superior = false;       // (1-p_out) of on-off beats best-effort
  double margin = 0.0;            // (1-p_out_oo) - (1-p_out_be)
  bool necessary_condition = false;  // P_M_oo * G_delta_b > G
};

SuperiorityVerdict superiority_test(const OutageReport& be,
                                    const OutageReport& oo,
                                    const SuperiorityInputs& in);

// A full policy/buffer/channel operating point, parameterized by delta_eff
// (= m_eff / mean_x_eff) for sweeps and optimization.
struct OutageProblem {
  Policy kind = Policy::BestEffort;
  GammaEHModel eh;  // raw harvest model (before storage efficiency)
  Imperfections imp;
  std::optional<double> capacity;
  UplinkChannel ul;
  bool approx_l = true;  // on-off finite: round K/m_eff during sweeps
};

OutageReport evaluate_problem(const OutageProblem& prob, double delta_eff);

struct OptimumDelta {
  double delta_opt = 0.0;
  OutageReport report;
};

// 1-D search: coarse grid followed by golden-section refinement of the best
// bracket. Grid points where the solve is infeasible are skipped; ties break
// toward smaller delta_eff.
OptimumDelta optimize_delta(const OutageProblem& prob, double lo, double hi,
                            int grid_points = 200);

struct ThroughputPoint {
  double rate = 0.0;
  double delta_opt = 0.0;
  double p_out = 0.0;
  double throughput = 0.0;
};

std::vector<ThroughputPoint> throughput_sweep(const OutageProblem& prob,
                                              const std::vector<double>& rates,
                                              double lo, double hi);

}  // namespace ebuf
