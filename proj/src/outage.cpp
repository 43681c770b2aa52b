#include "ebuf/outage.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "ebuf/errors.hpp"
#include "ebuf/quadrature.hpp"
#include "ebuf/special.hpp"

namespace ebuf {

namespace {

using special::factorial;

constexpr double kInf = std::numeric_limits<double>::infinity();

double net_power(const Imperfections& imp, double m_eff) {
  const double m = (m_eff - imp.p_c) / imp.rho;
  if (!(m > 0.0))
    throw config_error("outage: effective power m_eff must exceed p_c");
  return m;
}

OutageReport compose(OutageCase tag, const UplinkChannel& ul, double p_m,
                     double p_out_m, double sigma) {
  OutageReport rep;
  rep.case_tag = tag;
  rep.p_M = p_m;
  rep.p_out_given_M = p_out_m;
  rep.sigma_term = sigma;
  rep.p_out = p_m * p_out_m + (1.0 - p_m) - sigma;
  if (rep.p_out < -1e-9 || rep.p_out > 1.0 + 1e-9)
    throw numeric_error("outage: composed probability escapes [0, 1]");
  rep.p_out = std::clamp(rep.p_out, 0.0, 1.0);
  rep.throughput = ul.rate * (1.0 - rep.p_out);
  return rep;
}

// P_M of the finite-buffer rows in quad precision (the alpha can be ~1e13
// with heavy cancellation across the q-sum).
double finite_p_m(const StripeDist& dist) {
  using Q = __float128;
  const int m = dist.m;
  const Q lm = Q(dist.lambda) * Q(dist.M);   // lambda * M_eff
  const Q lk = Q(dist.lambda) * Q(dist.K);
  const int qmax = (dist.policy == Policy::BestEffort) ? dist.l - 1
                                                       : dist.l - 2;
  Q total = 0;
  Q r_fact = 1;
  for (int r = 0; r < m; ++r) {
    if (r) r_fact *= r;
    Q ar = Q(dist.alpha[r]);
    if (r < static_cast<int>(dist.alpha_lo.size())) ar += Q(dist.alpha_lo[r]);
    Q qsum = 0;
    for (int q = 0; q <= qmax; ++q) {
      const Q base = (q + 1) * lm - lk;
      Q term = 1;
      for (int t = 1; t <= q * m; ++t) term *= base / t;  // base^{qm}/(qm)!
      Q tsum = 0;
      for (int t = q * m; t <= (q + 1) * m - r - 1; ++t) {
        tsum += term;
        term *= base / (t + 1);
      }
      qsum += expq(-lm * (q + 1)) * tsum;
    }
    total += ar / r_fact * qsum;
  }
  return static_cast<double>(total);
}

// Sigma_F of Table I's best-effort finite row.
double sigma_f_closed_form(const StripeDist& dist, const UplinkChannel& ul,
                           const Imperfections& imp) {
  const int m = dist.m;
  const double lam = dist.lambda;
  const double m_eff = dist.M;
  const double k_cap = dist.K;
  const double a_rho = ul.Gamma_thr * imp.rho;
  // l' selection: Delta = 0 behaves as Delta < p_c; an exact positive tie
  // Delta == p_c takes the q = l branch, whose integration interval
  // (p_c, Delta) is then empty, so the term is skipped below.
  int l_prime = dist.l - 1;
  if (dist.Delta > 0.0 && dist.Delta >= imp.p_c) l_prime = dist.l;
  double sigma = 0.0;
  for (int t = 0; t < ul.m_ul; ++t) {
    double i_t = 0.0;
    for (int q = 0; q <= l_prime; ++q) {
      const double d_cap = (q < dist.l) ? m_eff : dist.Delta;
      const double dp = d_cap - imp.p_c;
      if (!(dp > 1e-14 * m_eff)) continue;  // empty integration interval
      const double a = a_rho / dp;
      const double b = lam * dp;
      const double c = (k_cap - (q * m_eff + imp.p_c)) / dp;
      const double pref = std::exp(-lam * (q * m_eff + imp.p_c)) /
                          std::pow(dp, t);
      double rsum = 0.0;
      for (int r = 0; r < m; ++r) {
        const double ar = dist.alpha[r] +
                          (r < static_cast<int>(dist.alpha_lo.size())
                               ? dist.alpha_lo[r]
                               : 0.0);
        double v = std::pow(b, (q + 1) * m - r) *
                   special::n_kernel(t, a, b, c, (q + 1) * m - r - 1);
        if (q >= 1)
          v -= std::pow(b, q * m) *
               special::n_kernel(t, a, b, c, q * m - 1);
        rsum += ar / factorial(r) * v;
      }
      i_t += pref * rsum;
    }
    sigma += std::pow(a_rho, t) / factorial(t) * i_t;
  }
  return sigma;
}

}  // namespace

double p_out_given_M(const UplinkChannel& ul, double M) {
  if (!(M > 0.0)) throw config_error("p_out_given_M: M must be positive");
  return special::gamma_p_int(ul.m_ul, ul.Gamma_thr / M);
}

OutageReport p_out_delta_le_one(const UplinkChannel& ul,
                                const Imperfections& imp, double m_eff) {
  const double m = net_power(imp, m_eff);
  return compose(OutageCase::DeltaLeOne, ul, 1.0, p_out_given_M(ul, m), 0.0);
}

double sigma_be_numeric(const std::function<double(double)>& pdf,
                        const UplinkChannel& ul, const Imperfections& imp,
                        double m_eff) {
  const double a = ul.Gamma_thr * imp.rho;
  // sum_t (a^t/t!) e^{-a/u} / u^t = regularized upper incomplete gamma at
  // a/u, so the whole Sigma integrand collapses to one stable factor.
  return integrate(
      [&](double x) {
        const double u = x - imp.p_c;
        if (u <= 0.0) return 0.0;
        return (1.0 - special::gamma_p_int(ul.m_ul, a / u)) * pdf(x);
      },
      imp.p_c, m_eff, 1e-13, 1e-11);
}

OutageReport p_out_analytic(const ExpMixtureDist& dist,
                            const UplinkChannel& ul,
                            const Imperfections& imp) {
  const double m_eff = dist.M;
  const double m = net_power(imp, m_eff);
  const double p_m = 1.0 - dist.cdf(m_eff);
  const double p_out_m = p_out_given_M(ul, m);
  if (dist.policy == Policy::OnOff)
    return compose(OutageCase::OoInfinite, ul, p_m, p_out_m, 0.0);

  double sigma;
  if (dist.gamma_limit) {
    // Confluent-root regime: no explicit mixture coefficients; integrate the
    // density directly.
    sigma = sigma_be_numeric([&](double x) { return dist.pdf(x); }, ul, imp,
                             m_eff);
  } else {
    const double a = ul.Gamma_thr * imp.rho / (m_eff - imp.p_c);
    Cplx acc = 0.0;
    for (size_t n = 0; n < dist.coeffs.size(); ++n) {
      const Cplx ln = dist.roots.roots[n];
      Cplx tsum = 0.0;
      for (int t = 0; t < ul.m_ul; ++t)
        tsum += std::pow(a, t) / factorial(t) *
                special::n_kernel_cplx(t, a, ln * (m_eff - imp.p_c), 0.0, 0);
      acc += ln * dist.coeffs[n] * std::exp(-ln * imp.p_c) * tsum;
    }
    if (std::abs(acc.imag()) > 1e-9 * (std::abs(acc.real()) + 1.0))
      throw numeric_error("p_out_analytic: Sigma_I imaginary residue");
    sigma = (m_eff - imp.p_c) * acc.real();
  }
  return compose(OutageCase::BeInfinite, ul, p_m, p_out_m, sigma);
}

OutageReport p_out_analytic(const StripeDist& dist, const UplinkChannel& ul,
                            const Imperfections& imp) {
  const double m_eff = dist.M;
  const double m = net_power(imp, m_eff);
  const double k_hat = dist.lambda * dist.K;
  // The closed forms evaluate e^{lambda*K}-scale cancellations in double,
  // so they degrade well before the quad-precision solve does. Past the
  // thresholds below, integrate the (quad-solved) density instead; the
  // integrand is smooth except at the stripe boundary K - l*M.
  double p_m;
  if (k_hat <= 50.0) {
    p_m = finite_p_m(dist);
  } else {
    const double cut = dist.Delta;
    auto f = [&](double x) { return dist.pdf(x); };
    double mass;
    if (cut > 1e-14 * m_eff && cut < m_eff * (1.0 - 1e-14))
      mass = integrate(f, 0.0, cut, 5e-9, 1e-8, 200) +
             integrate(f, cut, m_eff, 5e-9, 1e-8, 200);
    else
      mass = integrate(f, 0.0, m_eff, 5e-9, 1e-8, 200);
    p_m = 1.0 - mass;
  }
  const double p_out_m = p_out_given_M(ul, m);
  OutageReport rep;
  if (dist.policy == Policy::OnOff) {
    rep = compose(OutageCase::OoFinite, ul, p_m, p_out_m, 0.0);
  } else {
    double sigma;
    if (k_hat <= 18.0) {
      sigma = sigma_f_closed_form(dist, ul, imp);
    } else {
      const double a = ul.Gamma_thr * imp.rho;
      auto f = [&](double x) {
        const double u = x - imp.p_c;
        if (u <= 0.0) return 0.0;
        return (1.0 - special::gamma_p_int(ul.m_ul, a / u)) * dist.pdf(x);
      };
      // The density evaluation is quad-precision work per point and carries
      // an e^{lambda K}-amplified noise floor, so the tolerances stay well
      // above it and the interval budget is kept small.
      if (dist.Delta > imp.p_c && dist.Delta < m_eff * (1.0 - 1e-14))
        sigma = integrate(f, imp.p_c, dist.Delta, 5e-9, 1e-8, 200) +
                integrate(f, dist.Delta, m_eff, 5e-9, 1e-8, 200);
      else
        sigma = integrate(f, imp.p_c, m_eff, 5e-9, 1e-8, 200);
    }
    rep = compose(OutageCase::BeFinite, ul, p_m, p_out_m, sigma);
  }
  rep.approx_l = dist.approx_l;
  return rep;
}

double p_out_bufferless(const GammaEHModel& eh, const UplinkChannel& ul,
                        const Imperfections& imp) {
  // Storage efficiency plays no role without a buffer; beta is treated as 1.
  const double lam = eh.rate;
  const int m = eh.m;
  const double a = ul.Gamma_thr * imp.rho;
  const double z = 2.0 * std::sqrt(a * lam);
  double tsum = 0.0;
  for (int t = 0; t < ul.m_ul; ++t) {
    double lsum = 0.0;
    for (int el = 0; el < m; ++el) {
      const double bin = factorial(m - 1) /
                         (factorial(el) * factorial(m - 1 - el));
      const double pc_pow =
          (m - 1 - el == 0) ? 1.0 : std::pow(imp.p_c, m - 1 - el);
      lsum += bin * pc_pow * std::pow(a / lam, 0.5 * (el - t + 1)) *
              special::bessel_k_int(el - t + 1, z);
    }
    tsum += std::pow(a, t) / factorial(t) * lsum;
  }
  const double p_out = 1.0 - 2.0 * std::pow(lam, m) / factorial(m - 1) *
                                 std::exp(-lam * imp.p_c) * tsum;
  if (p_out < -1e-9 || p_out > 1.0 + 1e-9)
    throw numeric_error("p_out_bufferless: probability escapes [0, 1]");
  return std::clamp(p_out, 0.0, 1.0);
}

SuperiorityInputs superiority_inputs(const UplinkChannel& ul,
                                     const Imperfections& imp,
                                     double mean_x_eff, double m_eff,
                                     double sigma) {
  if (!(mean_x_eff > imp.p_c) || !(m_eff > imp.p_c))
    throw config_error(
        "superiority_inputs: mean_x_eff and m_eff must exceed p_c");
  SuperiorityInputs in;
  in.b = ul.gamma_thr * ul.sigma2 * imp.rho /
         (ul.omega_ul * (mean_x_eff - imp.p_c));
  in.delta_b = (m_eff - imp.p_c) / (mean_x_eff - imp.p_c);
  in.G = 1.0 - special::gamma_p_int(ul.m_ul, ul.m_ul * in.b);
  in.G_delta_b =
      1.0 - special::gamma_p_int(ul.m_ul, ul.m_ul * in.b / in.delta_b);
  in.Sigma = sigma;
  return in;
}

SuperiorityVerdict superiority_test(const OutageReport& be,
                                    const OutageReport& oo,
                                    const SuperiorityInputs& in) {
  SuperiorityVerdict v;
  v.margin = be.p_out - oo.p_out;
  v.oo_superior = v.margin > 0.0;
  v.necessary_condition = oo.p_M * in.G_delta_b > in.G;
  return v;
}

OutageReport evaluate_problem(const OutageProblem& prob, double delta_eff) {
  prob.imp.validate();
  if (!(delta_eff > 0.0))
    throw config_error("evaluate_problem: delta_eff must be positive");
  const double mean_x_eff = prob.imp.beta * prob.eh.mean_x;
  const double m_eff = delta_eff * mean_x_eff;
  const double m_power = net_power(prob.imp, m_eff);

  PolicySpec spec;
  spec.kind = prob.kind;
  spec.m_power = m_power;
  spec.capacity = prob.capacity;
  spec.imperfections = prob.imp;
  const EffectiveParams par = effective_params(spec, prob.eh);
  const GammaEHModel eff_eh = par.effective_eh(prob.eh.m);

  if (!prob.capacity) {
    if (delta_eff <= 1.0)
      return p_out_delta_le_one(prob.ul, prob.imp, m_eff);
    const ExpMixtureDist dist = (prob.kind == Policy::BestEffort)
                                    ? be_infinite_solve(eff_eh, m_eff)
                                    : oo_infinite_solve(eff_eh, m_eff);
    return p_out_analytic(dist, prob.ul, prob.imp);
  }
  const double k_cap = *prob.capacity;
  const StripeDist dist =
      (prob.kind == Policy::BestEffort)
          ? be_finite_solve(eff_eh, m_eff, k_cap)
          : oo_finite_solve(eff_eh, m_eff, k_cap, prob.approx_l);
  return p_out_analytic(dist, prob.ul, prob.imp);
}

OptimumDelta optimize_delta(const OutageProblem& prob, double lo, double hi,
                            int grid_points) {
  if (!(lo > 0.0) || !(hi > lo) || grid_points < 2)
    throw config_error("optimize_delta: need 0 < lo < hi and >= 2 points");
  auto objective = [&](double d) -> double {
    try {
      return evaluate_problem(prob, d).p_out;
    } catch (const config_error&) {
      return kInf;
    } catch (const regime_error&) {
      return kInf;
    } catch (const numeric_error&) {
      return kInf;
    }
  };
  int best = -1;
  double best_val = kInf;
  std::vector<double> grid(grid_points), val(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    grid[i] = lo + (hi - lo) * i / (grid_points - 1);
    val[i] = objective(grid[i]);
    if (val[i] < best_val) {
      best_val = val[i];
      best = i;
    }
  }
  if (best < 0)
    throw config_error("optimize_delta: no feasible point in range");
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, grid_points - 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-10 * (1.0 + b); ++it) {
    if (f1 <= f2) {  // ties toward smaller delta
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(x2);
    }
  }
  const double d_opt = (f1 <= f2) ? x1 : x2;
  const double f_opt = std::min(f1, f2);
  OptimumDelta out;
  if (f_opt <= best_val) {
    out.delta_opt = d_opt;
    out.report = evaluate_problem(prob, d_opt);
  } else {
    out.delta_opt = grid[best];
    out.report = evaluate_problem(prob, grid[best]);
  }
  return out;
}

std::vector<ThroughputPoint> throughput_sweep(const OutageProblem& prob,
                                              const std::vector<double>& rates,
                                              double lo, double hi) {
  std::vector<ThroughputPoint> out;
  out.reserve(rates.size());
  for (double r : rates) {
    OutageProblem p = prob;
    p.ul = UplinkChannel(prob.ul.m_ul, prob.ul.omega_ul, prob.ul.sigma2, r);
    const auto opt = optimize_delta(p, lo, hi);
    out.push_back({r, opt.delta_opt, opt.report.p_out,
                   opt.report.throughput});
  }
  return out;
}

}  // namespace ebuf
