#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ebuf/errors.hpp"
#include "ebuf/outage.hpp"
#include "ebuf/quadrature.hpp"
#include "ebuf/simulator.hpp"
#include "ebuf/special.hpp"

using namespace ebuf;

namespace {

const Imperfections kIdeal{1.0, 1.0, 0.0};

double quad_p_m_infinite(const ExpMixtureDist& d, double m_eff) {
  // 1 - integral of the density below m_eff.
  return 1.0 - integrate([&](double x) { return d.pdf(x); }, 0.0, m_eff,
                         1e-13, 1e-11);
}

}  // namespace

TEST_CASE("conditional outage at fixed power") {
  const UplinkChannel ul1(1, 1.0, 1.0, 1.0);  // gamma_thr = 1, Gamma_thr = 1
  CHECK(p_out_given_M(ul1, 2.0) == doctest::Approx(1.0 - std::exp(-0.5)));
  CHECK(p_out_given_M(ul1, 1e12) == doctest::Approx(0.0).epsilon(1e-10));
  // m_ul = 2 with Gamma_thr / M = 1: regularized gamma = 1 - 2/e.
  const UplinkChannel ul2(2, 1.0, 0.5, 1.0);  // Gamma_thr = 1
  CHECK(p_out_given_M(ul2, 1.0) ==
        doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(p_out_given_M(ul1, 0.0), config_error);
}

TEST_CASE("pinned-power row") {
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const auto rep = p_out_delta_le_one(ul, kIdeal, 0.8);
  CHECK(rep.p_M == 1.0);
  CHECK(rep.sigma_term == 0.0);
  CHECK(rep.p_out == doctest::Approx(p_out_given_M(ul, 0.8)).epsilon(1e-14));
  CHECK(rep.throughput == doctest::Approx(1.5 * (1.0 - rep.p_out)));
}

TEST_CASE("report decomposition identity") {
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const auto dist = be_infinite_solve(eh, 1.5);
  const auto rep = p_out_analytic(dist, ul, kIdeal);
  CHECK(std::abs(rep.p_out - (rep.p_M * rep.p_out_given_M + (1.0 - rep.p_M) -
                              rep.sigma_term)) <= 1e-12);
  CHECK(rep.p_out >= 0.0);
  CHECK(rep.p_out <= 1.0);
  CHECK(rep.sigma_term >= 0.0);
}

TEST_CASE("infinite-buffer P_M against quadrature") {
  GammaEHModel eh(3, 1.0);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  for (double m_eff : {1.2, 2.0}) {
    const auto be = be_infinite_solve(eh, m_eff);
    const auto oo = oo_infinite_solve(eh, m_eff);
    const auto rbe = p_out_analytic(be, ul, kIdeal);
    const auto roo = p_out_analytic(oo, ul, kIdeal);
    CHECK(rbe.p_M == doctest::Approx(quad_p_m_infinite(be, m_eff)).epsilon(1e-8));
    CHECK(roo.p_M == doctest::Approx(quad_p_m_infinite(oo, m_eff)).epsilon(1e-8));
  }
}

TEST_CASE("finite-buffer P_M against quadrature") {
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const double m_eff = 1.3;
  for (Policy kind : {Policy::BestEffort, Policy::OnOff}) {
    const auto d = (kind == Policy::BestEffort)
                       ? be_finite_solve(eh, m_eff, 4 * m_eff + 0.4)
                       : oo_finite_solve(eh, m_eff, 4 * m_eff);
    const auto rep = p_out_analytic(d, ul, kIdeal);
    const double below =
        integrate([&](double x) { return d.pdf(x); }, 0.0, m_eff, 1e-13,
                  1e-11);
    CHECK(rep.p_M == doctest::Approx(1.0 - below).epsilon(1e-8));
  }
}

TEST_CASE("Sigma_I closed form against direct quadrature") {
  // Including p_c > 0 so the e^{-lambda_n p_c} factor is exercised.
  const Imperfections imp{1.4, 0.9, 0.05};
  GammaEHModel raw(3, 1.0);
  const double mean_x_eff = imp.beta * raw.mean_x;
  GammaEHModel eh(3, mean_x_eff);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  for (double delta : {1.2, 1.8}) {
    const double m_eff = delta * mean_x_eff;
    const auto dist = be_infinite_solve(eh, m_eff);
    const auto rep = p_out_analytic(dist, ul, imp);
    const double oracle = sigma_be_numeric(
        [&](double x) { return dist.pdf(x); }, ul, imp, m_eff);
    CHECK(rep.sigma_term == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("Sigma_F closed form against direct quadrature") {
  const Imperfections imp{1.4, 0.9, 0.05};
  GammaEHModel eh(2, 0.9);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const double m_eff = 1.17;
  // Delta spanning the three l' branches: 0, below p_c, above p_c.
  for (double extra : {0.0, 0.03, 0.4}) {
    const auto dist = be_finite_solve(eh, m_eff, 4 * m_eff + extra);
    const auto rep = p_out_analytic(dist, ul, imp);
    const double oracle = sigma_be_numeric(
        [&](double x) { return dist.pdf(x); }, ul, imp, m_eff);
    CHECK(rep.sigma_term == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("outage matches simulation, best-effort infinite") {
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const auto dist = be_infinite_solve(eh, 1.5);
  const auto rep = p_out_analytic(dist, ul, kIdeal);
  SimConfig cfg;
  cfg.spec.kind = Policy::BestEffort;
  cfg.spec.m_power = 1.5;
  cfg.eh = eh;
  cfg.slots = 2'000'000;
  cfg.burn_in = 100'000;
  const double hat = outage_sim(cfg, ul);
  const double n = static_cast<double>(cfg.slots - cfg.burn_in);
  const double sigma = std::sqrt(rep.p_out * (1.0 - rep.p_out) / n);
  CHECK(std::abs(hat - rep.p_out) <= 3.0 * sigma);
}

TEST_CASE("outage matches simulation, on-off finite") {
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 0.25, 1.5);
  const double m_eff = 1.2;
  const auto dist = oo_finite_solve(eh, m_eff, 4 * m_eff);
  const auto rep = p_out_analytic(dist, ul, kIdeal);
  SimConfig cfg;
  cfg.spec.kind = Policy::OnOff;
  cfg.spec.m_power = m_eff;
  cfg.spec.capacity = 4 * m_eff;
  cfg.eh = eh;
  cfg.slots = 2'000'000;
  cfg.burn_in = 100'000;
  const double hat = outage_sim(cfg, ul);
  const double n = static_cast<double>(cfg.slots - cfg.burn_in);
  const double sigma = std::sqrt(rep.p_out * (1.0 - rep.p_out) / n);
  CHECK(std::abs(hat - rep.p_out) <= 3.0 * sigma);
}

TEST_CASE("buffer-less closed form") {
  const UplinkChannel ul(1, 1.0, 0.5, 1.0);  // Gamma_thr = 0.5
  GammaEHModel eh(1, 1.0);
  const double z = 2.0 * std::sqrt(ul.Gamma_thr * 1.0);
  const double expected = 1.0 - z * special::bessel_k_int(1, z);
  CHECK(p_out_bufferless(eh, ul, kIdeal) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("buffer-less against quadrature, m = m_ul = 2 with p_c") {
  const Imperfections imp{1.3, 1.0, 0.08};
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 0.3, 1.2);
  const double closed = p_out_bufferless(eh, ul, imp);
  const double a = ul.Gamma_thr * imp.rho;
  const double direct =
      1.0 - integrate(
                [&](double x) {
                  const double u = x - imp.p_c;
                  if (u <= 0.0) return 0.0;
                  return (1.0 - special::gamma_p_int(ul.m_ul, a / u)) *
                         harvest_pdf(eh, x);
                },
                imp.p_c, imp.p_c + 60.0, 1e-13, 1e-12);
  CHECK(closed == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("buffer-less outage vanishes with the threshold") {
  GammaEHModel eh(2, 1.0);
  const UplinkChannel ul(2, 1.0, 1e-9, 0.1);
  CHECK(p_out_bufferless(eh, ul, kIdeal) < 1e-4);
}

TEST_CASE("superiority bookkeeping") {
  const UplinkChannel ul(3, 1.0, 0.25, 2.0);
  const Imperfections imp{1.4, 0.9, 0.02};
  const auto in = superiority_inputs(ul, imp, 0.9, 1.2, 0.0);
  CHECK(in.b == doctest::Approx(ul.gamma_thr * ul.sigma2 * imp.rho /
                                (ul.omega_ul * (0.9 - 0.02))));
  CHECK(in.delta_b == doctest::Approx((1.2 - 0.02) / (0.9 - 0.02)));
  CHECK(in.G ==
        doctest::Approx(1.0 - special::gamma_p_int(3, 3 * in.b)));
  OutageReport a;
  a.p_M = 0.7;
  a.p_out = 0.3;
  const auto v = superiority_test(a, a, in);
  CHECK_FALSE(v.oo_superior);  // identical reports: strict inequality fails
  CHECK(v.margin == 0.0);
}

TEST_CASE("evaluate_problem routes by regime") {
  OutageProblem prob;
  prob.kind = Policy::BestEffort;
  prob.eh = GammaEHModel(2, 1.0);
  prob.imp = kIdeal;
  prob.ul = UplinkChannel(2, 1.0, 0.25, 1.5);
  auto rep = evaluate_problem(prob, 0.8);
  CHECK(rep.case_tag == OutageCase::DeltaLeOne);
  rep = evaluate_problem(prob, 1.5);
  CHECK(rep.case_tag == OutageCase::BeInfinite);
  prob.capacity = 6.0;
  rep = evaluate_problem(prob, 1.5);
  CHECK(rep.case_tag == OutageCase::BeFinite);
  prob.kind = Policy::OnOff;
  rep = evaluate_problem(prob, 1.5);
  CHECK(rep.case_tag == OutageCase::OoFinite);
  CHECK(rep.approx_l);
}

TEST_CASE("pinned-power branch is monotone in delta") {
  OutageProblem prob;
  prob.kind = Policy::BestEffort;
  prob.eh = GammaEHModel(2, 1.0);
  prob.imp = kIdeal;
  prob.ul = UplinkChannel(2, 1.0, 0.25, 1.5);
  double prev = 1.1;
  for (double d = 0.1; d <= 1.0; d += 0.05) {
    const double p = evaluate_problem(prob, d).p_out;
    CHECK(p <= prev + 1e-14);
    prev = p;
  }
}

TEST_CASE("optimizer finds an interior minimum") {
  OutageProblem prob;
  prob.kind = Policy::BestEffort;
  prob.eh = GammaEHModel(2, 1.0);
  prob.imp = kIdeal;
  prob.capacity = 5.0;
  prob.ul = UplinkChannel(2, 1.0, 0.25, 1.5);
  const auto opt = optimize_delta(prob, 0.4, 2.0, 60);
  CHECK(opt.delta_opt > 0.4);
  CHECK(opt.delta_opt < 2.0);
  // No grid value may beat the refined optimum.
  for (double d = 0.4; d <= 2.0; d += 0.01)
    CHECK(evaluate_problem(prob, d).p_out >= opt.report.p_out - 1e-10);
}

TEST_CASE("throughput sweep: low rate is outage-free") {
  OutageProblem prob;
  prob.kind = Policy::BestEffort;
  prob.eh = GammaEHModel(2, 1.0);
  prob.imp = kIdeal;
  prob.ul = UplinkChannel(2, 1.0, 0.01, 1.0);
  const auto pts = throughput_sweep(prob, {0.05, 4.0}, 0.5, 3.0);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].throughput == doctest::Approx(0.05).epsilon(0.05));
  CHECK(pts[1].throughput < 4.0);
}
