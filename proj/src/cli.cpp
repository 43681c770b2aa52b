#include "ebuf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ebuf/dist_finite.hpp"
#include "ebuf/dist_infinite.hpp"
#include "ebuf/errors.hpp"
#include "ebuf/outage.hpp"
#include "ebuf/quadrature.hpp"
#include "ebuf/simulator.hpp"

namespace ebuf::cli {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

Policy parse_policy(const std::string& s) {
  if (s == "be" || s == "best-effort") return Policy::BestEffort;
  if (s == "oo" || s == "on-off") return Policy::OnOff;
  throw config_error("config: unknown policy '" + s + "' (want be|oo)");
}

const char* policy_tag(Policy p) {
  return p == Policy::BestEffort ? "be" : "oo";
}

std::string cap_tag(std::size_t idx, const std::optional<double>& k) {
  return k ? "k" + std::to_string(idx) : "inf";
}

// ---- output plumbing -------------------------------------------------------

struct Sink {
  const RunConfig& cfg;
  std::string stem;  // scenario_command

  bool want_csv() const { return cfg.format != "json"; }
  bool want_json() const { return cfg.format != "csv"; }

  std::filesystem::path path(const std::string& suffix,
                             const char* ext) const {
    auto name = stem + (suffix.empty() ? "" : "_" + suffix);
    return std::filesystem::path(cfg.out_dir) / (name + std::string(ext));
  }

  std::ofstream open_csv(const std::string& suffix,
                         const std::string& header) const {
    std::ofstream out(path(suffix, ".csv"));
    if (!out) throw config_error("cannot open output file in " + cfg.out_dir);
    out << "# schema_version " << kSchemaVersion << "\n";
    out << "# config " << resolved_json(cfg).dump() << "\n";
    out << "# seed " << cfg.seed << "\n";
    out << header << "\n";
    out.precision(17);
    return out;
  }

  void write_json(const std::string& suffix, json body) const {
    body["schema_version"] = kSchemaVersion;
    body["config"] = resolved_json(cfg);
    body["seed"] = cfg.seed;
    std::ofstream out(path(suffix, ".json"));
    if (!out) throw config_error("cannot open output file in " + cfg.out_dir);
    out << body.dump(2) << "\n";
  }
};

Sink make_sink(const RunConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(cfg.out_dir);
  return Sink{cfg, cfg.scenario + "_" + command};
}

// ---- shared model assembly -------------------------------------------------

GammaEHModel raw_eh(const RunConfig& cfg) {
  return GammaEHModel(cfg.m, cfg.mean_x_eff / cfg.imp.beta);
}

// Desired UL power M recovered from the effective point m_eff.
double m_power_of(const RunConfig& cfg, double m_eff) {
  const double net = (m_eff - cfg.imp.p_c) / cfg.imp.rho;
  if (!(net > 0.0))
    throw config_error("config: delta_eff too small, m_eff <= p_c");
  return net;
}

OutageProblem make_problem(const RunConfig& cfg, Policy kind,
                           const std::optional<double>& capacity) {
  OutageProblem prob;
  prob.kind = kind;
  prob.eh = raw_eh(cfg);
  prob.imp = cfg.imp;
  prob.capacity = capacity;
  prob.ul = cfg.ul;
  return prob;
}

SimConfig make_sim(const RunConfig& cfg, Policy kind,
                   const std::optional<double>& capacity, double m_eff) {
  SimConfig sim;
  sim.spec.kind = kind;
  sim.spec.m_power = m_power_of(cfg, m_eff);
  sim.spec.capacity = capacity;
  sim.spec.imperfections = cfg.imp;
  sim.eh = raw_eh(cfg);
  sim.slots = cfg.slots;
  sim.burn_in = default_burn_in(cfg.slots);
  sim.seed = cfg.seed;
  sim.histogram_bins = cfg.bins;
  return sim;
}

const char* case_name(OutageCase c) {
  switch (c) {
    case OutageCase::DeltaLeOne: return "delta_le_one";
    case OutageCase::BeInfinite: return "be_infinite";
    case OutageCase::OoInfinite: return "oo_infinite";
    case OutageCase::BeFinite: return "be_finite";
    case OutageCase::OoFinite: return "oo_finite";
  }
  return "?";
}

json report_json(const OutageReport& r) {
  return {{"case", case_name(r.case_tag)},
          {"p_M", r.p_M},
          {"p_out_given_M", r.p_out_given_M},
          {"sigma_term", r.sigma_term},
          {"p_out", r.p_out},
          {"throughput", r.throughput},
          {"approx_l", r.approx_l}};
}

// One solved distribution, either flavor, behind a uniform interface.
struct SolvedDist {
  std::function<double(double)> pdf;
  double atom = 0.0;
  double x_max = 0.0;  // plotting/support limit (K for finite)
  json detail;         // roots / coefficients / residual info
};

SolvedDist solve_dist(const RunConfig& cfg, Policy kind,
                      const std::optional<double>& capacity) {
  const double m_eff = cfg.delta_eff * cfg.mean_x_eff;
  const GammaEHModel eh(cfg.m, cfg.mean_x_eff);
  SolvedDist out;
  if (capacity) {
    const auto d = (kind == Policy::BestEffort)
                       ? be_finite_solve(eh, m_eff, *capacity)
                       : oo_finite_solve(eh, m_eff, *capacity, true);
    out.pdf = [d](double x) { return d.pdf(x); };
    out.atom = d.atom;
    out.x_max = *capacity;
    double mass = d.atom;
    for (int n = 0; n <= d.l; ++n) {
      const double hi = d.K - n * d.M;
      const double lo = std::max(0.0, hi - d.M);
      if (hi <= 0.0) break;
      mass += integrate([&](double x) { return d.pdf(x); }, lo, hi, 1e-12,
                        1e-10);
    }
    out.detail = {{"l", d.l},
                  {"Delta", d.Delta},
                  {"approx_l", d.approx_l},
                  {"alpha", d.alpha},
                  {"atom", d.atom},
                  {"unit_area_residual", mass - 1.0}};
  } else {
    const auto d = (kind == Policy::BestEffort)
                       ? be_infinite_solve(eh, m_eff)
                       : oo_infinite_solve(eh, m_eff);
    out.pdf = [d](double x) { return d.pdf(x); };
    out.atom = 0.0;
    double hi = std::max(8.0 * cfg.mean_x_eff, 4.0 * m_eff);
    while (1.0 - d.cdf(hi) > 1e-6) hi *= 1.5;
    out.x_max = hi;
    json roots = json::array(), coeffs = json::array();
    for (const auto& r : d.roots.roots)
      roots.push_back({{"re", r.real()}, {"im", r.imag()}});
    for (const auto& c : d.coeffs)
      coeffs.push_back({{"re", c.real()}, {"im", c.imag()}});
    const double mass =
        integrate([&](double x) { return d.pdf(x); }, 0.0, m_eff, 1e-12,
                  1e-10) +
        integrate([&](double x) { return d.pdf(x); }, m_eff, out.x_max, 1e-12,
                  1e-10) +
        (1.0 - d.cdf(out.x_max));
    out.detail = {{"roots", roots},
                  {"coefficients", coeffs},
                  {"gamma_limit", d.gamma_limit},
                  {"unit_area_residual", mass - 1.0}};
  }
  return out;
}

// L1 distance between the analytic law and the simulated histogram, atom
// included; analytic bin masses by Simpson's rule on each bin.
double l1_distance(const SolvedDist& an, const SimSummary& sim) {
  double l1 = std::abs(an.atom - sim.empirical_atom);
  double covered = an.atom;
  for (std::size_t i = 0; i < sim.bin_mass.size(); ++i) {
    const double a = i * sim.bin_width;
    const double b = a + sim.bin_width;
    const double mid = 0.5 * (a + b);
    const double mass =
        sim.bin_width / 6.0 *
        (an.pdf(std::min(a, an.x_max * (1 - 1e-12))) + 4.0 * an.pdf(mid) +
         an.pdf(std::min(b, an.x_max * (1 - 1e-12))));
    l1 += std::abs(mass - sim.bin_mass[i]);
    covered += mass;
  }
  return l1 + std::max(0.0, 1.0 - covered);
}

}  // namespace

// ---- config ----------------------------------------------------------------

void RunConfig::validate() const {
  imp.validate();
  if (m < 1) throw config_error("config: eh.m must be >= 1");
  if (!(mean_x_eff > 0.0))
    throw config_error("config: eh.mean_x_eff must be > 0");
  if (policies.empty()) throw config_error("config: need at least one policy");
  if (capacities.empty())
    throw config_error("config: need at least one capacity entry");
  for (const auto& k : capacities)
    if (k && !(*k > 0.0)) throw config_error("config: capacity must be > 0");
  if (!(delta_eff > 0.0)) throw config_error("config: delta_eff must be > 0");
  if (!(0.0 < delta_lo && delta_lo < delta_hi))
    throw config_error("config: need 0 < delta_lo < delta_hi");
  if (delta_points < 2) throw config_error("config: delta_points >= 2");
  if (slots < 2) throw config_error("config: slots must be >= 2");
  if (bins < 1) throw config_error("config: bins must be >= 1");
  if (grid_points < 2) throw config_error("config: grid_points >= 2");
  if (format != "csv" && format != "json" && format != "both")
    throw config_error("config: format must be csv|json|both");
  for (double r : rates)
    if (!(r > 0.0)) throw config_error("config: rates must be > 0");
}

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.scenario = j.value("scenario", c.scenario);

    const auto& eh = j.at("eh");
    c.m = eh.at("m").get<int>();
    c.mean_x_eff = eh.at("mean_x_eff").get<double>();

    if (j.contains("imperfections")) {
      const auto& imp = j["imperfections"];
      c.imp.rho = imp.value("rho", 1.0);
      c.imp.beta = imp.value("beta", 1.0);
      c.imp.p_c = imp.value("p_c", 0.0);
    }

    const auto& pol = j.at("policy");
    for (const auto& s : pol.at("kinds"))
      c.policies.push_back(parse_policy(s.get<std::string>()));
    c.delta_eff = pol.value("delta_eff", c.delta_eff);
    if (pol.contains("capacities")) {
      for (const auto& k : pol["capacities"])
        c.capacities.push_back(k.is_null()
                                   ? std::optional<double>{}
                                   : std::optional<double>{k.get<double>()});
    } else {
      c.capacities.push_back(std::nullopt);
    }

    const auto& ch = j.at("channel");
    double sigma2;
    if (ch.contains("sigma2_dbm"))
      sigma2 = dbm_to_watt(ch["sigma2_dbm"].get<double>());
    else
      sigma2 = ch.at("sigma2").get<double>();
    c.ul = UplinkChannel(ch.at("m_ul").get<int>(),
                         ch.value("omega_ul", 1.0), sigma2,
                         ch.at("rate").get<double>());

    if (j.contains("rates"))
      c.rates = j["rates"].get<std::vector<double>>();

    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      c.delta_lo = s.value("delta_lo", c.delta_lo);
      c.delta_hi = s.value("delta_hi", c.delta_hi);
      c.delta_points = s.value("points", c.delta_points);
    }

    if (j.contains("sim")) {
      const auto& s = j["sim"];
      c.slots = s.value("slots", c.slots);
      c.seed = s.value("seed", c.seed);
      c.bins = s.value("bins", c.bins);
      c.simulate = s.value("simulate", c.simulate);
    }

    if (j.contains("output")) {
      const auto& o = j["output"];
      c.grid_points = o.value("grid_points", c.grid_points);
      c.out_dir = o.value("out_dir", c.out_dir);
      c.format = o.value("format", c.format);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json resolved_json(const RunConfig& c) {
  json caps = json::array();
  for (const auto& k : c.capacities)
    if (k) caps.push_back(*k); else caps.push_back(nullptr);
  json pols = json::array();
  for (Policy p : c.policies) pols.push_back(policy_tag(p));
  return {
      {"scenario", c.scenario},
      {"eh", {{"m", c.m}, {"mean_x_eff", c.mean_x_eff}}},
      {"imperfections",
       {{"rho", c.imp.rho}, {"beta", c.imp.beta}, {"p_c", c.imp.p_c}}},
      {"policy",
       {{"kinds", pols}, {"delta_eff", c.delta_eff}, {"capacities", caps}}},
      {"channel",
       {{"m_ul", c.ul.m_ul},
        {"omega_ul", c.ul.omega_ul},
        {"sigma2", c.ul.sigma2},  // linear watts, dBm resolved at parse time
        {"rate", c.ul.rate},
        {"gamma_thr", c.ul.gamma_thr}}},
      {"rates", c.rates},
      {"sweep",
       {{"delta_lo", c.delta_lo},
        {"delta_hi", c.delta_hi},
        {"points", c.delta_points}}},
      {"sim",
       {{"slots", c.slots},
        {"seed", c.seed},
        {"bins", c.bins},
        {"simulate", c.simulate}}},
      {"output",
       {{"grid_points", c.grid_points},
        {"out_dir", c.out_dir},
        {"format", c.format}}},
  };
}

// ---- subcommands -----------------------------------------------------------

int cmd_dist(const RunConfig& cfg) {
  const auto sink = make_sink(cfg, "dist");
  const double m_eff = cfg.delta_eff * cfg.mean_x_eff;
  for (Policy kind : cfg.policies) {
    for (std::size_t ki = 0; ki < cfg.capacities.size(); ++ki) {
      const auto& cap = cfg.capacities[ki];
      const std::string tag =
          std::string(policy_tag(kind)) + "_" + cap_tag(ki, cap);
      const auto an = solve_dist(cfg, kind, cap);

      std::optional<SimSummary> sim;
      double l1 = 0.0;
      if (cfg.simulate) {
        sim = run(make_sim(cfg, kind, cap, m_eff));
        l1 = l1_distance(an, *sim);
      }

      if (sink.want_csv()) {
        auto out = sink.open_csv(
            tag, cap ? (cfg.simulate ? "x,pdf_analytic,pdf_sim,atom_analytic,"
                                       "atom_sim"
                                     : "x,pdf_analytic,atom_analytic")
                     : (cfg.simulate ? "x,pdf_analytic,pdf_sim"
                                     : "x,pdf_analytic"));
        const double hi = sim ? std::max(sim->x_max, an.x_max) : an.x_max;
        for (int i = 0; i < cfg.grid_points; ++i) {
          const double x = hi * (i + 0.5) / cfg.grid_points;
          out << x << ','
              << (x < an.x_max ? an.pdf(x) : 0.0);
          if (sim) {
            const int b = std::min<int>(static_cast<int>(x / sim->bin_width),
                                        cfg.bins - 1);
            out << ',' << sim->empirical_pdf(b);
          }
          if (cap) {
            out << ',' << an.atom << ','
                << (sim ? sim->empirical_atom : 0.0);
          }
          out << '\n';
        }
      }
      if (sink.want_json()) {
        json body = {{"policy", policy_tag(kind)},
                     {"capacity", cap ? json(*cap) : json(nullptr)},
                     {"delta_eff", cfg.delta_eff},
                     {"m_eff", m_eff},
                     {"atom", an.atom},
                     {"detail", an.detail}};
        if (sim) {
          body["l1_distance"] = l1;
          body["empirical_atom"] = sim->empirical_atom;
          body["sim_x_max"] = sim->x_max;
        }
        sink.write_json(tag, std::move(body));
      }
    }
  }
  return 0;
}

int cmd_outage(const RunConfig& cfg) {
  const auto sink = make_sink(cfg, "outage");
  const double m_eff = cfg.delta_eff * cfg.mean_x_eff;
  std::ofstream csv;
  if (sink.want_csv())
    csv = sink.open_csv(
        "", "policy,capacity,delta_eff,case,p_M,p_out_given_M,sigma_term,"
            "p_out,throughput,p_out_sim,sim_sigma");
  json rows = json::array();
  for (Policy kind : cfg.policies) {
    for (const auto& cap : cfg.capacities) {
      const auto rep =
          evaluate_problem(make_problem(cfg, kind, cap), cfg.delta_eff);
      double hat = std::nan(""), se = std::nan("");
      if (cfg.simulate) {
        const auto sim = make_sim(cfg, kind, cap, m_eff);
        hat = outage_sim(sim, cfg.ul);
        const double n = static_cast<double>(sim.slots - sim.burn_in);
        se = std::sqrt(std::max(rep.p_out * (1.0 - rep.p_out), 1e-12) / n);
      }
      if (sink.want_csv()) {
        csv << policy_tag(kind) << ','
            << (cap ? std::to_string(*cap) : "inf") << ',' << cfg.delta_eff
            << ',' << case_name(rep.case_tag) << ',' << rep.p_M << ','
            << rep.p_out_given_M << ',' << rep.sigma_term << ',' << rep.p_out
            << ',' << rep.throughput << ',' << hat << ',' << se << '\n';
      }
      json row = report_json(rep);
      row["policy"] = policy_tag(kind);
      row["capacity"] = cap ? json(*cap) : json(nullptr);
      row["delta_eff"] = cfg.delta_eff;
      if (cfg.simulate) {
        row["p_out_sim"] = hat;
        row["sim_sigma"] = se;
      }
      rows.push_back(std::move(row));
    }
  }
  if (sink.want_json()) sink.write_json("", json{{"rows", rows}});
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const auto sink = make_sink(cfg, "sweep");
  std::ofstream csv;
  if (sink.want_csv())
    csv = sink.open_csv(
        "", "policy,capacity,delta_eff,p_out,throughput,is_optimum");
  json curves = json::array();
  for (Policy kind : cfg.policies) {
    for (std::size_t ki = 0; ki < cfg.capacities.size(); ++ki) {
      const auto& cap = cfg.capacities[ki];
      const auto prob = make_problem(cfg, kind, cap);
      const auto opt =
          optimize_delta(prob, cfg.delta_lo, cfg.delta_hi, cfg.delta_points);
      json pts = json::array();
      for (int i = 0; i < cfg.delta_points; ++i) {
        const double d = cfg.delta_lo + (cfg.delta_hi - cfg.delta_lo) * i /
                                            (cfg.delta_points - 1);
        double p = std::nan("");
        try {
          p = evaluate_problem(prob, d).p_out;
        } catch (const std::runtime_error&) {
          // infeasible grid point (e.g. m_eff <= p_c); leave as NaN
        }
        if (sink.want_csv())
          csv << policy_tag(kind) << ','
              << (cap ? std::to_string(*cap) : "inf") << ',' << d << ',' << p
              << ',' << cfg.ul.rate * (1.0 - p) << ",0\n";
        pts.push_back({{"delta_eff", d}, {"p_out", p}});
      }
      if (sink.want_csv())
        csv << policy_tag(kind) << ','
            << (cap ? std::to_string(*cap) : "inf") << ',' << opt.delta_opt
            << ',' << opt.report.p_out << ',' << opt.report.throughput
            << ",1\n";
      curves.push_back({{"policy", policy_tag(kind)},
                        {"capacity", cap ? json(*cap) : json(nullptr)},
                        {"delta_opt", opt.delta_opt},
                        {"optimum", report_json(opt.report)},
                        {"points", pts}});
    }
  }
  if (sink.want_json()) sink.write_json("", json{{"curves", curves}});
  return 0;
}

int cmd_throughput(const RunConfig& cfg) {
  if (cfg.rates.empty())
    throw config_error("config: throughput needs a non-empty rates list");
  const auto sink = make_sink(cfg, "throughput");
  std::ofstream csv;
  if (sink.want_csv())
    csv = sink.open_csv("", "policy,capacity,rate,delta_opt,p_out,throughput");
  json curves = json::array();
  for (Policy kind : cfg.policies) {
    for (const auto& cap : cfg.capacities) {
      const auto pts = throughput_sweep(make_problem(cfg, kind, cap),
                                        cfg.rates, cfg.delta_lo, cfg.delta_hi);
      json arr = json::array();
      for (const auto& p : pts) {
        if (sink.want_csv())
          csv << policy_tag(kind) << ','
              << (cap ? std::to_string(*cap) : "inf") << ',' << p.rate << ','
              << p.delta_opt << ',' << p.p_out << ',' << p.throughput << '\n';
        arr.push_back({{"rate", p.rate},
                       {"delta_opt", p.delta_opt},
                       {"p_out", p.p_out},
                       {"throughput", p.throughput}});
      }
      curves.push_back({{"policy", policy_tag(kind)},
                        {"capacity", cap ? json(*cap) : json(nullptr)},
                        {"points", arr}});
    }
  }
  if (sink.want_json()) sink.write_json("", json{{"curves", curves}});
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  const auto sink = make_sink(cfg, "compare");
  std::ofstream csv;
  if (sink.want_csv())
    csv = sink.open_csv(
        "", "capacity,be_delta_opt,be_p_out,oo_delta_opt,oo_p_out,"
            "bufferless_p_out,winner,prop2_margin,prop2_necessary");
  const double p_bl = p_out_bufferless(raw_eh(cfg), cfg.ul, cfg.imp);
  json rows = json::array();
  for (const auto& cap : cfg.capacities) {
    const auto be_prob = make_problem(cfg, Policy::BestEffort, cap);
    const auto oo_prob = make_problem(cfg, Policy::OnOff, cap);
    const auto be = optimize_delta(be_prob, cfg.delta_lo, cfg.delta_hi,
                                   cfg.delta_points);
    const auto oo = optimize_delta(oo_prob, cfg.delta_lo, cfg.delta_hi,
                                   cfg.delta_points);

    // Proposition-style pairing: both policies at the on-off optimum.
    const auto be_at = evaluate_problem(be_prob, oo.delta_opt);
    const auto in = superiority_inputs(cfg.ul, cfg.imp, cfg.mean_x_eff,
                                       oo.delta_opt * cfg.mean_x_eff,
                                       be_at.sigma_term);
    const auto verdict = superiority_test(be_at, oo.report, in);

    const double best_buf = std::min(be.report.p_out, oo.report.p_out);
    const std::string winner =
        p_bl < best_buf ? "bufferless"
                        : (be.report.p_out <= oo.report.p_out ? "be" : "oo");
    if (sink.want_csv())
      csv << (cap ? std::to_string(*cap) : "inf") << ',' << be.delta_opt
          << ',' << be.report.p_out << ',' << oo.delta_opt << ','
          << oo.report.p_out << ',' << p_bl << ',' << winner << ','
          << verdict.margin << ',' << (verdict.necessary_condition ? 1 : 0)
          << '\n';
    rows.push_back(
        {{"capacity", cap ? json(*cap) : json(nullptr)},
         {"be", {{"delta_opt", be.delta_opt},
                 {"report", report_json(be.report)}}},
         {"oo", {{"delta_opt", oo.delta_opt},
                 {"report", report_json(oo.report)}}},
         {"bufferless_p_out", p_bl},
         {"winner", winner},
         {"prop2",
          {{"b", in.b},
           {"delta_b", in.delta_b},
           {"G", in.G},
           {"G_delta_b", in.G_delta_b},
           {"oo_superior_at_oo_opt", verdict.oo_superior},
           {"margin", verdict.margin},
           {"necessary_condition", verdict.necessary_condition}}}});
  }
  if (sink.want_json()) sink.write_json("", json{{"rows", rows}});
  return 0;
}

int run_command(const std::string& name, const RunConfig& cfg) {
  if (name == "dist") return cmd_dist(cfg);
  if (name == "outage") return cmd_outage(cfg);
  if (name == "sweep") return cmd_sweep(cfg);
  if (name == "throughput") return cmd_throughput(cfg);
  if (name == "compare") return cmd_compare(cfg);
  throw config_error("unknown command '" + name + "'");
}

}  // namespace ebuf::cli
