// perc: percolation laboratory command line.
//
// Subcommands: kernel-info, pc-search, estimate, iic-compare, backbone,
// diagrams, fit, report, oracle.
// Exit codes: 0 success, 2 config error, 3 estimator error, 4 budget abort.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "perc/backbone.hpp"
#include "perc/config.hpp"
#include "perc/diagrams.hpp"
#include "perc/events.hpp"
#include "perc/iic.hpp"
#include "perc/observables.hpp"
#include "perc/oracle.hpp"
#include "perc/percolation.hpp"
#include "perc/scaling.hpp"
#include "perc/sha256.hpp"
#include "perc/version.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;
using namespace perc;

namespace {

struct KernelFlags {
  std::string family = "nn";
  int d = 2;
  int64_t L = 1;
  double alpha = -1.0;
  double trunc_radius = -1.0;

  void attach(CLI::App* app) {
    app->add_option("--family", family, "nn | frso | lrso");
    app->add_option("--d", d, "dimension");
    app->add_option("--L", L, "spread-out parameter");
    app->add_option("--alpha", alpha, "long-range tail exponent");
    app->add_option("--trunc-radius", trunc_radius, "long-range truncation radius");
  }
  KernelSpec build() const {
    std::optional<double> a, t;
    if (alpha > 0.0) a = alpha;
    if (trunc_radius > 0.0) t = trunc_radius;
    return build_kernel(family_from_name(family), d, L, a, t);
  }
};

Point parse_point(const njson& arr, int d) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != d)
    throw ConfigError("point must be an array of length d");
  Point p(d);
  for (int i = 0; i < d; ++i) p[i] = arr[static_cast<size_t>(i)].get<int32_t>();
  return p;
}

CylinderEvent parse_event(const njson& j, int d) {
  std::string type = j.value("type", std::string());
  if (type == "full") return CylinderEvent::full_space();
  if (type == "edge-open")
    return CylinderEvent::edge_open(Edge(parse_point(j.at("a"), d), parse_point(j.at("b"), d)));
  if (type == "connected-in-box")
    return CylinderEvent::connected_in_box(parse_point(j.at("target"), d),
                                           j.at("m").get<int64_t>());
  if (type == "local-volume")
    return CylinderEvent::local_volume_at_least(j.at("k").get<uint64_t>(),
                                                j.at("m").get<int64_t>());
  if (type == "dnf") {
    std::vector<std::vector<CylinderEvent::Literal>> dnf;
    for (const njson& term : j.at("terms")) {
      std::vector<CylinderEvent::Literal> lits;
      for (const njson& lit : term) {
        CylinderEvent::Literal l;
        l.edge = Edge(parse_point(lit.at("a"), d), parse_point(lit.at("b"), d));
        l.open = lit.value("open", true);
        lits.push_back(l);
      }
      dnf.push_back(lits);
    }
    return CylinderEvent::from_dnf(dnf, j.at("m").get<int64_t>());
  }
  throw ConfigError("unknown event type '" + type + "'");
}

njson estimate_json(const EstimateWithError& e) {
  njson j;
  j["value"] = e.value;
  j["stderr"] = e.std_error;
  j["n_samples"] = e.n_samples;
  j["seed"] = e.seed;
  for (const auto& [k, v] : e.meta) j["meta"][k] = v;
  return j;
}

njson fit_json(const ScalingFit& f) {
  njson j;
  j["exponent"] = f.exponent;
  j["ci_low"] = f.ci_low;
  j["ci_high"] = f.ci_high;
  j["window"] = {f.window_min, f.window_max};
  j["n_boot"] = f.n_boot;
  j["residual_diagnostic"] = f.residual_diagnostic;
  j["curvature_score"] = f.curvature_score;
  j["curvature_flagged"] = f.curvature_flagged;
  j["intercept"] = f.intercept;
  return j;
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<CurvePoint> pts;
  size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    CurvePoint cp;
    double a = 0, v = 0, s = 0;
    long long n = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lld", &a, &v, &s, &n) != 4)
      throw ConfigError("bad CSV line: " + line);
    cp.abscissa = a;
    cp.estimate.value = v;
    cp.estimate.std_error = s;
    cp.estimate.n_samples = static_cast<uint64_t>(n);
    pts.push_back(cp);
  }
  return pts;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content << std::endl;
  } else {
    write_text_file(out_path, content);
    std::cout << out_path << std::endl;
  }
}

ConfigEvent parse_oracle_event(const njson& j) {
  std::string type = j.value("type", std::string());
  if (type == "reach-boundary")
    return [](const FiniteGraphSpec& g, const std::vector<bool>& w) {
      return config_reaches_boundary(g, w);
    };
  if (type == "connected") {
    int a = j.at("a").get<int>(), b = j.at("b").get<int>();
    return [a, b](const FiniteGraphSpec& g, const std::vector<bool>& w) {
      return config_connected(g, w, a, b);
    };
  }
  if (type == "size-at-least") {
    uint64_t k = j.at("k").get<uint64_t>();
    return [k](const FiniteGraphSpec& g, const std::vector<bool>& w) {
      return config_cluster_size(g, w) >= k;
    };
  }
  if (type == "edge-open") {
    size_t idx = j.at("index").get<size_t>();
    return [idx](const FiniteGraphSpec&, const std::vector<bool>& w) { return w[idx]; };
  }
  throw ConfigError("unknown oracle event type '" + type + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) + " - critical percolation laboratory"};
  app.require_subcommand(1);

  // kernel-info ------------------------------------------------------------
  auto* sc_info = app.add_subcommand("kernel-info", "print kernel facts as JSON");
  KernelFlags kf_info;
  kf_info.attach(sc_info);
  std::string info_out;
  sc_info->add_option("--out", info_out, "output path (default stdout)");

  // pc-search ---------------------------------------------------------------
  auto* sc_pc = app.add_subcommand("pc-search", "locate the critical point");
  KernelFlags kf_pc;
  kf_pc.attach(sc_pc);
  double pc_r1 = 16, pc_r2 = 32, pc_tol = 0.01;
  uint64_t pc_budget = 400000, pc_seed = 1;
  int pc_workers = 1;
  std::string pc_out;
  sc_pc->add_option("--r1", pc_r1);
  sc_pc->add_option("--r2", pc_r2);
  sc_pc->add_option("--tol", pc_tol);
  sc_pc->add_option("--budget", pc_budget);
  sc_pc->add_option("--seed", pc_seed);
  sc_pc->add_option("--workers", pc_workers);
  sc_pc->add_option("--out", pc_out);

  // estimate ----------------------------------------------------------------
  auto* sc_est = app.add_subcommand("estimate", "run one observable, write CSV + manifest");
  KernelFlags kf_est;
  kf_est.attach(sc_est);
  std::string est_obs = "one-arm", est_out = "run", est_config;
  double est_p = -1.0;
  bool est_critical = false;
  double est_cr1 = 16, est_cr2 = 32, est_ctol = 0.01;
  uint64_t est_cbudget = 400000;
  std::vector<double> est_rgrid;
  std::vector<uint64_t> est_sgrid;
  uint64_t est_samples = 100000, est_seed = 1, est_k = 1;
  double est_nfactor = 2.0;
  int est_workers = 1;
  sc_est->add_option("--config", est_config, "full experiment config JSON (overrides flags)");
  sc_est->add_option("--observable", est_obs,
                     "one-arm | ball-volume | size-tail | second-moment | long-edge");
  sc_est->add_option("--p", est_p, "fixed percolation parameter");
  sc_est->add_flag("--critical", est_critical, "resolve p by pc-search first");
  sc_est->add_option("--critical-r1", est_cr1);
  sc_est->add_option("--critical-r2", est_cr2);
  sc_est->add_option("--critical-tol", est_ctol);
  sc_est->add_option("--critical-budget", est_cbudget);
  sc_est->add_option("--r-grid", est_rgrid)->delimiter(',');
  sc_est->add_option("--s-grid", est_sgrid)->delimiter(',');
  sc_est->add_option("--samples", est_samples);
  sc_est->add_option("--seed", est_seed);
  sc_est->add_option("--workers", est_workers);
  sc_est->add_option("--n-factor", est_nfactor);
  sc_est->add_option("--k", est_k);
  sc_est->add_option("--out", est_out, "output directory");

  // iic-compare ---------------------------------------------------------------
  auto* sc_iic = app.add_subcommand("iic-compare", "three IIC schemes, agreement report");
  KernelFlags kf_iic;
  kf_iic.attach(sc_iic);
  double iic_pc = -1.0;
  std::string iic_event, iic_out = "iic";
  std::vector<int64_t> iic_xlist;
  std::vector<double> iic_plist, iic_rlist;
  uint64_t iic_budget = 4000, iic_seed = 1;
  int iic_workers = 1;
  sc_iic->add_option("--p-c", iic_pc, "critical point estimate")->required();
  sc_iic->add_option("--event", iic_event, "event spec JSON file")->required();
  sc_iic->add_option("--x-list", iic_xlist, "axis |x| values for the two-point scheme")
      ->delimiter(',');
  sc_iic->add_option("--p-list", iic_plist)->delimiter(',');
  sc_iic->add_option("--r-list", iic_rlist)->delimiter(',');
  sc_iic->add_option("--budget", iic_budget, "accepted samples per scale");
  sc_iic->add_option("--seed", iic_seed);
  sc_iic->add_option("--workers", iic_workers);
  sc_iic->add_option("--out", iic_out, "output directory");

  // backbone ------------------------------------------------------------------
  auto* sc_bb = app.add_subcommand("backbone", "backbone count curve under conditioning");
  KernelFlags kf_bb;
  kf_bb.attach(sc_bb);
  double bb_p = -1.0, bb_Rfactor = 4.0;
  std::vector<double> bb_rgrid;
  uint64_t bb_accepted = 2000, bb_seed = 1;
  int bb_workers = 1;
  std::string bb_out = "backbone";
  sc_bb->add_option("--p", bb_p)->required();
  sc_bb->add_option("--r-grid", bb_rgrid)->delimiter(',')->required();
  sc_bb->add_option("--R-factor", bb_Rfactor);
  sc_bb->add_option("--accepted", bb_accepted);
  sc_bb->add_option("--seed", bb_seed);
  sc_bb->add_option("--workers", bb_workers);
  sc_bb->add_option("--out", bb_out, "output directory");

  // diagrams --------------------------------------------------------------------
  auto* sc_dg = app.add_subcommand("diagrams", "Fourier-space diagram numerics");
  KernelFlags kf_dg;
  kf_dg.attach(sc_dg);
  std::string dg_op = "triangle", dg_out, dg_variant = "g";
  double dg_lambda = 0.0, dg_radius = 16.0;
  uint64_t dg_samples = 100000, dg_seed = 1;
  int dg_workers = 1;
  sc_dg->add_option("--op", dg_op,
                    "triangle | open-triangle | dhat-bounds | smoothing-check | volume-integral");
  sc_dg->add_option("--lambda", dg_lambda);
  sc_dg->add_option("--k-samples", dg_samples);
  sc_dg->add_option("--seed", dg_seed);
  sc_dg->add_option("--workers", dg_workers);
  sc_dg->add_option("--smoothing", dg_variant, "g | h");
  sc_dg->add_option("--radius", dg_radius, "smoothing kernel radius");
  sc_dg->add_option("--out", dg_out);

  // fit ---------------------------------------------------------------------------
  auto* sc_fit = app.add_subcommand("fit", "power-law fit of an observable CSV");
  std::string fit_in, fit_out;
  int fit_boot = 2000;
  uint64_t fit_seed = 0x5ca11ull;
  sc_fit->add_option("--input", fit_in, "curve CSV")->required();
  sc_fit->add_option("--n-boot", fit_boot);
  sc_fit->add_option("--seed", fit_seed);
  sc_fit->add_option("--out", fit_out);

  // report ---------------------------------------------------------------------
  auto* sc_rep = app.add_subcommand("report", "end-to-end exponent report from a config");
  std::string rep_config, rep_out;
  sc_rep->add_option("--config", rep_config, "report config JSON")->required();
  sc_rep->add_option("--out", rep_out, "output path (default stdout)");

  // oracle -------------------------------------------------------------------
  auto* sc_or = app.add_subcommand("oracle", "exact enumeration on an explicit graph");
  std::string or_graph, or_event, or_out;
  sc_or->add_option("--graph", or_graph, "graph JSON file")->required();
  sc_or->add_option("--event", or_event, "event spec JSON file")->required();
  sc_or->add_option("--out", or_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sc_info) {
      KernelSpec k = kf_info.build();
      njson j;
      j["family"] = family_name(k.family());
      j["d"] = k.dim();
      j["L"] = k.spread();
      if (std::isfinite(k.alpha())) j["alpha"] = k.alpha();
      if (k.family() == Family::LongRangeSpreadOut) j["trunc_radius"] = k.trunc_radius();
      j["support_size"] = k.support_size();
      j["normalizer"] = k.normalizer();
      j["tail_mass_bound"] = k.tail_mass_bound();
      j["d_max"] = k.d_max();
      j["p_max"] = k.p_max();
      j["classes"] = k.classes().size();
      j["tail_shells"] = k.has_implicit_tail()
                             ? njson("implicit")
                             : njson(k.shells().size());
      emit(info_out, j.dump(2));
    } else if (*sc_pc) {
      KernelSpec k = kf_pc.build();
      PcEstimate pc = estimate_pc(k, pc_r1, pc_r2, pc_tol, pc_budget, pc_seed, pc_workers);
      njson j;
      j["p_hat"] = pc.p_hat;
      j["stderr"] = pc.stderr_;
      j["iterations"] = pc.iterations;
      j["samples_used"] = pc.samples_used;
      j["bracket"] = {pc.bracket_lo, pc.bracket_hi};
      if (pc.degenerate_lower) j["degenerate_lower"] = true;
      emit(pc_out, j.dump(2));
    } else if (*sc_est) {
      ExperimentConfig cfg;
      if (!est_config.empty()) {
        cfg = ExperimentConfig::from_json_file(est_config);
      } else {
        cfg.kernel.family = kf_est.family;
        cfg.kernel.d = kf_est.d;
        cfg.kernel.L = kf_est.L;
        if (kf_est.alpha > 0) cfg.kernel.alpha = kf_est.alpha;
        if (kf_est.trunc_radius > 0) cfg.kernel.trunc_radius = kf_est.trunc_radius;
        if (est_critical) {
          PcSearchConfig pc;
          pc.r1 = est_cr1;
          pc.r2 = est_cr2;
          pc.tol = est_ctol;
          pc.budget = est_cbudget;
          cfg.p_critical = pc;
        } else {
          if (est_p < 0) throw ConfigError("estimate: need --p or --critical");
          cfg.p_fixed = est_p;
        }
        ObservableConfig oc;
        oc.type = est_obs;
        oc.r_grid = est_rgrid;
        oc.s_grid = est_sgrid;
        oc.samples = est_samples;
        oc.n_factor = est_nfactor;
        oc.k = est_k;
        oc.name = est_obs;
        cfg.observables.push_back(oc);
        cfg.seed = est_seed;
        cfg.out_dir = est_out;
        cfg.workers = est_workers;
      }
      RunManifest man = run_experiment(cfg);
      std::cout << man.to_json_text() << std::endl;
    } else if (*sc_iic) {
      KernelSpec k = kf_iic.build();
      njson ev = njson::parse(read_text_file(iic_event));
      CylinderEvent event = parse_event(ev, k.dim());
      AgreementScales scales;
      for (int64_t x : iic_xlist) {
        Point p(k.dim());
        p[0] = static_cast<int32_t>(x);
        scales.x_list.push_back(p);
      }
      scales.p_list = iic_plist;
      scales.r_list = iic_rlist;
      AgreementReport rep =
          scheme_agreement(k, iic_pc, event, scales, iic_budget, iic_seed, iic_workers);
      njson j;
      j["event"] = event.describe();
      j["p_c"] = iic_pc;
      njson schemes = njson::array();
      std::string csv = "scheme,scale,value,stderr,n\n";
      for (const SchemeCurve& c : rep.schemes) {
        njson sj;
        sj["scheme"] = c.scheme;
        njson ests = njson::array();
        for (size_t i = 0; i < c.scales.size(); ++i) {
          njson e = estimate_json(c.estimates[i]);
          e["scale"] = c.scales[i];
          ests.push_back(e);
          csv += c.scheme + "," + format_g17(c.scales[i]) + "," +
                 format_g17(c.estimates[i].value) + "," +
                 format_g17(c.estimates[i].std_error) + "," +
                 std::to_string(c.estimates[i].n_samples) + "\n";
        }
        sj["estimates"] = ests;
        sj["drift_last"] = c.drift_last;
        sj["drift_sigma"] = c.drift_sigma;
        schemes.push_back(sj);
      }
      j["schemes"] = schemes;
      njson pairs = njson::array();
      for (const auto& pr : rep.terminal_pairs) {
        njson pj;
        pj["a"] = pr.a;
        pj["b"] = pr.b;
        pj["diff"] = pr.diff;
        pj["sigma"] = pr.sigma;
        pj["within_3sigma"] = pr.within_3sigma;
        pairs.push_back(pj);
      }
      j["terminal_pairs"] = pairs;
      j["terminals_agree"] = rep.terminals_agree;
      j["drifts_converged"] = rep.drifts_converged;
      fs::create_directories(iic_out);
      write_text_file((fs::path(iic_out) / "agreement.json").string(), j.dump(2));
      write_text_file((fs::path(iic_out) / "agreement.csv").string(), csv);
      std::cout << j.dump(2) << std::endl;
    } else if (*sc_bb) {
      KernelSpec k = kf_bb.build();
      BackboneCurve bc = backbone_count_curve(k, bb_p, bb_rgrid, bb_Rfactor, bb_accepted,
                                              bb_seed, bb_workers);
      std::string csv = "abscissa,value,stderr,n_samples\n";
      for (const CurvePoint& cp : bc.points)
        csv += format_g17(cp.abscissa) + "," + format_g17(cp.estimate.value) + "," +
               format_g17(cp.estimate.std_error) + "," +
               std::to_string(cp.estimate.n_samples) + "\n";
      njson j;
      j["accepted"] = bc.accepted;
      j["proposals"] = bc.proposals;
      j["undecided_edges"] = bc.undecided_edges;
      j["classified_edges"] = bc.classified_edges;
      j["valid"] = bc.valid;
      j["R_factor"] = bb_Rfactor;
      j["p"] = bb_p;
      fs::create_directories(bb_out);
      write_text_file((fs::path(bb_out) / "backbone.csv").string(), csv);
      write_text_file((fs::path(bb_out) / "backbone.json").string(), j.dump(2));
      std::cout << j.dump(2) << std::endl;
    } else if (*sc_dg) {
      KernelSpec k = kf_dg.build();
      njson j;
      if (dg_op == "triangle" || dg_op == "open-triangle") {
        ProxyGreen proxy(k, dg_lambda);
        EstimateWithError e = dg_op == "triangle"
                                  ? triangle_estimate(proxy, dg_samples, dg_seed, dg_workers)
                                  : open_triangle_bound(proxy, dg_samples, dg_seed, dg_workers);
        j = estimate_json(e);
        j["op"] = dg_op;
      } else if (dg_op == "dhat-bounds") {
        DhatBoundReport r = dhat_bound_report(k, dg_samples, dg_seed);
        j["c1_hat"] = r.c1_hat;
        j["c2_hat"] = r.c2_hat;
        j["w_hat"] = r.w_hat;
        j["pass"] = r.pass;
      } else if (dg_op == "smoothing-check") {
        SmoothingKernel sk = dg_variant == "h" ? SmoothingKernel::h(dg_radius, k.dim())
                                               : SmoothingKernel::g(dg_radius, k.dim());
        SmoothingCheckReport r = smoothing_kernel_check(sk, dg_samples, dg_seed);
        j["variant"] = dg_variant;
        j["r"] = dg_radius;
        j["domination_ok"] = r.domination_ok;
        j["transform_ok"] = r.transform_ok;
        if (dg_variant == "h") j["h0"] = r.h0;
        j["pass"] = r.pass;
      } else if (dg_op == "volume-integral") {
        ProxyGreen proxy(k, dg_lambda);
        SmoothingKernel sk = dg_variant == "h" ? SmoothingKernel::h(dg_radius, k.dim())
                                               : SmoothingKernel::g(dg_radius, k.dim());
        EstimateWithError e = proxy_volume_integral(proxy, sk, dg_samples, dg_seed, dg_workers);
        j = estimate_json(e);
        j["op"] = dg_op;
        j["r"] = dg_radius;
      } else {
        throw ConfigError("unknown diagrams op '" + dg_op + "'");
      }
      emit(dg_out, j.dump(2));
    } else if (*sc_fit) {
      auto pts = read_curve_csv(fit_in);
      ScalingFit f = fit_power_law(pts, fit_boot, fit_seed);
      emit(fit_out, fit_json(f).dump(2));
    } else if (*sc_rep) {
      njson rj = njson::parse(read_text_file(rep_config));
      ExperimentConfig base;
      base.kernel.family = rj.at("kernel").value("family", "nn");
      base.kernel.d = rj.at("kernel").value("d", 2);
      base.kernel.L = rj.at("kernel").value("L", 1ll);
      if (rj.at("kernel").contains("alpha")) base.kernel.alpha = rj.at("kernel")["alpha"].get<double>();
      if (rj.at("kernel").contains("trunc_radius"))
        base.kernel.trunc_radius = rj.at("kernel")["trunc_radius"].get<double>();
      KernelSpec k = base.kernel.build();
      uint64_t seed = rj.value("seed", 1ull);
      int workers = rj.value("workers", 1);
      double p_hat;
      double p_stderr = 0.0;
      if (rj.contains("p") && rj["p"].contains("fixed")) {
        p_hat = rj["p"]["fixed"].get<double>();
      } else {
        PcSearchConfig pcc;
        if (rj.contains("p") && rj["p"].contains("critical")) {
          const njson& c = rj["p"]["critical"];
          pcc.r1 = c.value("r1", 16.0);
          pcc.r2 = c.value("r2", 32.0);
          pcc.tol = c.value("tol", 0.01);
          pcc.budget = c.value("budget", 400000ull);
        }
        PcEstimate pc = estimate_pc(k, pcc.r1, pcc.r2, pcc.tol, pcc.budget, seed, workers);
        p_hat = pc.p_hat;
        p_stderr = pc.stderr_;
      }
      ExponentReportOptions opts;
      opts.workers = workers;
      if (rj.contains("samples_per_point"))
        opts.samples_per_point = rj["samples_per_point"].get<uint64_t>();
      if (rj.contains("backbone_accepted"))
        opts.backbone_accepted = rj["backbone_accepted"].get<uint64_t>();
      if (rj.contains("include_backbone"))
        opts.include_backbone = rj["include_backbone"].get<bool>();
      if (rj.contains("include_iic_volume"))
        opts.include_iic_volume = rj["include_iic_volume"].get<bool>();
      ExponentReport er = exponent_report(k, p_hat, seed, opts);
      njson j;
      j["p_hat"] = er.p_hat;
      j["p_stderr"] = p_stderr;
      j["alpha_eff"] = er.alpha_eff;
      j["high_dim_regime"] = er.high_dim_regime;
      njson checks = njson::array();
      for (const ExponentCheck& c : er.checks) {
        njson cj;
        cj["name"] = c.name;
        cj["fit"] = fit_json(c.fit);
        cj["target"] = c.target;
        cj["tolerance"] = c.tolerance;
        cj["one_sided_floor"] = c.one_sided_floor;
        cj["pass"] = c.pass;
        checks.push_back(cj);
      }
      j["checks"] = checks;
      emit(rep_out, j.dump(2));
    } else if (*sc_or) {
      njson gj = njson::parse(read_text_file(or_graph));
      FiniteGraphSpec g;
      g.n_vertices = gj.at("vertices").get<int>();
      g.origin = gj.value("origin", 0);
      if (gj.contains("boundary"))
        for (const njson& b : gj["boundary"]) g.boundary.push_back(b.get<int>());
      for (const njson& e : gj.at("edges"))
        g.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
      g.validate();
      njson ej = njson::parse(read_text_file(or_event));
      njson j;
      if (ej.contains("event") && ej.contains("condition")) {
        double v = enumerate_conditional(g, parse_oracle_event(ej["event"]),
                                         parse_oracle_event(ej["condition"]));
        j["conditional_probability"] = v;
      } else {
        j["probability"] = enumerate_probability(g, parse_oracle_event(ej));
      }
      emit(or_out, j.dump(2));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget abort: " << e.what() << std::endl;
    return 4;
  } catch (const KernelError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const EstimatorError& e) {
    std::cerr << "estimator error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
