#include "perc/config.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "perc/mc.hpp"
#include "perc/observables.hpp"
#include "perc/percolation.hpp"
#include "perc/sha256.hpp"
#include "perc/version.hpp"

namespace perc {

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

static std::string format_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

static double parse_hex(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

void check_keys(const njson& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + path + "." + it.key() + "'");
  }
}

template <typename T>
T require(const njson& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + path + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError("bad value at '" + path + "." + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> maybe(const njson& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError("bad value at '" + path + "." + key + "': " + e.what());
  }
}

}  // namespace

KernelSpec KernelConfig::build() const {
  try {
    return build_kernel(family_from_name(family), d, L, alpha, trunc_radius);
  } catch (const KernelError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(j, "$", {"kernel", "p", "observables", "seed", "out_dir", "workers"});
  ExperimentConfig cfg;
  {
    if (!j.contains("kernel")) throw ConfigError("missing key '$.kernel'");
    const njson& k = j.at("kernel");
    check_keys(k, "$.kernel", {"family", "d", "L", "alpha", "trunc_radius"});
    cfg.kernel.family = require<std::string>(k, "$.kernel", "family");
    cfg.kernel.d = require<int>(k, "$.kernel", "d");
    cfg.kernel.L = require<int64_t>(k, "$.kernel", "L");
    cfg.kernel.alpha = maybe<double>(k, "$.kernel", "alpha");
    cfg.kernel.trunc_radius = maybe<double>(k, "$.kernel", "trunc_radius");
  }
  {
    if (!j.contains("p")) throw ConfigError("missing key '$.p'");
    const njson& p = j.at("p");
    check_keys(p, "$.p", {"fixed", "critical"});
    if (p.contains("fixed") == p.contains("critical"))
      throw ConfigError("$.p needs exactly one of 'fixed' or 'critical'");
    if (p.contains("fixed")) {
      cfg.p_fixed = require<double>(p, "$.p", "fixed");
    } else {
      const njson& c = p.at("critical");
      check_keys(c, "$.p.critical", {"r1", "r2", "tol", "budget"});
      PcSearchConfig pc;
      pc.r1 = require<double>(c, "$.p.critical", "r1");
      pc.r2 = require<double>(c, "$.p.critical", "r2");
      pc.tol = require<double>(c, "$.p.critical", "tol");
      pc.budget = require<uint64_t>(c, "$.p.critical", "budget");
      cfg.p_critical = pc;
    }
  }
  if (j.contains("observables")) {
    size_t idx = 0;
    for (const njson& o : j.at("observables")) {
      std::string path = "$.observables[" + std::to_string(idx) + "]";
      check_keys(o, path, {"type", "r_grid", "s_grid", "samples", "n_factor", "k", "name"});
      ObservableConfig oc;
      oc.type = require<std::string>(o, path, "type");
      if (oc.type != "one-arm" && oc.type != "ball-volume" && oc.type != "size-tail" &&
          oc.type != "second-moment" && oc.type != "long-edge")
        throw ConfigError(path + ".type: unknown observable '" + oc.type + "'");
      if (auto g = maybe<std::vector<double>>(o, path, "r_grid")) oc.r_grid = *g;
      if (auto g = maybe<std::vector<uint64_t>>(o, path, "s_grid")) oc.s_grid = *g;
      if (auto s = maybe<uint64_t>(o, path, "samples")) oc.samples = *s;
      if (auto nf = maybe<double>(o, path, "n_factor")) oc.n_factor = *nf;
      if (auto kk = maybe<uint64_t>(o, path, "k")) oc.k = *kk;
      oc.name = maybe<std::string>(o, path, "name").value_or(oc.type);
      if (oc.type == "size-tail") {
        if (oc.s_grid.empty()) throw ConfigError(path + ": size-tail needs s_grid");
      } else if (oc.r_grid.empty()) {
        throw ConfigError(path + ": needs r_grid");
      }
      cfg.observables.push_back(std::move(oc));
      ++idx;
    }
  }
  if (auto s = maybe<uint64_t>(j, "$", "seed")) cfg.seed = *s;
  if (auto s = maybe<std::string>(j, "$", "out_dir")) cfg.out_dir = *s;
  if (auto w = maybe<int>(j, "$", "workers")) cfg.workers = *w;
  if (cfg.workers < 1) throw ConfigError("$.workers must be >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  return from_json_text(read_text_file(path));
}

std::string ExperimentConfig::to_json_text() const {
  njson j;
  njson k;
  k["family"] = kernel.family;
  k["d"] = kernel.d;
  k["L"] = kernel.L;
  if (kernel.alpha) k["alpha"] = *kernel.alpha;
  if (kernel.trunc_radius) k["trunc_radius"] = *kernel.trunc_radius;
  j["kernel"] = k;
  njson p;
  if (p_fixed) p["fixed"] = *p_fixed;
  if (p_critical) {
    njson c;
    c["r1"] = p_critical->r1;
    c["r2"] = p_critical->r2;
    c["tol"] = p_critical->tol;
    c["budget"] = p_critical->budget;
    p["critical"] = c;
  }
  j["p"] = p;
  njson obs = njson::array();
  for (const ObservableConfig& oc : observables) {
    njson o;
    o["type"] = oc.type;
    if (!oc.r_grid.empty()) o["r_grid"] = oc.r_grid;
    if (!oc.s_grid.empty()) o["s_grid"] = oc.s_grid;
    o["samples"] = oc.samples;
    if (oc.type == "second-moment") o["n_factor"] = oc.n_factor;
    if (oc.type == "long-edge") o["k"] = oc.k;
    o["name"] = oc.name;
    obs.push_back(o);
  }
  j["observables"] = obs;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["workers"] = workers;
  return j.dump(2);
}

std::string RunManifest::to_json_text() const {
  njson j;
  j["version"] = version;
  j["config"] = njson::parse(config_echo);
  j["p_resolved"] = p_resolved;
  j["p_stderr"] = p_stderr;
  j["p_searched"] = p_searched;
  j["wall_seconds"] = wall_seconds;
  njson d;
  for (const auto& [k, v] : file_digests) d[k] = v;
  j["file_digests"] = d;
  if (!error.empty()) j["error"] = error;
  return j.dump(2);
}

namespace {

// One observable, reduced to: abscissas + a per-sample vector of statistics
// + a finalizer that turns per-statistic accumulators into curve points.
struct ObservablePlan {
  std::vector<double> abscissas;
  size_t n_stats = 0;
  uint64_t cap = 0;  // resolved exploration cap (when used)
  std::function<void(uint64_t sample, std::vector<double>& stats)> measure;
  std::function<std::vector<CurvePoint>(const std::vector<MeanAcc>&)> finalize;
};

ObservablePlan make_plan(const ObservableConfig& oc, const KernelSpec& kernel, double p,
                         uint64_t seed, int workers, uint64_t cap_hint) {
  ObservablePlan plan;
  auto sub = std::make_shared<LatticeSubstrate>(kernel, p, seed);
  if (oc.type == "one-arm") {
    plan.abscissas = oc.r_grid;
    plan.n_stats = oc.r_grid.size();
    double r_max = *std::max_element(oc.r_grid.begin(), oc.r_grid.end());
    auto grid = oc.r_grid;
    plan.measure = [sub, r_max, grid](uint64_t i, std::vector<double>& st) {
      ClusterReport rep = sub->explore(i, StoppingRule::exit_ball(r_max));
      for (size_t j = 0; j < grid.size(); ++j)
        st[j] = rep.max_euclidean_radius > grid[j] ? 1.0 : 0.0;
    };
    plan.finalize = [grid](const std::vector<MeanAcc>& accs) {
      std::vector<CurvePoint> out;
      for (size_t j = 0; j < grid.size(); ++j) {
        CurvePoint cp;
        cp.abscissa = grid[j];
        cp.estimate = EstimateWithError::from_acc(accs[j], 0);
        out.push_back(cp);
      }
      return out;
    };
  } else if (oc.type == "ball-volume") {
    plan.abscissas = oc.r_grid;
    plan.n_stats = oc.r_grid.size();
    uint64_t cap = cap_hint;
    if (cap == 0) {
      // deterministic pilot to settle the size cap
      double r_max = *std::max_element(oc.r_grid.begin(), oc.r_grid.end());
      EstimateWithError pilot = expected_ball_volume(
          *sub, r_max, std::min<uint64_t>(oc.samples, 2000), workers, 1ull << 40);
      for (const auto& [k, v] : pilot.meta)
        if (k == "cap") cap = static_cast<uint64_t>(v);
      if (cap == 0) cap = 4096;
    }
    plan.cap = cap;
    auto grid = oc.r_grid;
    plan.measure = [sub, grid, cap](uint64_t i, std::vector<double>& st) {
      ClusterReport rep = sub->explore(i, StoppingRule::size_capped(cap));
      for (size_t j = 0; j < grid.size(); ++j) {
        double r2 = grid[j] * grid[j];
        double c = 0;
        for (const Point& v : rep.vertices)
          if (static_cast<double>(v.sqnorm()) <= r2) ++c;
        st[j] = c;
      }
    };
    plan.finalize = [grid](const std::vector<MeanAcc>& accs) {
      std::vector<CurvePoint> out;
      for (size_t j = 0; j < grid.size(); ++j) {
        CurvePoint cp;
        cp.abscissa = grid[j];
        cp.estimate = EstimateWithError::from_acc(accs[j], 0);
        out.push_back(cp);
      }
      return out;
    };
  } else if (oc.type == "size-tail") {
    plan.abscissas.assign(oc.s_grid.begin(), oc.s_grid.end());
    plan.n_stats = oc.s_grid.size();
    uint64_t s_max = oc.s_grid.back();
    auto grid = oc.s_grid;
    plan.measure = [sub, grid, s_max](uint64_t i, std::vector<double>& st) {
      ClusterReport rep = sub->explore(i, StoppingRule::size_capped(s_max));
      for (size_t j = 0; j < grid.size(); ++j) st[j] = rep.size >= grid[j] ? 1.0 : 0.0;
    };
    plan.finalize = [grid](const std::vector<MeanAcc>& accs) {
      std::vector<CurvePoint> out;
      for (size_t j = 0; j < grid.size(); ++j) {
        CurvePoint cp;
        cp.abscissa = static_cast<double>(grid[j]);
        cp.estimate = EstimateWithError::from_acc(accs[j], 0);
        out.push_back(cp);
      }
      return out;
    };
  } else if (oc.type == "second-moment") {
    plan.abscissas = oc.r_grid;
    // three statistics per grid point: N, N^2, N^3 (N^4 rides in acc of N^2)
    plan.n_stats = 3 * oc.r_grid.size();
    uint64_t cap = cap_hint ? cap_hint : 65536;
    plan.cap = cap;
    auto grid = oc.r_grid;
    double nf = oc.n_factor;
    plan.measure = [sub, grid, nf, cap](uint64_t i, std::vector<double>& st) {
      ClusterReport rep = sub->explore(i, StoppingRule::size_capped(cap));
      for (size_t j = 0; j < grid.size(); ++j) {
        double lo2 = grid[j] * grid[j];
        double hi2 = nf * grid[j] * nf * grid[j];
        double n = 0;
        for (const Point& v : rep.vertices) {
          double s = static_cast<double>(v.sqnorm());
          if (s > lo2 && s <= hi2) ++n;
        }
        st[3 * j] = n;
        st[3 * j + 1] = n * n;
        st[3 * j + 2] = n * n * n;
      }
    };
    plan.finalize = [grid](const std::vector<MeanAcc>& accs) {
      std::vector<CurvePoint> out;
      for (size_t j = 0; j < grid.size(); ++j) {
        const MeanAcc& a1 = accs[3 * j];
        const MeanAcc& a2 = accs[3 * j + 1];
        const MeanAcc& a3 = accs[3 * j + 2];
        double n = static_cast<double>(a1.n);
        double m1 = a1.mean(), m2 = a2.mean();
        CurvePoint cp;
        cp.abscissa = grid[j];
        if (m2 <= 0.0)
          throw EstimatorError("second moment bound undefined: E[N^2] estimate is zero");
        double ratio = m1 * m1 / m2;
        double var1 = std::max(0.0, a2.mean() - m1 * m1);
        double var2 = std::max(0.0, a2.sumsq / n - m2 * m2);
        double cov = a3.mean() - m1 * m2;
        double ga = 2.0 * m1 / m2, gb = -m1 * m1 / (m2 * m2);
        double var = ga * ga * var1 + gb * gb * var2 + 2.0 * ga * gb * cov;
        cp.estimate.value = ratio;
        cp.estimate.std_error = var > 0.0 ? std::sqrt(var / n) : 0.0;
        cp.estimate.n_samples = a1.n;
        out.push_back(cp);
      }
      return out;
    };
  } else if (oc.type == "long-edge") {
    if (oc.r_grid.size() != 1)
      throw ConfigError("long-edge observable needs exactly one radius in r_grid");
    double r = oc.r_grid[0];
    plan.abscissas = {r};
    plan.n_stats = 2;
    double m2r = kernel.mass_beyond(2.0 * r);
    uint64_t k = oc.k;
    uint64_t cap = cap_hint ? cap_hint : std::max<uint64_t>(4 * k, 4096);
    plan.cap = cap;
    auto tsub = std::make_shared<LatticeSubstrate>(kernel, p, seed, r);
    plan.measure = [tsub, k, cap, p, m2r](uint64_t i, std::vector<double>& st) {
      ClusterReport rep = tsub->explore(i, StoppingRule::size_capped(cap));
      bool ge = rep.size >= k;
      st[0] = ge ? 1.0 : 0.0;
      st[1] = ge ? 1.0 - std::pow(1.0 - p * m2r, static_cast<double>(rep.size)) : 0.0;
    };
    plan.finalize = [r, k, p, m2r](const std::vector<MeanAcc>& accs) {
      double factor = 1.0 - std::pow(1.0 - p * m2r, static_cast<double>(k));
      CurvePoint cp;
      cp.abscissa = r;
      cp.estimate.value = accs[0].mean() * factor;
      cp.estimate.std_error = accs[0].std_error() * factor;
      cp.estimate.n_samples = accs[0].n;
      return std::vector<CurvePoint>{cp};
    };
  } else {
    throw ConfigError("unknown observable type " + oc.type);
  }
  return plan;
}

std::string curve_csv(const std::vector<CurvePoint>& pts) {
  std::string out = "abscissa,value,stderr,n_samples\n";
  for (const CurvePoint& cp : pts) {
    out += format_g17(cp.abscissa) + "," + format_g17(cp.estimate.value) + "," +
           format_g17(cp.estimate.std_error) + "," + std::to_string(cp.estimate.n_samples) +
           "\n";
  }
  return out;
}

struct VecAcc {
  std::vector<MeanAcc> accs;
  void merge(const VecAcc& o) {
    if (accs.empty()) accs.assign(o.accs.size(), MeanAcc{});
    for (size_t i = 0; i < o.accs.size(); ++i) accs[i].merge(o.accs[i]);
  }
};

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, uint64_t max_batches) {
  uint64_t batches_left = max_batches == 0 ? UINT64_MAX : max_batches;
  auto t0 = std::chrono::steady_clock::now();
  if (cfg.p_fixed.has_value() == cfg.p_critical.has_value())
    throw ConfigError("config needs exactly one of p.fixed / p.critical");
  fs::create_directories(cfg.out_dir);

  RunManifest man;
  man.version = kVersion;
  man.config_echo = cfg.to_json_text();
  std::string config_sha = sha256_hex(man.config_echo);

  std::string ckpt_path = (fs::path(cfg.out_dir) / "checkpoint.json").string();
  njson ckpt;
  if (fs::exists(ckpt_path)) {
    ckpt = njson::parse(read_text_file(ckpt_path));
    if (ckpt.value("config_sha", std::string()) != config_sha)
      throw ConfigError("checkpoint/config mismatch in " + cfg.out_dir);
  } else {
    ckpt["config_sha"] = config_sha;
  }
  auto save_ckpt = [&]() { write_text_file(ckpt_path, ckpt.dump()); };

  KernelSpec kernel = cfg.kernel.build();

  double p = 0.0;
  if (cfg.p_fixed) {
    p = *cfg.p_fixed;
  } else {
    man.p_searched = true;
    if (ckpt.contains("pc")) {
      p = ckpt["pc"]["p_hat"].get<double>();
      man.p_stderr = ckpt["pc"]["stderr"].get<double>();
    } else {
      PcEstimate pc = estimate_pc(kernel, cfg.p_critical->r1, cfg.p_critical->r2,
                                  cfg.p_critical->tol, cfg.p_critical->budget,
                                  cfg.seed ^ 0x70635345ull, cfg.workers);
      p = pc.p_hat;
      man.p_stderr = pc.stderr_;
      ckpt["pc"] = {{"p_hat", p}, {"stderr", pc.stderr_}};
      save_ckpt();
    }
  }
  man.p_resolved = p;

  try {
    for (size_t oi = 0; oi < cfg.observables.size(); ++oi) {
      const ObservableConfig& oc = cfg.observables[oi];
      std::string key = std::to_string(oi);
      uint64_t cap_hint = 0;
      if (ckpt.contains("observables") && ckpt["observables"].contains(key))
        cap_hint = ckpt["observables"][key].value("cap", 0ull);
      ObservablePlan plan = make_plan(oc, kernel, p, cfg.seed + oi + 1, cfg.workers, cap_hint);

      uint64_t chunk = kDefaultChunk;
      uint64_t n_chunks = (oc.samples + chunk - 1) / chunk;
      uint64_t done = 0;
      VecAcc total;
      total.accs.assign(plan.n_stats, MeanAcc{});
      if (ckpt.contains("observables") && ckpt["observables"].contains(key) &&
          ckpt["observables"][key].contains("acc")) {
        const njson& st = ckpt["observables"][key];
        done = st["done_chunks"].get<uint64_t>();
        const njson& accs = st["acc"];
        for (size_t i = 0; i < plan.n_stats && i < accs.size(); ++i) {
          total.accs[i].sum = parse_hex(accs[i][0].get<std::string>());
          total.accs[i].sumsq = parse_hex(accs[i][1].get<std::string>());
          total.accs[i].n = accs[i][2].get<uint64_t>();
        }
      }

      const uint64_t batch_chunks = 64;
      while (done < n_chunks) {
        if (batches_left == 0) {
          man.error = "interrupted";
          man.wall_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          write_text_file((fs::path(cfg.out_dir) / "manifest.json").string(),
                          man.to_json_text());
          return man;
        }
        --batches_left;
        uint64_t todo = std::min(batch_chunks, n_chunks - done);
        std::vector<VecAcc> parts(static_cast<size_t>(todo));
        run_chunks(todo, cfg.workers, [&](uint64_t c) {
          uint64_t lo = (done + c) * chunk;
          uint64_t hi = std::min<uint64_t>(oc.samples, lo + chunk);
          VecAcc acc;
          acc.accs.assign(plan.n_stats, MeanAcc{});
          std::vector<double> st(plan.n_stats);
          for (uint64_t i = lo; i < hi; ++i) {
            std::fill(st.begin(), st.end(), 0.0);
            plan.measure(i, st);
            for (size_t j = 0; j < plan.n_stats; ++j) acc.accs[j].add(st[j]);
          }
          parts[static_cast<size_t>(c)] = std::move(acc);
        });
        for (VecAcc& a : parts) total.merge(a);
        done += todo;
        njson st;
        st["cap"] = plan.cap;
        st["done_chunks"] = done;
        njson accs = njson::array();
        for (const MeanAcc& a : total.accs)
          accs.push_back({format_hex(a.sum), format_hex(a.sumsq), a.n});
        st["acc"] = accs;
        ckpt["observables"][key] = st;
        save_ckpt();
      }

      std::vector<CurvePoint> pts = plan.finalize(total.accs);
      for (CurvePoint& cp : pts) cp.estimate.seed = cfg.seed + oi + 1;
      std::string fname = oc.name + ".csv";
      std::string fpath = (fs::path(cfg.out_dir) / fname).string();
      write_text_file(fpath, curve_csv(pts));
      man.file_digests[fname] = sha256_file_hex(fpath);
    }
  } catch (const std::exception& e) {
    man.error = e.what();
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_file((fs::path(cfg.out_dir) / "manifest.json").string(), man.to_json_text());
    throw;
  }

  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file((fs::path(cfg.out_dir) / "manifest.json").string(), man.to_json_text());
  if (fs::exists(ckpt_path)) fs::remove(ckpt_path);
  return man;
}

}  // namespace perc
