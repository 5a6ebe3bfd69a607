#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace seqsft::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kStageOrder[] = {"validate", "rpf", "decompose", "scan",
                                       "distribution", "verify", "sample"};

// Seeds burned into the library defaults; recorded in the manifest so a run
// is reproducible from its artifacts alone.
constexpr std::uint64_t kRpfProbeSeed = 20250814u;
constexpr std::uint64_t kScanProbeSeed = 1020u;
constexpr std::uint64_t kMcFixtureSeed = 0x5eed5u;

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
}

void write_doc(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

template <class Table>
void write_table(const fs::path& p, const Table& t) {
  std::ostringstream os;
  write_csv(os, t);
  write_text(p, os.str());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + std::string(e.what()));
  }
}

MatrixR matrix_from_json(const Json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
    throw ConfigError(what + " must be a nonempty array of rows");
  MatrixR m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols())
      throw ConfigError(what + " rows must share one length");
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<Real>();
  }
  return m;
}

// Everything after the first ':' in a model name, empty when there is none.
std::string name_payload(const std::string& name) {
  auto pos = name.find(':');
  return pos == std::string::npos ? std::string() : name.substr(pos + 1);
}

bool name_is(const std::string& name, const char* head) {
  return name.rfind(head, 0) == 0;
}

// Variant of the built-in reducible fixture with a configurable coboundary
// decay ratio; a bare "red_fixture" keeps the built-in ratio 1/2.
Model parametrized_red_fixture(const std::string& full_name, long window) {
  Model base = make_model("red_fixture", window);
  std::string payload = name_payload(full_name);
  if (payload.empty()) return base;

  Real ratio = 0.0;
  try {
    std::size_t used = 0;
    ratio = std::stod(payload, &used);
    if (used != payload.size()) throw std::invalid_argument(payload);
  } catch (const std::exception&) {
    throw ConfigError("red_fixture ratio must be a number, got '" + payload + "'");
  }
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ConfigError("red_fixture ratio must lie in [0, 1)");

  RpfData rpf = rpf_solve(base.sys, base.potential);
  FnSeq g, z;
  g.entries.push_back(base.reducible->g.entries.front());
  z.entries.push_back(base.reducible->z.entries.front());
  std::vector<Real> c;
  for (long j = 0; j < window; ++j) c.push_back(std::pow(ratio, static_cast<Real>(j)));
  ReducibleFixture fx = reducible_fixture(base.sys, rpf, g, z, c, 1.0, window - 1);
  Model m;
  m.name = full_name;
  m.sys = base.sys;
  m.potential = base.potential;
  m.observable = fx.f;
  m.reducible = std::move(fx);
  return m;
}

Model build_model(const RunConfig& cfg) {
  const std::string& name = cfg.model;
  if (name_is(name, "markov:")) {
    Json j = load_json_file(name_payload(name));
    std::vector<MatrixR> transitions;
    VectorR initial;
    try {
      const Json& tr = j.at("transitions");
      if (!tr.is_array() || tr.empty())
        throw ConfigError("transitions must be a nonempty array of matrices");
      for (const Json& one : tr)
        transitions.push_back(matrix_from_json(one, "transition matrix"));
      const Json& init = j.at("initial");
      initial.resize(static_cast<Eigen::Index>(init.size()));
      for (Eigen::Index i = 0; i < initial.size(); ++i)
        initial[i] = init[static_cast<std::size_t>(i)].get<Real>();
    } catch (const Json::exception& e) {
      throw ConfigError("markov file: " + std::string(e.what()));
    }
    return from_markov_chain(transitions, initial, cfg.window);
  }
  if (name_is(name, "red_fixture")) return parametrized_red_fixture(name, cfg.window);
  return make_model(name, cfg.window);
}

struct StageMachine {
  const RunConfig& cfg;
  fs::path out;
  int threads;
  RunReport rep;

  Model model;
  FnSeq observable;
  FnR q0;  // flat density: all statistics target the sequential Gibbs law
  std::optional<RpfData> rpf_;

  StageMachine(const RunConfig& c, fs::path o, int th)
      : cfg(c), out(std::move(o)), threads(th) {
    // A model that cannot be built is a configuration problem, not a failed
    // computation: rewrap construction errors so the caller exits 2.
    try {
      model = build_model(cfg);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("model '" + cfg.model + "': " + std::string(e.what()));
    }
    observable = cfg.observable.is_null() ? model.observable
                                          : fnseq_from_json(model.sys, cfg.observable);
    q0 = make_constant<Real>(model.sys, 0, 1, 1.0);

    for (long n : cfg.verify.n_grid)
      if (n < 1 || n > cfg.window)
        throw ConfigError("verify.n_grid entries must lie in [1, window]");
    if (model.reducible)
      for (long n : cfg.verify.n_grid)
        if (n > model.reducible->count)
          throw ConfigError("verify.n_grid entries must stay below the fixture depth " +
                            std::to_string(model.reducible->count));
  }

  const RpfData& rpf() {
    if (!rpf_) rpf_ = rpf_solve(model.sys, model.potential);
    return *rpf_;
  }

  void fail(const std::string& stage, const std::string& msg) {
    rep.exit_code = std::max(rep.exit_code, 1);
    rep.lines.push_back("[FAIL] " + stage + ": " + msg);
  }

  void pass(const std::string& stage, const std::string& msg) {
    rep.lines.push_back("[ ok ] " + stage + ": " + msg);
  }

  void st_validate() {
    const ValidatedSystem& sys = model.sys;
    Json j;
    j["model"] = cfg.model;
    j["window_end"] = sys.window_end();
    Json sizes = Json::array();
    for (long k = 0; k <= sys.window_end(); ++k) sizes.push_back(sys.alphabet_size(k));
    j["alphabet_sizes"] = std::move(sizes);
    const ExtensionRule& ext = sys.spec().extension;
    j["extension"] = ext.kind == ExtensionRule::kFrozen
                         ? std::string("frozen")
                         : "periodic:" + std::to_string(ext.period);
    j["observable_depth"] = observable.max_depth();
    Json words = Json::object();
    for (int d = 1; d <= std::min<long>(3, sys.window_end()); ++d)
      words[std::to_string(d)] = sys.words(0, d)->count();
    j["word_counts_base0"] = std::move(words);
    write_doc(out / "system.json", j);
    pass("validate", "window [0, " + std::to_string(sys.window_end()) + "], depth " +
                         std::to_string(observable.max_depth()) + " observable");
  }

  void st_rpf() {
    const RpfData& R = rpf();
    write_doc(out / "rpf.json", to_json(R));
    pass("rpf", "contraction " + detail::num(R.contraction) + ", tail " +
                    detail::num(R.tail_error));
  }

  void st_decompose() {
    const RpfData& R = rpf();
    CenterResult cc = center(model.sys, R, observable);
    DecompResult d = martingale_coboundary(model.sys, R, cc.centered, R.window_end);
    // Variance classification wants the longest horizon the window affords,
    // independent of the (shorter) error-curve grid.
    std::vector<long> horizon{std::max<long>(cfg.window / 4, 2),
                              std::max<long>(cfg.window / 2, 3), cfg.window};
    VarianceEvidence ev = classify_variance(model.sys, R, observable, horizon);
    Json j = to_json(d);
    j["means"] = cc.means;
    j["variance"] = to_json(ev);
    write_doc(out / "decompose.json", j);
    Real id_res = d.identity_residual.empty()
                      ? 0.0
                      : *std::max_element(d.identity_residual.begin(), d.identity_residual.end());
    Real mart_res = d.martingale_residual.empty()
                        ? 0.0
                        : *std::max_element(d.martingale_residual.begin(),
                                            d.martingale_residual.end());
    if (id_res > 1e-9)
      fail("decompose", "identity residual " + detail::num(id_res));
    else if (mart_res > 1e-8)
      fail("decompose", "martingale residual " + detail::num(mart_res));
    else
      pass("decompose", std::string("variance ") + to_string(ev.verdict));
  }

  LatticeReport st_scan() {
    const RpfData& R = rpf();
    LatticeReport lr = resonance_scan(model.sys, R, observable, cfg.scan.delta, cfg.scan.T,
                                      cfg.scan.n_max, 0.2, cfg.scan.grid, 4, threads);
    write_doc(out / "scan.json", to_json(lr));
    write_table(out / "norm_curve.csv", lr.curve);
    if (lr.classification == LatticeClass::Indeterminate) {
      fail("scan", "classification is Indeterminate");
    } else {
      std::string msg = to_string(lr.classification);
      if (lr.span_a) msg += ", span " + detail::num(*lr.span_a);
      pass("scan", msg);
    }
    return lr;
  }

  void st_distribution() {
    const RpfData& R = rpf();
    long n = *std::max_element(cfg.verify.n_grid.begin(), cfg.verify.n_grid.end());
    Moments mo = sum_moments(model.sys, R, observable, q0, n);

    std::vector<Real> t_grid;
    for (int k = 0; k <= 200; ++k)
      t_grid.push_back(cfg.scan.T * static_cast<Real>(k) / 200.0);
    CharFnCurve curve = char_fn_curve(model.sys, R, observable, q0, n, t_grid, threads);
    write_table(out / "char_fn.csv", curve);

    Json j;
    j["n"] = n;
    j["moments"] = to_json(mo);
    Complex phi0 = curve.phi.front();
    j["phi0"] = Json::array({phi0.real(), phi0.imag()});
    bool integer = detail::integer_valued(model.sys, observable, n);
    j["integer_valued"] = integer;

    std::string msg;
    if (integer) {
      PmfTable pmf = lattice_pmf(model.sys, R, observable, q0, n, threads);
      write_table(out / "pmf.csv", pmf);
      j["table"] = to_json(pmf);
      if (std::abs(pmf.mass_sum - 1.0) > 1e-9)
        fail("distribution", "pmf mass " + detail::num(pmf.mass_sum));
      msg = std::to_string(pmf.mass.size()) + " pmf atoms";
    } else {
      Real sigma = mo.sigma();
      if (!(sigma > 1e-9)) throw DegenerateVariance("flat sum distribution at n = " +
                                                    std::to_string(n));
      std::vector<Real> u_grid;
      for (int k = -50; k <= 50; ++k)
        u_grid.push_back(mo.mean + static_cast<Real>(k) * sigma / 10.0);
      DensityTable dt =
          smoothed_density(model.sys, R, observable, q0, n, cfg.verify.T0, u_grid, threads);
      write_table(out / "density.csv", dt);
      j["table"] = to_json(dt);
      msg = std::to_string(dt.u.size()) + " density points";
    }
    write_doc(out / "dist.json", j);
    if (std::abs(phi0 - 1.0) > 1e-12)
      fail("distribution", "phi_n(0) strays from 1");
    else
      pass("distribution", msg + " at n = " + std::to_string(n));
  }

  void st_verify() {
    const RpfData& R = rpf();
    // Statistic families follow the detected arithmetic: a lattice observable
    // gets the lattice/Edgeworth statistics, a non-lattice one the smoothed
    // local-limit statistic; the CLT distance applies to both.
    std::optional<Real> span = value_gcd_guess(model.sys, R, observable);
    std::vector<Real> t0s;
    if (!span) t0s.push_back(cfg.verify.T0);
    const ReducibleFixture* fx = model.reducible ? &*model.reducible : nullptr;
    LltReport vr =
        llt_report(model.sys, R, observable, q0, cfg.verify.n_grid, t0s, fx, cfg.model, threads);
    Json j = to_json(vr);
    j["span_guess"] = span ? Json(*span) : Json(nullptr);
    write_doc(out / "verify.json", j);
    write_table(out / "verify.csv", vr);

    if (vr.trends.empty()) {
      fail("verify", "no statistic had enough finite cells for a trend");
      return;
    }
    bool all_ok = true;
    for (const auto& [name, ok] : vr.trends)
      if (!ok) {
        all_ok = false;
        fail("verify", "trend '" + name + "' does not hold");
      }
    if (all_ok)
      pass("verify", std::to_string(vr.trends.size()) + " trend(s) hold");
  }

  void st_sample() {
    const RpfData& R = rpf();
    ForwardKernels k = forward_kernels(model.sys, R, cfg.sample.n);
    SampleSet ss =
        sample_paths(model.sys, k, cfg.sample.n, cfg.sample.N, cfg.sample.seed, 0, threads);
    {
      std::ostringstream os;
      write_paths(os, ss);
      write_text(out / "paths.txt", os.str());
    }
    long n_terms = cfg.sample.n - observable.max_depth() + 1;
    Moments mo = sum_moments(model.sys, R, observable, q0, n_terms);
    std::vector<Real> t_probe{0.5, 1.0};
    std::vector<Complex> phi_exact;
    for (Real t : t_probe)
      phi_exact.push_back(char_fn(model.sys, R, observable, q0, n_terms, t));
    std::optional<PmfTable> pmf;
    if (detail::integer_valued(model.sys, observable, n_terms))
      pmf = lattice_pmf(model.sys, R, observable, q0, n_terms, threads);
    EmpiricalReport er = empirical_check(model.sys, ss, observable, mo, t_probe, phi_exact,
                                         pmf ? &*pmf : nullptr);
    write_doc(out / "empirical.json", to_json(er));
    if (!er.ok()) {
      std::string msg = "outside the sampling band:";
      for (const std::string& f : er.flags) msg += " " + f;
      fail("sample", msg);
    } else {
      pass("sample", std::to_string(er.count) + " paths agree within the sampling band");
    }
  }
};

Json version_block() {
  return Json{{"seqsft", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)}};
}

// Matrix-cocycle documents run a reduced pipeline: the only meaningful stage
// is validation of the rank-one collapse, written as cocycle.json + decay.csv.
RunReport run_cocycle(const RunConfig& cfg, const fs::path& out) {
  for (const std::string& s : cfg.stages)
    if (s != "validate")
      throw ConfigError("stage '" + s + "' does not apply to a matrix cocycle");

  auto t_start = Clock::now();
  Json doc = load_json_file(name_payload(cfg.model));
  std::vector<MatrixR> b;
  try {
    const Json& ms = doc.at("matrices");
    if (!ms.is_array() || ms.empty())
      throw ConfigError("matrices must be a nonempty array");
    for (const Json& one : ms) b.push_back(matrix_from_json(one, "cocycle matrix"));
  } catch (const Json::exception& e) {
    throw ConfigError("cocycle file: " + std::string(e.what()));
  }
  CocycleData c;
  try {
    c = positive_matrix_cocycle(b);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("cocycle file: " + std::string(e.what()));
  }
  long horizon = std::min<long>(c.size(), 30);
  std::vector<Real> decay = cocycle_decay(c, horizon);

  Json j;
  j["size"] = c.size();
  j["identity_gap"] = c.identity_gap;
  j["lambda"] = c.lambda;
  j["decay"] = decay;
  write_doc(out / "cocycle.json", j);
  std::string csv = "n,distance\n";
  for (std::size_t i = 0; i < decay.size(); ++i)
    csv += std::to_string(i + 1) + "," + detail::num(decay[i]) + "\n";
  write_text(out / "decay.csv", csv);

  RunReport rep;
  if (c.identity_gap > 1e-8)
    rep.lines.push_back("[FAIL] validate: norm identity gap " + detail::num(c.identity_gap));
  else if (decay.size() >= 2 && !(decay.back() < decay.front()))
    rep.lines.push_back("[FAIL] validate: no contraction toward the rank-one limit");
  else
    rep.lines.push_back("[ ok ] validate: rank-one collapse over " +
                        std::to_string(horizon) + " steps");
  if (!rep.lines.empty() && rep.lines.front().rfind("[FAIL]", 0) == 0) rep.exit_code = 1;

  Json manifest;
  manifest["config_hash"] = hex64(cfg.config_hash);
  manifest["threads"] = 0;
  manifest["stages"] = Json::array({"validate"});
  manifest["seeds"] = Json::object();
  manifest["versions"] = version_block();
  manifest["timings_ms"] = Json{
      {"validate", std::chrono::duration<double, std::milli>(Clock::now() - t_start).count()}};
  manifest["exit_code"] = rep.exit_code;
  write_doc(out / "manifest.json", manifest);
  return rep;
}

}  // namespace

RunReport run_pipeline(const Json& doc, const std::string& out_dir, int threads) {
  RunConfig cfg = config_from_json(doc);
  fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir);

  if (name_is(cfg.model, "cocycle:")) return run_cocycle(cfg, out);

  if (!(cfg.scan.delta > 0.0 && cfg.scan.delta < cfg.scan.T))
    throw ConfigError("scan needs 0 < delta < T");
  if (cfg.scan.n_max < 8 || cfg.scan.n_max > cfg.window)
    throw ConfigError("scan.n_max must lie in [8, window]");

  StageMachine sm(cfg, out, threads);
  std::set<std::string> want(cfg.stages.begin(), cfg.stages.end());
  Json timings = Json::object();
  Json executed = Json::array();

  for (const char* name : kStageOrder) {
    if (!want.count(name)) continue;
    auto t0 = Clock::now();
    try {
      std::string s(name);
      if (s == "validate") sm.st_validate();
      else if (s == "rpf") sm.st_rpf();
      else if (s == "decompose") sm.st_decompose();
      else if (s == "scan") sm.st_scan();
      else if (s == "distribution") sm.st_distribution();
      else if (s == "verify") sm.st_verify();
      else if (s == "sample") sm.st_sample();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + std::string(e.what()));
    } catch (const Error& e) {
      throw Error(std::string(name) + ": " + std::string(e.what()));
    }
    timings[name] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    executed.push_back(name);
  }

  Json manifest;
  manifest["config_hash"] = hex64(cfg.config_hash);
  manifest["threads"] = threads;
  manifest["stages"] = std::move(executed);
  manifest["seeds"] = Json{{"sample", cfg.sample.seed},
                           {"rpf_probe", kRpfProbeSeed},
                           {"scan_probe", kScanProbeSeed},
                           {"mc_fixture", kMcFixtureSeed}};
  manifest["versions"] = version_block();
  manifest["timings_ms"] = std::move(timings);
  manifest["exit_code"] = sm.rep.exit_code;
  write_doc(out / "manifest.json", manifest);
  return sm.rep;
}

}  // namespace seqsft::cli
