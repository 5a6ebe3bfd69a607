// seqsft: serialization — system specs, function literals, and run
// configurations read from JSON; solver data and report types written as
// JSON documents and flat CSV tables. Symbol strings use one character per
// symbol, hex digits 0-9a-f, matching the alphabet cap of 16.
#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "seqsft/models.hpp"
#include "seqsft/sampler.hpp"
#include "seqsft/spectral.hpp"
#include "seqsft/verify.hpp"

namespace seqsft {

using Json = nlohmann::json;

namespace detail {

inline char symbol_char(int s) {
  return s < 10 ? static_cast<char>('0' + s) : static_cast<char>('a' + s - 10);
}

inline int char_symbol(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  throw ConfigError(std::string("bad symbol character '") + c + "'");
}

// Shortest representation that parses back to the same double; "nan" for
// gate-skipped cells. Keeps re-runs byte-stable without precision noise.
inline std::string num(Real v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

// FNV-1a, the 64-bit variant; used for config fingerprints in manifests.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// {"window":[0,N], "alphabet_sizes":[...], "adjacency":[[[0,1],...],...],
//  "extension":"periodic:1"|"frozen"}; adjacency matrices row-major, 0/1.
inline SystemSpec system_spec_from_json(const Json& j) {
  try {
    SystemSpec spec;
    const Json& w = j.at("window");
    if (!w.is_array() || w.size() != 2 || w[0].get<long>() != 0)
      throw ConfigError("window must be [0, N]");
    spec.window_end = w[1].get<long>();
    for (const Json& d : j.at("alphabet_sizes")) spec.alphabet_sizes.push_back(d.get<int>());
    for (const Json& m : j.at("adjacency")) {
      if (!m.is_array() || m.empty()) throw ConfigError("adjacency entry must be a matrix");
      AdjacencyMatrix A(static_cast<Eigen::Index>(m.size()),
                        static_cast<Eigen::Index>(m[0].size()));
      for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const Json& row = m[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != A.cols())
          throw ConfigError("ragged adjacency matrix");
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
          std::int64_t e = row[static_cast<std::size_t>(c)].get<std::int64_t>();
          if (e != 0 && e != 1) throw ConfigError("adjacency entries must be 0 or 1");
          A(r, c) = e;
        }
      }
      spec.adjacency.push_back(std::move(A));
    }
    std::string ext = j.at("extension").get<std::string>();
    if (ext == "frozen")
      spec.extension = ExtensionRule::frozen();
    else if (ext.rfind("periodic:", 0) == 0)
      spec.extension = ExtensionRule::periodic(std::stol(ext.substr(9)));
    else
      throw ConfigError("extension must be 'periodic:p' or 'frozen'");
    if (j.contains("d_max")) spec.d_max = j["d_max"].get<int>();
    if (j.contains("max_word_length")) spec.max_word_length = j["max_word_length"].get<int>();
    return spec;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("system spec: ") + e.what());
  }
}

// Function literal: a named generator ("first_symbol", "indicator:<word>",
// "linear:<c0,c1,...>") or an explicit value table keyed by symbol strings
// ({"01":0.3, ...}); table entries omitted for admissible words default to
// zero, inadmissible keys are rejected.
inline FnSeq fnseq_from_json(const ValidatedSystem& sys, const Json& j) {
  FnSeq out;
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "first_symbol") {
      FnR f = make_constant<Real>(sys, 0, 1, 0.0);
      for (std::int64_t i = 0; i < f.words->count(); ++i)
        f.values[i] = static_cast<Real>(f.words->word(i)[0]);
      out.entries.push_back(std::move(f));
      return out;
    }
    if (s.rfind("indicator:", 0) == 0) {
      Word w;
      w.base = 0;
      for (char c : s.substr(10))
        w.symbols.push_back(static_cast<std::uint8_t>(detail::char_symbol(c)));
      if (w.symbols.empty()) throw ConfigError("indicator needs a word");
      out.entries.push_back(indicator(sys, w));
      return out;
    }
    if (s.rfind("linear:", 0) == 0) {
      std::vector<Real> coeffs;
      std::istringstream is(s.substr(7));
      for (std::string tok; std::getline(is, tok, ',');) coeffs.push_back(std::stod(tok));
      return linear_statistic(sys, coeffs);
    }
    throw ConfigError("unknown function literal '" + s + "'");
  }
  if (j.is_object()) {
    if (j.empty()) throw ConfigError("empty value table");
    int depth = static_cast<int>(j.begin().key().size());
    FnR f = make_constant<Real>(sys, 0, depth, 0.0);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (static_cast<int>(key.size()) != depth)
        throw ConfigError("value table keys must share one length");
      std::vector<std::uint8_t> w;
      for (char c : key) w.push_back(static_cast<std::uint8_t>(detail::char_symbol(c)));
      auto r = f.words->find(w.data());
      if (!r) throw ConfigError("value table key '" + key + "' is not an admissible word");
      f.values[*r] = it.value().get<Real>();
    }
    out.entries.push_back(std::move(f));
    return out;
  }
  throw ConfigError("function literal must be a string or a value table");
}

// Pipeline configuration with defaults matching the documented schema.
struct ScanConfig {
  Real delta = 0.1;
  Real T = 14.0;
  long n_max = 256;
  Real grid = 0.005;
};

struct VerifyConfig {
  std::vector<long> n_grid = {16, 64, 256};
  Real T0 = 8.0;
};

struct SampleConfig {
  long n = 64;
  std::int64_t N = 100000;
  std::uint64_t seed = 7;
};

struct RunConfig {
  std::string model;
  Json observable;  // resolved against the model's system later; null = default
  Real alpha = 1.0;
  long window = 64;
  std::vector<std::string> stages;
  ScanConfig scan;
  VerifyConfig verify;
  SampleConfig sample;
  std::uint64_t config_hash = 0;
};

inline RunConfig config_from_json(const Json& j) {
  try {
    RunConfig c;
    c.model = j.at("model").get<std::string>();
    if (j.contains("observable")) c.observable = j["observable"];
    if (j.contains("alpha")) c.alpha = j["alpha"].get<Real>();
    if (j.contains("window")) c.window = j["window"].get<long>();
    if (c.window < 2) throw ConfigError("window must be at least 2");
    if (!(c.alpha > 0.0) || c.alpha > 1.0) throw ConfigError("alpha must lie in (0, 1]");
    if (j.contains("stages"))
      for (const Json& s : j["stages"]) c.stages.push_back(s.get<std::string>());
    else
      c.stages = {"validate", "rpf"};
    for (const std::string& s : c.stages)
      if (s != "validate" && s != "rpf" && s != "decompose" && s != "scan" &&
          s != "distribution" && s != "verify" && s != "sample")
        throw ConfigError("unknown stage '" + s + "'");
    if (j.contains("scan")) {
      const Json& s = j["scan"];
      if (s.contains("delta")) c.scan.delta = s["delta"].get<Real>();
      if (s.contains("T")) c.scan.T = s["T"].get<Real>();
      if (s.contains("n_max")) c.scan.n_max = s["n_max"].get<long>();
      if (s.contains("grid")) c.scan.grid = s["grid"].get<Real>();
    }
    if (j.contains("verify")) {
      const Json& v = j["verify"];
      if (v.contains("n_grid")) {
        c.verify.n_grid.clear();
        for (const Json& n : v["n_grid"]) c.verify.n_grid.push_back(n.get<long>());
      }
      if (v.contains("T0")) c.verify.T0 = v["T0"].get<Real>();
    }
    if (j.contains("sample")) {
      const Json& s = j["sample"];
      if (s.contains("n")) c.sample.n = s["n"].get<long>();
      if (s.contains("N")) c.sample.N = s["N"].get<std::int64_t>();
      if (s.contains("seed")) c.sample.seed = s["seed"].get<std::uint64_t>();
    }
    c.config_hash = fnv1a64(j.dump());
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// Dotted-path override (e.g. "scan.n_max=128"); the value is parsed as JSON
// when possible and kept as a string otherwise.
inline void apply_override(Json& j, const std::string& key, const std::string& value) {
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::exception&) {
    parsed = value;
  }
  Json* node = &j;
  std::istringstream is(key);
  std::string part, next;
  if (!std::getline(is, part, '.')) throw ConfigError("empty override key");
  while (std::getline(is, next, '.')) {
    node = &(*node)[part];
    part = next;
  }
  (*node)[part] = parsed;
}

inline Json to_json(const Moments& m) {
  return Json{{"mean", m.mean}, {"variance", m.variance}, {"third_central", m.third_central}};
}

// Solver state needed for reproducibility audits: the eigenvalue sequence,
// the eigenfunction and eigenfunctional tables, and the convergence
// diagnostics that certify them.
inline Json to_json(const RpfData& rpf) {
  Json h = Json::array(), nu = Json::array();
  for (const FnR& f : rpf.h) h.push_back(std::vector<Real>(f.values.begin(), f.values.end()));
  for (const FunctionalR& f : rpf.nu)
    nu.push_back(std::vector<Real>(f.weights.begin(), f.weights.end()));
  return Json{{"window_end", rpf.window_end},
              {"working_depth", rpf.working_depth},
              {"burn_in", rpf.burn_in},
              {"contraction", rpf.contraction},
              {"tail_error", rpf.tail_error},
              {"lambda", rpf.lambda},
              {"h", std::move(h)},
              {"nu", std::move(nu)}};
}

inline Json to_json(const DecompResult& d) {
  std::vector<Real> partial;
  Real acc = 0.0;
  for (Real v : d.var_A) partial.push_back(acc += v);
  return Json{{"identity_residual", d.identity_residual},
              {"martingale_residual", d.martingale_residual},
              {"var_A", d.var_A},
              {"var_A_partial", std::move(partial)},
              {"sup_star_A", d.sup_star_A},
              {"sup_star_B", d.sup_star_B}};
}

inline const char* to_string(VarianceClass c) {
  switch (c) {
    case VarianceClass::Growing: return "Growing";
    case VarianceClass::Bounded: return "Bounded";
    default: return "Indeterminate";
  }
}

inline const char* to_string(LatticeClass c) {
  switch (c) {
    case LatticeClass::IrreducibleNonlattice: return "IrreducibleNonlattice";
    case LatticeClass::Lattice: return "Lattice";
    case LatticeClass::VarianceBounded: return "VarianceBounded";
    default: return "Indeterminate";
  }
}

inline Json to_json(const VarianceEvidence& ev) {
  return Json{{"verdict", to_string(ev.verdict)}, {"n_grid", ev.n_grid},
              {"sigma", ev.sigma},               {"var_A_partial", ev.var_A_partial},
              {"slope", ev.slope},               {"r_squared", ev.r_squared},
              {"tail_converges", ev.tail_converges}};
}

inline Json to_json(const LatticeReport& rep) {
  Json j{{"classification", to_string(rep.classification)},
         {"n_max", rep.n_max},
         {"resonant_t", rep.resonant_t},
         {"transient_t", rep.transient_t},
         {"threshold", rep.threshold},
         {"grid_spacing", rep.grid_spacing},
         {"max_offres_norm", rep.max_offres_norm},
         {"variance", to_json(rep.variance)}};
  j["span_a"] = rep.span_a ? Json(*rep.span_a) : Json(nullptr);
  return j;
}

inline Json to_json(const DensityTable& d) {
  return Json{{"n", d.n}, {"T0", d.T0}, {"step", d.step},
              {"points", static_cast<long>(d.u.size())}};
}

inline Json to_json(const PmfTable& p) {
  return Json{{"n", p.n},
              {"u_min", p.u_min},
              {"atoms", static_cast<long>(p.mass.size())},
              {"mass_sum", p.mass_sum},
              {"clip_residual", p.clip_residual}};
}

inline Json to_json(const LltReport& rep) {
  Json nl = Json::object();
  for (std::size_t i = 0; i < rep.t0.size(); ++i)
    nl[detail::num(rep.t0[i])] = rep.nonlattice[i];
  Json trends = Json::object();
  for (const auto& [name, verdict] : rep.trends) trends[name] = verdict;
  return Json{{"model", rep.model},     {"n_grid", rep.n_grid},
              {"sigma", rep.sigma},     {"clt", rep.clt},
              {"nonlattice", std::move(nl)}, {"lattice", rep.lattice},
              {"edgeworth", rep.edgeworth},  {"reducible", rep.reducible},
              {"trends", std::move(trends)}};
}

inline Json to_json(const EmpiricalReport& rep) {
  Json phi_emp = Json::array(), phi_exact = Json::array();
  for (const Complex& z : rep.phi_emp) phi_emp.push_back({z.real(), z.imag()});
  for (const Complex& z : rep.phi_exact) phi_exact.push_back({z.real(), z.imag()});
  return Json{{"count", rep.count},
              {"n_terms", rep.n_terms},
              {"mean_emp", rep.mean_emp},
              {"mean_exact", rep.mean_exact},
              {"mean_band", rep.mean_band},
              {"var_emp", rep.var_emp},
              {"var_exact", rep.var_exact},
              {"var_band", rep.var_band},
              {"t", rep.t},
              {"phi_emp", std::move(phi_emp)},
              {"phi_exact", std::move(phi_exact)},
              {"phi_band", rep.phi_band},
              {"pmf_u", rep.pmf_u},
              {"pmf_emp", rep.pmf_emp},
              {"pmf_exact", rep.pmf_exact},
              {"pmf_band", rep.pmf_band},
              {"flags", rep.flags}};
}

// Flat CSV writers; shortest round-trip numbers keep re-runs byte-stable.

inline void write_csv(std::ostream& os, const NormCurve& c) {
  os << "t,n,rho,lower_bound\n";
  for (std::size_t ni = 0; ni < c.n_grid.size(); ++ni)
    for (std::size_t ti = 0; ti < c.t_grid.size(); ++ti)
      os << detail::num(c.t_grid[ti]) << ',' << c.n_grid[ni] << ','
         << detail::num(c.rho(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(ti)))
         << ','
         << detail::num(c.lower(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(ti)))
         << '\n';
}

inline void write_csv(std::ostream& os, const CharFnCurve& c) {
  os << "t,re_phi,im_phi\n";
  for (std::size_t i = 0; i < c.t.size(); ++i)
    os << detail::num(c.t[i]) << ',' << detail::num(c.phi[i].real()) << ','
       << detail::num(c.phi[i].imag()) << '\n';
}

inline void write_csv(std::ostream& os, const DensityTable& d) {
  os << "u,value\n";
  for (std::size_t i = 0; i < d.u.size(); ++i)
    os << detail::num(d.u[i]) << ',' << detail::num(d.value[static_cast<Eigen::Index>(i)])
       << '\n';
}

inline void write_csv(std::ostream& os, const PmfTable& p) {
  os << "u,value\n";
  for (Eigen::Index i = 0; i < p.mass.size(); ++i)
    os << p.u_min + i << ',' << detail::num(p.mass[i]) << '\n';
}

inline void write_csv(std::ostream& os, const LltReport& rep) {
  os << "model,n,sigma,metric,value\n";
  auto row = [&](std::size_t i, const std::string& metric, Real v) {
    os << rep.model << ',' << rep.n_grid[i] << ',' << detail::num(rep.sigma[i]) << ','
       << metric << ',' << detail::num(v) << '\n';
  };
  for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
    if (i < rep.clt.size()) row(i, "clt", rep.clt[i]);
    for (std::size_t k = 0; k < rep.t0.size(); ++k)
      row(i, "nonlattice_T0_" + detail::num(rep.t0[k]), rep.nonlattice[k][i]);
    if (i < rep.lattice.size()) row(i, "lattice", rep.lattice[i]);
    if (i < rep.edgeworth.size()) row(i, "edgeworth", rep.edgeworth[i]);
    if (i < rep.reducible.size()) row(i, "reducible", rep.reducible[i]);
  }
}

// One path per line, one hex character per symbol.
inline void write_paths(std::ostream& os, const SampleSet& s) {
  for (std::int64_t i = 0; i < s.count; ++i) {
    const std::uint8_t* p = s.path(i);
    for (long k = 0; k < s.n; ++k) os << detail::symbol_char(p[k]);
    os << '\n';
  }
}

}  // namespace seqsft
