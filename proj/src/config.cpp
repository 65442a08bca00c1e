#include "chainlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "chainlab/contractible.hpp"
#include "chainlab/errors.hpp"

namespace chainlab {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Rejects keys outside `allowed` for the object at `path`.
void strict(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(path + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

Interval read_interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ConfigError(path + ": expected [left, right] integers");
  return {j[0].get<long>(), j[1].get<long>()};
}

json interval_json(const Interval& w) { return {w.left, w.right}; }

ModelKind kind_from_string(const std::string& s) {
  const std::string l = lower(s);
  if (l == "kg") return ModelKind::KG;
  if (l == "dnls") return ModelKind::DNLS;
  throw ConfigError("model.kind: unknown model '" + s + "'");
}

DensityKind density_from_string(const std::string& s) {
  const std::string l = lower(s);
  if (l == "uniform") return DensityKind::Uniform;
  if (l == "smooth-bump") return DensityKind::SmoothBump;
  throw ConfigError("model.disorder.density: unknown density '" + s + "'");
}

}  // namespace

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

OutputFormat format_from_string(const std::string& s) {
  const std::string l = lower(s);
  if (l == "csv") return OutputFormat::Csv;
  if (l == "json") return OutputFormat::Json;
  throw ConfigError("outputs.format: expected csv or json, got '" + s + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("seeds: '" + s + "' is not a comma-separated list of unsigned integers");
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("seeds: '" + tok + "' does not fit in 64 bits");
    }
  }
  if (out.empty()) throw ConfigError("seeds: empty list");
  return out;
}

RunConfig parse_config(const json& j) {
  strict(j, "config",
         {"model", "initial", "integrator", "horizon", "sampling", "ensemble_seeds", "outputs",
          "workers", "expansion", "resonance", "mc", "schedule"});
  RunConfig c;

  if (j.contains("model")) {
    const json& m = j["model"];
    strict(m, "model", {"kind", "g", "disorder"});
    std::string kind = to_string(c.model.kind);
    read(m, "kind", "model", kind);
    c.model.kind = kind_from_string(kind);
    read(m, "g", "model", c.model.g);
    if (m.contains("disorder")) {
      const json& d = m["disorder"];
      strict(d, "model.disorder", {"omega_min_sq", "omega_max_sq", "density", "seed"});
      read(d, "omega_min_sq", "model.disorder", c.model.disorder.omega_min_sq);
      read(d, "omega_max_sq", "model.disorder", c.model.disorder.omega_max_sq);
      std::string density = to_string(c.model.disorder.density);
      read(d, "density", "model.disorder", density);
      c.model.disorder.density = density_from_string(density);
      read(d, "seed", "model.disorder", c.model.disorder.seed);
    }
  }

  if (j.contains("initial")) {
    const json& i = j["initial"];
    strict(i, "initial", {"mode", "support", "E0", "q", "p", "psi_re", "psi_im"});
    std::string mode = "momentum-kick";
    read(i, "mode", "initial", mode);
    if (lower(mode) == "custom") {
      c.initial.mode = InitialCondition::Mode::Custom;
    } else if (lower(mode) != "momentum-kick") {
      throw ConfigError("initial.mode: expected momentum-kick or custom, got '" + mode + "'");
    }
    if (i.contains("support")) c.initial.support = read_interval(i["support"], "initial.support");
    read(i, "E0", "initial", c.initial.E0);
    auto vec = [&](const char* key) -> std::optional<Eigen::VectorXd> {
      if (!i.contains(key)) return std::nullopt;
      std::vector<double> v;
      read(i, key, "initial", v);
      return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
    };
    c.initial.custom_q = vec("q");
    c.initial.custom_p = vec("p");
    const auto re = vec("psi_re"), im = vec("psi_im");
    if (re || im) {
      if (!re || !im || re->size() != im->size())
        throw ConfigError("initial.psi_re and initial.psi_im must be given together");
      Eigen::VectorXcd psi(re->size());
      for (long k = 0; k < psi.size(); ++k) psi[k] = cplx((*re)[k], (*im)[k]);
      c.initial.custom_psi = psi;
    }
  }

  c.integrator = IntegratorSpec::defaults(c.model.kind);
  if (j.contains("integrator")) {
    const json& s = j["integrator"];
    strict(s, "integrator",
           {"scheme", "step", "energy_drift_tol", "growth_margin", "growth_trigger", "growth_chunk",
            "midpoint_tol", "midpoint_max_iter"});
    std::string scheme = to_string(c.integrator.scheme);
    read(s, "scheme", "integrator", scheme);
    c.integrator.scheme = scheme_from_string(scheme);
    read(s, "step", "integrator", c.integrator.step);
    read(s, "energy_drift_tol", "integrator", c.integrator.energy_drift_tol);
    read(s, "growth_margin", "integrator", c.integrator.growth_margin);
    read(s, "growth_trigger", "integrator", c.integrator.growth_trigger);
    read(s, "growth_chunk", "integrator", c.integrator.growth_chunk);
    read(s, "midpoint_tol", "integrator", c.integrator.midpoint_tol);
    read(s, "midpoint_max_iter", "integrator", c.integrator.midpoint_max_iter);
  }

  read(j, "horizon", "config", c.horizon);
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    strict(s, "sampling", {"kind", "dt", "ratio"});
    std::string kind = "geometric";
    read(s, "kind", "sampling", kind);
    if (lower(kind) == "uniform") {
      c.sampling.kind = SamplingGrid::Kind::Uniform;
    } else if (lower(kind) != "geometric") {
      throw ConfigError("sampling.kind: expected uniform or geometric, got '" + kind + "'");
    }
    read(s, "dt", "sampling", c.sampling.dt);
    read(s, "ratio", "sampling", c.sampling.ratio);
  }
  read(j, "ensemble_seeds", "config", c.ensemble_seeds);
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    strict(o, "outputs", {"dir", "format"});
    read(o, "dir", "outputs", c.out_dir);
    std::string fmt = to_string(c.format);
    read(o, "format", "outputs", fmt);
    c.format = format_from_string(fmt);
  }
  read(j, "workers", "config", c.workers);

  if (j.contains("expansion")) {
    const json& e = j["expansion"];
    strict(e, "expansion", {"x", "n", "explicit_check"});
    read(e, "x", "expansion", c.expansion.x);
    read(e, "n", "expansion", c.expansion.n);
    read(e, "explicit_check", "expansion", c.expansion.explicit_check);
  }
  if (j.contains("resonance")) {
    const json& r = j["resonance"];
    strict(r, "resonance", {"n", "delta", "window"});
    read(r, "n", "resonance", c.resonance.n);
    read(r, "delta", "resonance", c.resonance.delta);
    if (r.contains("window")) c.resonance.window = read_interval(r["window"], "resonance.window");
  }
  if (j.contains("mc")) {
    const json& m = j["mc"];
    strict(m, "mc", {"pattern", "delta_grid", "samples", "tail"});
    if (m.contains("pattern")) {
      const json& p = m["pattern"];
      strict(p, "mc.pattern", {"sites", "signs"});
      std::vector<long> sites;
      std::vector<int> signs;
      read(p, "sites", "mc.pattern", sites);
      read(p, "signs", "mc.pattern", signs);
      if (sites.empty() || sites.size() != signs.size())
        throw ConfigError("mc.pattern: sites and signs must be nonempty and of equal length");
      if (sites.size() > static_cast<size_t>(kMaxDegree))
        throw ConfigError("mc.pattern: too many factors");
      std::vector<Factor> f;
      for (size_t k = 0; k < sites.size(); ++k) {
        if (signs[k] != 1 && signs[k] != -1) throw ConfigError("mc.pattern.signs: entries must be +1 or -1");
        if (std::abs(sites[k]) > kMaxAbsSite) throw ConfigError("mc.pattern.sites: site out of range");
        f.push_back({sites[k], signs[k]});
      }
      c.mc.pattern = Monomial(std::span<const Factor>(f));
    }
    read(m, "delta_grid", "mc", c.mc.delta_grid);
    read(m, "samples", "mc", c.mc.samples);
    if (m.contains("tail")) {
      const json& t = m["tail"];
      strict(t, "mc.tail", {"n", "delta", "lengths"});
      TailConfig tc;
      read(t, "n", "mc.tail", tc.n);
      read(t, "delta", "mc.tail", tc.delta);
      read(t, "lengths", "mc.tail", tc.lengths);
      c.mc.tail = tc;
    }
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    strict(s, "schedule", {"eps", "t", "c1"});
    read(s, "eps", "schedule", c.schedule.eps);
    read(s, "t", "schedule", c.schedule.t);
    read(s, "c1", "schedule", c.schedule.c1);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  model.validate();
  integrator.validate(model.kind);
  sampling.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
  if (!(initial.E0 > 0.0)) throw ConfigError("initial.E0 must be > 0");
  if (!initial.support.contains(0)) throw ConfigError("initial.support must contain site 0");
  if (ensemble_seeds.empty()) throw ConfigError("ensemble_seeds must not be empty");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (out_dir.empty()) throw ConfigError("outputs.dir must not be empty");
  if (expansion.x.empty()) throw ConfigError("expansion.x must not be empty");
  if (expansion.n < 1 || expansion.n > 6) throw ConfigError("expansion.n must be in 1..6");
  if (resonance.n < 1 || resonance.n > kMaxContractibleOrder)
    throw ConfigError("resonance.n must be in 1.." + std::to_string(kMaxContractibleOrder));
  if (!(resonance.delta >= 0.0)) throw ConfigError("resonance.delta must be >= 0");
  if (resonance.window.empty()) throw ConfigError("resonance.window must be nonempty");
  if (in_S(mc.pattern)) throw ConfigError("mc.pattern lies in S (its denominator vanishes)");
  if (mc.samples < 10000) throw ConfigError("mc.samples must be >= 10000");
  if (mc.delta_grid.empty()) throw ConfigError("mc.delta_grid must not be empty");
  for (double d : mc.delta_grid)
    if (!(d > 0.0)) throw ConfigError("mc.delta_grid entries must be > 0");
  if (mc.tail) {
    if (mc.tail->n < 1 || mc.tail->n > kMaxContractibleOrder)
      throw ConfigError("mc.tail.n must be in 1.." + std::to_string(kMaxContractibleOrder));
    if (!(mc.tail->delta >= 0.0)) throw ConfigError("mc.tail.delta must be >= 0");
    for (long l : mc.tail->lengths)
      if (l < 1) throw ConfigError("mc.tail.lengths entries must be >= 1");
  }
  for (double e : schedule.eps)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("schedule.eps entries must be in (0, 1)");
  for (double t : schedule.t)
    if (!(t >= 1.0)) throw ConfigError("schedule.t entries must be >= 1");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c, const std::string& command) {
  const bool all = command.empty();
  const bool dyn = all || command == "simulate";
  json j;
  j["model"] = {{"kind", lower(to_string(c.model.kind))},
                {"g", c.model.g},
                {"disorder",
                 {{"omega_min_sq", c.model.disorder.omega_min_sq},
                  {"omega_max_sq", c.model.disorder.omega_max_sq},
                  {"density", to_string(c.model.disorder.density)},
                  {"seed", c.model.disorder.seed}}}};
  j["ensemble_seeds"] = c.ensemble_seeds;
  j["outputs"] = {{"dir", c.out_dir}, {"format", to_string(c.format)}};
  j["workers"] = c.workers;
  if (dyn) {
    json i = {{"mode", c.initial.mode == InitialCondition::Mode::Custom ? "custom" : "momentum-kick"},
              {"support", interval_json(c.initial.support)},
              {"E0", c.initial.E0}};
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    if (c.initial.custom_q) i["q"] = vec(*c.initial.custom_q);
    if (c.initial.custom_p) i["p"] = vec(*c.initial.custom_p);
    if (c.initial.custom_psi) {
      i["psi_re"] = vec(c.initial.custom_psi->real());
      i["psi_im"] = vec(c.initial.custom_psi->imag());
    }
    j["initial"] = i;
    const IntegratorSpec& s = c.integrator;
    j["integrator"] = {{"scheme", to_string(s.scheme)},
                       {"step", s.step},
                       {"energy_drift_tol", s.energy_drift_tol},
                       {"growth_margin", s.growth_margin},
                       {"growth_trigger", s.growth_trigger},
                       {"growth_chunk", s.growth_chunk},
                       {"midpoint_tol", s.midpoint_tol},
                       {"midpoint_max_iter", s.midpoint_max_iter}};
    j["horizon"] = c.horizon;
    j["sampling"] = {
        {"kind", c.sampling.kind == SamplingGrid::Kind::Uniform ? "uniform" : "geometric"},
        {"dt", c.sampling.dt},
        {"ratio", c.sampling.ratio}};
  }
  if (all || command == "expand")
    j["expansion"] = {{"x", c.expansion.x},
                      {"n", c.expansion.n},
                      {"explicit_check", c.expansion.explicit_check}};
  if (all || command == "resonance")
    j["resonance"] = {{"n", c.resonance.n},
                      {"delta", c.resonance.delta},
                      {"window", interval_json(c.resonance.window)}};
  if (all || command == "mc") {
    std::vector<long> sites;
    std::vector<int> signs;
    for (const Factor& f : c.mc.pattern.factors()) {
      sites.push_back(f.site);
      signs.push_back(f.sign);
    }
    json m = {{"pattern", {{"sites", sites}, {"signs", signs}}},
              {"delta_grid", c.mc.delta_grid},
              {"samples", c.mc.samples}};
    if (c.mc.tail)
      m["tail"] = {{"n", c.mc.tail->n}, {"delta", c.mc.tail->delta}, {"lengths", c.mc.tail->lengths}};
    j["mc"] = m;
  }
  if (all || command == "schedule")
    j["schedule"] = {{"eps", c.schedule.eps}, {"t", c.schedule.t}, {"c1", c.schedule.c1}};
  return j;
}

}  // namespace chainlab
