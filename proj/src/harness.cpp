#include "chainlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chainlab/errors.hpp"
#include "chainlab/expansion.hpp"
#include "chainlab/parallel.hpp"
#include "chainlab/resonance.hpp"
#include "chainlab/schedule.hpp"

namespace chainlab {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Everything a command emits, keyed by file name, so that the same bytes can be
// compared in memory (verify) or written out.
struct Rendered {
  std::map<std::string, std::string> files;
  json summary;
  int exit_code = kExitOk;
};

std::string ext(const RunConfig& c) { return c.format == OutputFormat::Csv ? ".csv" : ".json"; }

json header(const RunConfig& c, const std::string& command) {
  return {{"command", command}, {"config", to_json(c, command)}};
}

ModelSpec seeded(const RunConfig& c, std::uint64_t seed) {
  ModelSpec m = c.model;
  m.disorder.seed = seed;
  return m;
}

CommandOutput emit(const RunConfig& c, Rendered r) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + c.out_dir + "': " + ec.message());
  r.files["summary.json"] = dump(r.summary);
  for (const auto& [name, body] : r.files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
  }
  return {r.exit_code, r.summary};
}

Rendered render_simulate(const RunConfig& c) {
  const auto& seeds = c.ensemble_seeds;
  std::vector<std::optional<TrajectoryRecord>> records(seeds.size());
  std::vector<std::string> errors(seeds.size());
  parallel_for(seeds.size(), c.workers, [&](size_t k) {
    try {
      records[k] = simulate_seed(c, seeds[k]);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  Rendered out;
  out.summary = header(c, "simulate");
  json per = json::array();
  long failed = 0, crossings = 0;
  for (size_t k = 0; k < seeds.size(); ++k) {
    SeedSummary s;
    if (records[k]) {
      s = summarize(*records[k], seeds[k]);
      std::ostringstream os;
      if (c.format == OutputFormat::Csv)
        write_csv(*records[k], os);
      else
        os << dump(to_json(*records[k]));
      out.files["seed_" + std::to_string(seeds[k]) + ext(c)] = os.str();
      crossings += s.first_threshold_crossing.has_value();
    } else {
      s.seed = seeds[k];
      s.error = errors[k];
      ++failed;
    }
    per.push_back(to_json(s));
  }
  out.summary["seeds"] = per;
  out.summary["failed_seeds"] = failed;
  out.summary["seeds_crossing_threshold"] = crossings;
  out.summary["stopping_levels"] = stopping_levels(c.initial.E0);
  if (!seeds.empty() && failed == static_cast<long>(seeds.size())) out.exit_code = kExitRuntimeFailure;
  return out;
}

Rendered render_expand(const RunConfig& c) {
  const ExpansionConfig& e = c.expansion;
  struct Task {
    std::uint64_t seed;
    long x;
  };
  std::vector<Task> tasks;
  for (auto s : c.ensemble_seeds)
    for (long x : e.x) tasks.push_back({s, x});
  std::vector<json> cases(tasks.size()), polys(tasks.size());
  std::vector<std::vector<std::string>> rows(tasks.size());
  std::vector<char> explicit_ok(tasks.size(), 1);
  parallel_for(tasks.size(), c.workers, [&](size_t k) {
    const ModelSpec m = seeded(c, tasks[k].seed);
    const long x = tasks[k].x;
    const auto d = sample_disorder(m.disorder, {x - e.n - 3, x + e.n + 3});
    const ExpansionResult r = build_recursive(x, e.n, d, m);
    const IdentityResidual res = identity_residual(r, d, m);
    json cs = {{"seed", tasks[k].seed},
               {"x", x},
               {"n", e.n},
               {"u_degrees", {r.u.min_degree(), r.u.max_degree()}},
               {"g_degrees", {r.g.min_degree(), r.g.max_degree()}},
               {"min_abs_delta", r.min_abs_delta},
               {"min_abs_delta_exact", r.min_abs_delta_exact},
               {"identity_residual", res.max_abs},
               {"identity_relative_to_j", res.relative_to_j()},
               {"identity_relative_to_terms", res.relative_to_terms()},
               {"term_count_c", term_count_fit(r).c}};
    json poly = to_json(r);
    poly["identity_residual"] = cs["identity_residual"];
    if (e.explicit_check && m.kind == ModelKind::KG) {
      json ex = json::array();
      for (int i = 1; i <= std::min(e.n + 1, kExplicitMaxOrder); ++i) {
        const ExplicitTerms t = build_explicit(x, i, d, m);
        const Polynomial& f = r.f_terms[i - 1];
        const double df = max_coeff_difference(t.f, f) / f.max_abs_coeff();
        json row = {{"order", i}, {"f_relative_difference", df}};
        bool ok = df < 1e-11;
        if (i <= e.n) {
          const Polynomial& u = r.u_terms[i - 1];
          const double du = max_coeff_difference(t.u, u) / u.max_abs_coeff();
          row["u_relative_difference"] = du;
          ok = ok && du < 1e-11;
        }
        explicit_ok[k] = explicit_ok[k] && ok;
        ex.push_back(row);
      }
      cs["explicit_check"] = ex;
      poly["explicit_check"] = ex;
    }
    for (int i = 1; i <= e.n + 1; ++i) {
      const Polynomial& f = r.f_terms[i - 1];
      const Interval s = f.support();
      std::ostringstream os;
      os << tasks[k].seed << ',' << x << ',' << i << ',' << f.size() << ','
         << (i <= e.n ? r.u_terms[i - 1].size() : 0) << ',' << f.max_degree() << ',' << s.left
         << ',' << s.right << '\n';
      rows[k].push_back(os.str());
    }
    cases[k] = cs;
    polys[k] = poly;
  });
  Rendered out;
  out.summary = header(c, "expand");
  out.summary["cases"] = cases;
  std::string csv = "seed,x,order,f_terms,u_terms,degree,min_site,max_site\n";
  for (size_t k = 0; k < tasks.size(); ++k) {
    out.files["expansion_s" + std::to_string(tasks[k].seed) + "_x" + std::to_string(tasks[k].x) +
              ".json"] = dump(polys[k]);
    for (const auto& row : rows[k]) csv += row;
    if (!explicit_ok[k]) out.exit_code = kExitCheckFailure;
  }
  if (c.format == OutputFormat::Csv) out.files["expansion_terms.csv"] = csv;
  return out;
}

Rendered render_resonance(const RunConfig& c) {
  const ResonanceConfig& rc = c.resonance;
  Rendered out;
  out.summary = header(c, "resonance");
  json per = json::array();
  for (auto seed : c.ensemble_seeds) {
    const auto d = sample_disorder(seeded(c, seed).disorder,
                                   required_disorder_window(rc.window, rc.n));
    const ResonanceReport rep = scan_resonances(rc.window, rc.n, rc.delta, d);
    rep.check_invariants();
    std::ostringstream os;
    if (c.format == OutputFormat::Csv)
      write_csv(os, rep);
    else
      os << dump(to_json(rep));
    out.files["resonance_s" + std::to_string(seed) + ext(c)] = os.str();
    json iv = json::array();
    for (const Interval& i : rep.intervals) iv.push_back({i.left, i.right});
    const long flagged = std::count(rep.resonant.begin(), rep.resonant.end(), 1);
    per.push_back({{"seed", seed}, {"exact", rep.exact}, {"flagged_sites", flagged},
                   {"intervals", iv}});
  }
  out.summary["seeds"] = per;
  return out;
}

Rendered render_mc(const RunConfig& c) {
  const McConfig& mc = c.mc;
  Rendered out;
  out.summary = header(c, "mc");
  out.summary["difference_density_at_zero"] = difference_density_at_zero(c.model.disorder);
  json per = json::array();
  for (auto seed : c.ensemble_seeds) {
    const DisorderSpec spec = seeded(c, seed).disorder;
    const auto r = mc_small_denominator(mc.pattern, mc.delta_grid, mc.samples, spec, c.workers);
    std::ostringstream os;
    if (c.format == OutputFormat::Csv)
      write_csv(os, r);
    else
      os << dump(to_json(r));
    out.files["mc_s" + std::to_string(seed) + ext(c)] = os.str();
    json entry = {{"seed", seed}, {"slope", r.slope}};
    json ratios = json::array();
    for (const auto& p : r.points) ratios.push_back({{"delta", p.delta}, {"ratio", p.ratio}});
    entry["ratios"] = ratios;
    if (mc.tail) {
      const auto t = mc_interval_tail(mc.tail->n, mc.tail->delta, mc.tail->lengths, mc.samples,
                                      spec, c.workers);
      std::ostringstream ts;
      if (c.format == OutputFormat::Csv)
        write_csv(ts, t);
      else
        ts << dump(to_json(t));
      out.files["tail_s" + std::to_string(seed) + ext(c)] = ts.str();
      entry["tail"] = {{"fitted_base", t.fitted_base}, {"fit_r2", t.fit_r2},
                       {"bound_base", t.bound_base}, {"exact", t.exact}};
    }
    per.push_back(entry);
  }
  out.summary["seeds"] = per;
  return out;
}

Rendered render_schedule(const RunConfig& c) {
  const ScheduleConfig& s = c.schedule;
  Rendered out;
  out.summary = header(c, "schedule");
  json rows = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "eps,n,delta,eps_prime,phi,condition_value,condition_satisfied\n";
  for (double eps : s.eps) {
    const ScheduleParams p = schedule(eps);
    const ConditionCheck cc = schedule_condition(p.n, p.delta, s.c1);
    json j = to_json(p);
    j["condition_value"] = cc.value;
    j["condition_satisfied"] = cc.satisfied;
    rows.push_back(j);
    csv << p.eps << ',' << p.n << ',' << p.delta << ',' << p.eps_prime << ',' << p.phi << ','
        << cc.value << ',' << (cc.satisfied ? 1 : 0) << '\n';
  }
  json th = json::array();
  std::ostringstream tcsv;
  tcsv.precision(17);
  tcsv << "t,eps_of_t\n";
  for (double t : s.t) {
    const double e = threshold_eps_of_t(t);
    th.push_back({{"t", t}, {"eps_of_t", e}});
    tcsv << t << ',' << e << '\n';
  }
  out.summary["schedule"] = rows;
  out.summary["threshold"] = th;
  if (c.format == OutputFormat::Csv) {
    out.files["schedule.csv"] = csv.str();
    out.files["threshold.csv"] = tcsv.str();
  } else {
    out.files["schedule.json"] = dump({{"schedule", rows}, {"threshold", th}});
  }
  return out;
}

Rendered render(const std::string& name, const RunConfig& c) {
  if (name == "simulate") return render_simulate(c);
  if (name == "expand") return render_expand(c);
  if (name == "resonance") return render_resonance(c);
  if (name == "mc") return render_mc(c);
  if (name == "schedule") return render_schedule(c);
  throw ConfigError("unknown command '" + name + "'");
}

std::map<std::string, std::string> rendered_bytes(const std::string& name, const RunConfig& c) {
  Rendered r = render(name, c);
  r.files["summary.json"] = dump(r.summary);
  return r.files;
}

// Byte-identity across repeated runs and pool sizes, and the config round trip
// through the emitted summary.
std::vector<CheckVerdict> harness_checks() {
  RunConfig c;
  c.horizon = 20.0;
  c.ensemble_seeds = {1, 2, 3};
  c.resonance.window = {-20, 20};
  c.expansion.x = {0, 1};
  c.expansion.n = 2;
  long mismatches = 0, roundtrip = 0;
  json cmds = json::array();
  for (const std::string cmd : {"simulate", "expand", "resonance", "schedule"}) {
    RunConfig a = c, b = c;
    a.workers = 1;
    b.workers = 4;
    const auto ra = rendered_bytes(cmd, a);
    auto rb = rendered_bytes(cmd, b);
    // The summary records the worker count itself.
    const auto strip = [](std::map<std::string, std::string> f) {
      f.erase("summary.json");
      return f;
    };
    if (strip(ra) != strip(rb)) ++mismatches;
    if (ra != rendered_bytes(cmd, a)) ++mismatches;
    const json emitted = json::parse(ra.at("summary.json"));
    const RunConfig back = parse_config(emitted.at("config"));
    if (rendered_bytes(cmd, back) != ra) ++roundtrip;
    cmds.push_back(cmd);
  }
  return {CheckVerdict{"harness.byte_identical", mismatches == 0, static_cast<double>(mismatches),
                       0.0, {{"commands", cmds}, {"workers", {1, 4}}}},
          CheckVerdict{"harness.config_round_trip", roundtrip == 0, static_cast<double>(roundtrip),
                       0.0, {{"commands", cmds}}}};
}

}  // namespace

TrajectoryRecord simulate_seed(const RunConfig& c, std::uint64_t seed) {
  const ModelSpec m = seeded(c, seed);
  const Interval s = c.initial.support;
  const auto d = sample_disorder(m.disorder, {s.left - kInitialPadding, s.right + kInitialPadding});
  return run(build_initial(c.initial, d, m), d, m, c.integrator, c.horizon, c.sampling);
}

SeedSummary summarize(const TrajectoryRecord& r, std::uint64_t seed) {
  SeedSummary s;
  s.seed = seed;
  s.ok = true;
  s.light_cone = light_cone(r);
  const auto it = std::min_element(r.M.begin(), r.M.end());
  s.min_M = *it;
  s.min_M_t = r.t[it - r.M.begin()];
  for (size_t k = 0; k < r.size(); ++k)
    if (r.t[k] >= 1.0 && r.M[k] <= r.eps_threshold[k]) {
      if (!s.first_threshold_crossing) s.first_threshold_crossing = r.t[k];
      s.last_threshold_crossing = r.t[k];
    }
  s.threshold_margin = threshold_margin(r.t, r.M);
  s.stopping_constant = stopping_constant(r.t, r.M, r.E0);
  s.max_energy_drift = r.max_energy_drift;
  s.steps = r.steps;
  s.growth_events = r.growth_events;
  for (double eps : stopping_levels(r.E0)) s.stopping.push_back(stopping_times(r, eps, 2.0 * eps));
  return s;
}

json to_json(const SeedSummary& s) {
  json j = {{"seed", s.seed}, {"status", s.ok ? "ok" : "failed"}};
  if (!s.ok) {
    j["error"] = s.error;
    return j;
  }
  json st = json::array();
  for (const auto& t : s.stopping)
    st.push_back({{"eps", t.eps}, {"eps_prime", t.eps_prime}, {"t_eps", num(t.t_eps)},
                  {"t_eps_epsprime", num(t.t_eps_epsprime)}});
  j["light_cone_sup"] = s.light_cone.sup;
  j["light_cone_argmax_t"] = s.light_cone.argmax_t;
  j["min_M"] = s.min_M;
  j["min_M_t"] = s.min_M_t;
  j["first_threshold_crossing"] =
      s.first_threshold_crossing ? json(*s.first_threshold_crossing) : json();
  j["last_threshold_crossing"] =
      s.last_threshold_crossing ? json(*s.last_threshold_crossing) : json();
  j["threshold_margin"] = num(s.threshold_margin);
  j["stopping_constant"] = num(s.stopping_constant);
  j["max_energy_drift"] = s.max_energy_drift;
  j["steps"] = s.steps;
  j["growth_events"] = s.growth_events;
  j["stopping_times"] = st;
  return j;
}

CommandOutput cmd_simulate(const RunConfig& c) { return emit(c, render_simulate(c)); }
CommandOutput cmd_expand(const RunConfig& c) { return emit(c, render_expand(c)); }
CommandOutput cmd_resonance(const RunConfig& c) { return emit(c, render_resonance(c)); }
CommandOutput cmd_mc(const RunConfig& c) { return emit(c, render_mc(c)); }
CommandOutput cmd_schedule(const RunConfig& c) { return emit(c, render_schedule(c)); }

CommandOutput cmd_verify(const RunConfig& c, const VerifyOptions& opts) {
  std::vector<CheckVerdict> verdicts = run_verify_suite(opts);
  for (auto& v : harness_checks()) verdicts.push_back(std::move(v));
  Rendered out;
  out.summary = header(c, "verify");
  json list = json::array();
  json failed = json::array();
  for (const auto& v : verdicts) {
    list.push_back(to_json(v));
    if (!v.passed) failed.push_back(v.name);
  }
  out.summary["checks"] = verdicts.size();
  out.summary["failed"] = failed;
  out.files["verify.json"] = dump(list);
  out.exit_code = failed.empty() ? kExitOk : kExitCheckFailure;
  return emit(c, std::move(out));
}

int run_command(const std::string& name, const RunConfig& c, std::ostream& err) {
  try {
    if (name == "verify") {
      VerifyOptions o;
      o.workers = c.workers;
      return cmd_verify(c, o).exit_code;
    }
    return emit(c, render(name, c)).exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << name << " failed: " << e.what() << '\n';
    return kExitRuntimeFailure;
  }
}

}  // namespace chainlab
