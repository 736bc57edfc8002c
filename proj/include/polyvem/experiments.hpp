#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "polyvem/config.hpp"
#include "polyvem/diagnostics.hpp"
#include "polyvem/mesh_generators.hpp"
#include "polyvem/timestepper.hpp"

namespace polyvem {

enum class ExperimentType { Convergence, Divergence, Energy, Hartmann };

inline ExperimentType parse_experiment_type(const std::string& s) {
  if (s == "convergence") return ExperimentType::Convergence;
  if (s == "divergence") return ExperimentType::Divergence;
  if (s == "energy") return ExperimentType::Energy;
  if (s == "hartmann") return ExperimentType::Hartmann;
  throw ConfigError("unknown experiment type '" + s + "'");
}

struct ExperimentConfig {
  ExperimentType type = ExperimentType::Convergence;
  std::vector<MeshFamily> families{MeshFamily::Triangular};
  std::vector<int> levels{4, 8, 16, 32};
  FamilyParams mesh_params;
  std::vector<ProjectorVariant> variants{ProjectorVariant::Elliptic};
  SchemeConfig scheme;
  std::string problem = "manufactured";
  int q_points = 50;
  std::vector<double> q_values;  // overrides the grid when non-empty
  std::vector<double> trace_q;   // Q values with a per-step E_L/E_R trace
  double tau_nodal = 1.0;
  double tau_edge = 1.0;
  std::string out_dir = "out";
  int jobs = 1;
};

/// Builds an ExperimentConfig; every value error is a ConfigError.
inline ExperimentConfig experiment_config_from(const ConfigFile& f) {
  ExperimentConfig c;
  try {
    c.type = parse_experiment_type(f.require("experiment.type"));
    // Per-experiment defaults mirror the reference runs.
    switch (c.type) {
      case ExperimentType::Convergence:
        c.problem = "manufactured";
        c.scheme.dt_rule = DtRule::HSquared;
        c.scheme.T = 0.25;
        break;
      case ExperimentType::Divergence:
        c.problem = "manufactured";
        c.scheme.dt_rule = DtRule::HSquared;
        c.scheme.T = 0.25;
        c.levels = {16};
        break;
      case ExperimentType::Energy:
        c.problem = "energy_family(C=0.1)";
        c.scheme.dt = 0.001;
        c.scheme.T = 0.5;
        c.families = {MeshFamily::Voronoi};
        c.levels = {44};
        break;
      case ExperimentType::Hartmann:
        c.problem = "hartmann";
        c.scheme.dt = 0.005;
        c.scheme.T = 2.0;
        c.families = {MeshFamily::Voronoi};
        c.levels = {16, 32, 64};
        break;
    }
    std::vector<std::string> fams;
    for (auto fam : c.families) fams.emplace_back(to_string(fam));
    c.families.clear();
    for (const auto& s : f.get_list("mesh.family", fams)) c.families.push_back(parse_mesh_family(s));
    c.levels = f.get_ints("mesh.levels", c.levels);
    c.mesh_params.seed = static_cast<std::uint64_t>(f.get_int("mesh.seed", 1));
    c.mesh_params.delta = f.get_double("mesh.perturbation", c.mesh_params.delta);
    c.mesh_params.lloyd_iters = static_cast<int>(f.get_int("mesh.lloyd_iters", c.mesh_params.lloyd_iters));

    c.variants.clear();
    for (const auto& s : f.get_list("scheme.variant", {"E"})) c.variants.push_back(parse_projector_variant(s));
    c.scheme.theta = f.get_double("scheme.theta", c.scheme.theta);
    const std::string rule = f.get("scheme.dt_rule", c.scheme.dt_rule == DtRule::HSquared ? "h2" : "fixed");
    if (rule == "h2")
      c.scheme.dt_rule = DtRule::HSquared;
    else if (rule == "fixed")
      c.scheme.dt_rule = DtRule::Fixed;
    else
      throw ConfigError("scheme.dt_rule must be 'h2' or 'fixed'");
    c.scheme.dt_coeff = f.get_double("scheme.dt_coeff", c.scheme.dt_coeff);
    c.scheme.dt = f.get_double("scheme.dt", c.scheme.dt);
    c.scheme.T = f.get_double("scheme.T", c.scheme.T);
    if (c.type == ExperimentType::Hartmann && f.get_bool("hartmann.extended", false)) c.scheme.T = 10.0;
    c.tau_nodal = f.get_double("scheme.tau_nodal", c.tau_nodal);
    c.tau_edge = f.get_double("scheme.tau_edge", c.tau_edge);

    c.problem = f.get("problem.name", c.problem);
    if (f.has("problem.C")) {
      const double C = f.get_double("problem.C", 0.1);
      char buf[64];
      std::snprintf(buf, sizeof buf, "(C=%.17g)", C);
      if (c.problem.find('(') != std::string::npos) c.problem.erase(c.problem.find('('));
      c.problem += buf;
    }
    c.q_points = static_cast<int>(f.get_int("energy.q_points", c.q_points));
    c.q_values = f.get_doubles("energy.q_values", {});
    c.trace_q = f.get_doubles("energy.trace_q", {0.5, 1.0, 1.5});
    c.out_dir = f.get("output.dir", c.out_dir);
    c.jobs = static_cast<int>(f.get_int("run.jobs", 1));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (const auto unused = f.unused_keys(); !unused.empty()) throw ConfigError("unknown key '" + unused.front() + "'");
  if (c.families.empty()) throw ConfigError("mesh.family is empty");
  if (c.variants.empty()) throw ConfigError("scheme.variant is empty");
  if (c.levels.empty()) throw ConfigError("mesh.levels is empty");
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i] < 1) throw ConfigError("mesh.levels must be positive");
    if (i && c.levels[i] <= c.levels[i - 1]) throw ConfigError("mesh.levels must be strictly increasing");
  }
  if (c.type == ExperimentType::Energy) {
    if (c.q_values.empty() && c.q_points < 1) throw ConfigError("energy: empty Q grid");
    if (c.scheme.theta < 0.5) throw ConfigError("energy: theta must lie in [1/2, 1]");
  }
  if (c.jobs < 1) throw ConfigError("run.jobs must be >= 1");
  try {
    (void)validate(c.scheme);
    (void)problem_by_name(c.problem);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// Runs job(i) for i in [0, n) on up to `workers` threads. The first
/// exception is rethrown after all threads finish.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  const auto nt = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(n))));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

/// CSV with the versioned header comment and fixed float formatting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& columns) {
    os_ << "# polyvem-mhd csv v1\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
  }
  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
    return *this;
  }
  std::string str() const { return os_.str(); }
  void save(const std::filesystem::path& path) const {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << os_.str();
  }

 private:
  std::ostringstream os_;
};

/// Output of one experiment: file name -> CSV text, plus a human summary.
struct ExperimentOutput {
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> summary;
  void save(const std::string& dir) const {
    for (const auto& [name, text] : files) {
      const std::filesystem::path p = std::filesystem::path(dir) / name;
      std::filesystem::create_directories(p.parent_path());
      std::ofstream f(p, std::ios::binary);
      if (!f) throw Error("cannot write '" + p.string() + "'");
      f << text;
    }
  }
};

namespace detail {

inline Simulation make_simulation(const ExperimentConfig& c, MeshFamily fam, int n, ProjectorVariant v) {
  AssemblyOptions opt;
  opt.variant = v;
  opt.tau_nodal = c.tau_nodal;
  opt.tau_edge = c.tau_edge;
  return Simulation(generate_family_mesh(fam, n, c.mesh_params), problem_by_name(c.problem), opt);
}

inline std::string eoc_cell(const EocTable& t, std::size_t level) {
  return level == 0 ? "" : CsvWriter::num(t.pairwise[level - 1]);
}

}  // namespace detail

struct ConvergencePoint {
  double h = 0.0, rel_err_E = 0.0, rel_err_B = 0.0;
};

/// Errors at the final time (E at the last staggered time, B at N dt).
inline ConvergencePoint convergence_point(const Simulation& sim, const SchemeConfig& scheme) {
  const RunResult r = sim.run(scheme);
  ConvergencePoint p;
  p.h = sim.h();
  const double tE = (r.steps - 1 + scheme.theta) * r.dt;
  p.rel_err_E = l2_error_E(sim, r.final.E, tE).rel();
  p.rel_err_B = l2_error_B(sim, r.final.B, r.final.t).rel();
  return p;
}

inline ExperimentOutput run_convergence(const ExperimentConfig& c) {
  struct Job {
    MeshFamily fam;
    ProjectorVariant var;
    int n;
  };
  std::vector<Job> jobs;
  for (auto fam : c.families)
    for (auto var : c.variants)
      for (int n : c.levels) jobs.push_back({fam, var, n});
  std::vector<ConvergencePoint> pts(jobs.size());
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    const auto& j = jobs[i];
    pts[i] = convergence_point(detail::make_simulation(c, j.fam, j.n, j.var), c.scheme);
  });
  CsvWriter rows({"family", "variant", "n", "h", "rel_err_E", "rel_err_B", "eoc_E", "eoc_B"});
  CsvWriter slopes({"family", "variant", "slope_E", "slope_B"});
  ExperimentOutput out;
  const std::size_t nl = c.levels.size();
  for (std::size_t k = 0; k < jobs.size(); k += nl) {
    std::vector<double> h, eE, eB;
    for (std::size_t l = 0; l < nl; ++l) {
      h.push_back(pts[k + l].h);
      eE.push_back(pts[k + l].rel_err_E);
      eB.push_back(pts[k + l].rel_err_B);
    }
    EocTable tE, tB;
    if (nl > 1) {
      tE = eoc_table(h, eE);
      tB = eoc_table(h, eB);
    }
    const std::string fam = to_string(jobs[k].fam), var = short_name(jobs[k].var);
    for (std::size_t l = 0; l < nl; ++l)
      rows.row({fam, var, std::to_string(jobs[k + l].n), CsvWriter::num(h[l]), CsvWriter::num(eE[l]),
                CsvWriter::num(eB[l]), detail::eoc_cell(tE, l), detail::eoc_cell(tB, l)});
    slopes.row({fam, var, nl > 1 ? CsvWriter::num(tE.slope) : "", nl > 1 ? CsvWriter::num(tB.slope) : ""});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-15s %-2s  slope E %.3f  slope B %.3f", fam.c_str(), var.c_str(), tE.slope,
                  tB.slope);
    out.summary.emplace_back(buf);
  }
  out.files.emplace_back("convergence.csv", rows.str());
  out.files.emplace_back("convergence_eoc.csv", slopes.str());
  return out;
}

/// Per-step squared divergence norm; step 0 is the initial interpolant.
inline ExperimentOutput run_divergence(const ExperimentConfig& c) {
  struct Job {
    MeshFamily fam;
    ProjectorVariant var;
    int n;
  };
  std::vector<Job> jobs;
  for (auto fam : c.families)
    for (auto var : c.variants)
      for (int n : c.levels) jobs.push_back({fam, var, n});
  std::vector<RunResult> runs(jobs.size());
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    runs[i] = detail::make_simulation(c, jobs[i].fam, jobs[i].n, jobs[i].var).run(c.scheme);
  });
  CsvWriter csv({"family", "variant", "n", "step", "t", "div_norm_sq"});
  ExperimentOutput out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string fam = to_string(jobs[i].fam), var = short_name(jobs[i].var), n = std::to_string(jobs[i].n);
    const auto& r = runs[i];
    double mx = r.B0_div_norm * r.B0_div_norm;
    csv.row({fam, var, n, "0", CsvWriter::num(0.0), CsvWriter::num(mx)});
    for (const auto& rec : r.records) {
      const double d2 = rec.div_norm * rec.div_norm;
      mx = std::max(mx, d2);
      csv.row({fam, var, n, std::to_string(rec.n), CsvWriter::num(rec.t), CsvWriter::num(d2)});
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-15s %-2s n=%-3s max ||div B||^2 = %.3e", fam.c_str(), var.c_str(), n.c_str(), mx);
    out.summary.emplace_back(buf);
  }
  out.files.emplace_back("divergence.csv", csv.str());
  return out;
}

inline std::vector<double> energy_q_grid(const ExperimentConfig& c) {
  if (!c.q_values.empty()) return c.q_values;
  // q_points values strictly inside (0, 1/theta).
  std::vector<double> q;
  for (int k = 1; k <= c.q_points; ++k) q.push_back(k / (c.scheme.theta * (c.q_points + 1)));
  return q;
}

inline ExperimentOutput run_energy(const ExperimentConfig& c) {
  const Simulation sim = detail::make_simulation(c, c.families.front(), c.levels.front(), c.variants.front());
  const RunResult r = sim.run(c.scheme);
  CsvWriter qcsv({"Q", "beta", "gamma", "E_R_final", "E_L_final", "calE_final", "min_slack", "satisfied"});
  std::size_t ok = 0, admissible = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  const auto grid = energy_q_grid(c);
  for (double Q : grid) {
    const EnergyLedger l = energy_ledger(r, Q, c.scheme.theta);
    if (!l.hypothesis_ok) {
      qcsv.row({CsvWriter::num(Q), "", "", "", "", "", "", "hypothesis_violated"});
      continue;
    }
    ++admissible;
    ok += l.satisfied();
    min_slack = std::min(min_slack, l.min_slack);
    qcsv.row({CsvWriter::num(Q), CsvWriter::num(l.beta), CsvWriter::num(l.gamma), CsvWriter::num(l.E_R.back()),
              CsvWriter::num(l.E_L.back()), CsvWriter::num(l.final_gap()), CsvWriter::num(l.min_slack),
              l.satisfied() ? "true" : "false"});
  }
  CsvWriter trace({"Q", "step", "t", "E_L", "E_R", "calE"});
  for (double Q : c.trace_q) {
    const EnergyLedger l = energy_ledger(r, Q, c.scheme.theta);
    if (!l.hypothesis_ok) throw ConfigError("energy.trace_q value violates Q theta < 1");
    for (std::size_t k = 0; k < l.E_L.size(); ++k)
      trace.row({CsvWriter::num(Q), std::to_string(r.records[k].n), CsvWriter::num(r.records[k].t),
                 CsvWriter::num(l.E_L[k]), CsvWriter::num(l.E_R[k]), CsvWriter::num(l.E_R[k] - l.E_L[k])});
  }
  ExperimentOutput out;
  out.files.emplace_back("energy_q.csv", qcsv.str());
  out.files.emplace_back("energy_trace.csv", trace.str());
  char buf[200];
  std::snprintf(buf, sizeof buf, "h = %.4f, %d steps: inequality holds for %zu of %zu admissible Q (min slack %.3e)",
                sim.h(), r.steps, ok, admissible, min_slack);
  out.summary.emplace_back(buf);
  return out;
}

struct HartmannPoint {
  double h = 0.0, rel_err_Bx = 0.0, E_probe = 0.0, last_change = 0.0;
};

inline ExperimentOutput run_hartmann(const ExperimentConfig& c) {
  const auto fam = c.families.front();
  const auto var = c.variants.front();
  std::vector<HartmannPoint> pts(c.levels.size());
  std::string field;
  parallel_for(c.levels.size(), c.jobs, [&](std::size_t i) {
    const Simulation sim = detail::make_simulation(c, fam, c.levels[i], var);
    const RunResult r = sim.run(c.scheme);
    pts[i].h = sim.h();
    pts[i].rel_err_Bx = l2_error_Bx(sim, r.final.B, r.final.t).rel();
    pts[i].E_probe = probe_nodal(sim, r.final.E, Point(0.0, 0.0));
    pts[i].last_change = r.records.empty() ? 0.0 : r.records.back().rel_change;
    if (i + 1 == c.levels.size()) {
      CsvWriter f({"x", "y", "Bx_h", "By_h", "Bx_exact"});
      for (int cell = 0; cell < static_cast<int>(sim.mesh().num_cells()); ++cell) {
        const Point& x = sim.geometry()[static_cast<std::size_t>(cell)].centroid;
        const Point b = rt0_value(reconstruct_B(sim.mesh(), sim.operators(), cell, r.final.B), x);
        f.row({CsvWriter::num(x.x()), CsvWriter::num(x.y()), CsvWriter::num(b.x()), CsvWriter::num(b.y()),
               CsvWriter::num(sim.problem().exact_B(x, r.final.t).x())});
      }
      field = f.str();
    }
  });
  std::vector<double> h, e;
  for (const auto& p : pts) {
    h.push_back(p.h);
    e.push_back(p.rel_err_Bx);
  }
  EocTable t;
  if (h.size() > 1) t = eoc_table(h, e);
  CsvWriter csv({"n", "h", "rel_err_Bx", "eoc_Bx", "E_probe", "rel_change_last_step"});
  for (std::size_t i = 0; i < pts.size(); ++i)
    csv.row({std::to_string(c.levels[i]), CsvWriter::num(pts[i].h), CsvWriter::num(pts[i].rel_err_Bx),
             detail::eoc_cell(t, i), CsvWriter::num(pts[i].E_probe), CsvWriter::num(pts[i].last_change)});
  ExperimentOutput out;
  out.files.emplace_back("hartmann.csv", csv.str());
  out.files.emplace_back("hartmann_field.csv", field);
  char buf[200];
  std::snprintf(buf, sizeof buf, "finest h = %.4f: E(0,0) = %.5f, B_x slope %.3f", pts.back().h, pts.back().E_probe,
                t.slope);
  out.summary.emplace_back(buf);
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  switch (c.type) {
    case ExperimentType::Convergence: return run_convergence(c);
    case ExperimentType::Divergence: return run_divergence(c);
    case ExperimentType::Energy: return run_energy(c);
    case ExperimentType::Hartmann: return run_hartmann(c);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace polyvem
