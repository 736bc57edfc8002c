// polyvem: experiment runner and mesh utilities.
//
//   polyvem run <config-file> [--out DIR] [--jobs N]
//   polyvem mesh gen <family> <n> [--seed S] -o FILE
//   polyvem check <mesh-file>
//
// Exit codes: 0 success, 2 configuration/usage error, 3 solver or runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "polyvem/cell_geometry.hpp"
#include "polyvem/config.hpp"
#include "polyvem/experiments.hpp"
#include "polyvem/mesh_generators.hpp"
#include "polyvem/mesh_io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

int cmd_run(const std::string& path, const std::string& out, int jobs) {
  polyvem::ExperimentConfig cfg;
  try {
    cfg = polyvem::experiment_config_from(polyvem::ConfigFile::load(path));
  } catch (const polyvem::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  if (!out.empty()) cfg.out_dir = out;
  if (jobs > 0) cfg.jobs = jobs;
  for (const auto& w : polyvem::validate(cfg.scheme)) std::cerr << "warning: " << w << "\n";
  try {
    const auto result = polyvem::run_experiment(cfg);
    result.save(cfg.out_dir);
    for (const auto& line : result.summary) std::cout << line << "\n";
    for (const auto& f : result.files) std::cout << "wrote " << cfg.out_dir << "/" << f.first << "\n";
  } catch (const polyvem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverError;
  }
  return 0;
}

int cmd_mesh_gen(const std::string& family, int n, std::uint64_t seed, int lloyd, double delta,
                 const std::string& out) {
  polyvem::MeshFamily fam;
  try {
    fam = polyvem::parse_mesh_family(family);
  } catch (const polyvem::Error& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  }
  try {
    polyvem::FamilyParams p;
    p.seed = seed;
    if (lloyd >= 0) p.lloyd_iters = lloyd;
    if (delta >= 0.0) p.delta = delta;
    const auto mesh = polyvem::generate_family_mesh(fam, n, p);
    polyvem::mesh_io_write(mesh, out);
    std::printf("%zu vertices, %zu edges, %zu cells, h = %.6f\n", mesh.num_vertices(), mesh.num_edges(),
                mesh.num_cells(), mesh.mesh_size());
  } catch (const polyvem::InvalidParameter& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kSolverError;
  }
  return 0;
}

int cmd_check(const std::string& path) {
  try {
    const auto mesh = polyvem::mesh_io_read(path);
    const auto geom = polyvem::compute_geometry(mesh);
    const auto rep = polyvem::check_regularity(mesh, geom);
    std::printf("vertices %zu\nedges %zu\ncells %zu\nh %.6f\n", mesh.num_vertices(), mesh.num_edges(),
                mesh.num_cells(), mesh.mesh_size());
    std::printf("max vertices per cell %zu\n", rep.max_vertices);
    std::printf("min edge/diameter ratio %.6f\n", rep.min_ratio());
    std::printf("cells below rho=%.2f: %zu\n", polyvem::kDefaultRegularityRho,
                rep.count_below(polyvem::kDefaultRegularityRho));
    std::printf("star-shaped w.r.t. centroid: %s\n", rep.all_star_shaped() ? "yes" : "no");
  } catch (const polyvem::Error& e) {
    std::cerr << "invalid mesh: " << e.what() << "\n";
    return kConfigError;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual element solver for the resistive MHD Maxwell subsystem"};
  app.require_subcommand(1);

  std::string config, out;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out, "output directory (overrides output.dir)");
  run->add_option("--jobs", jobs, "worker threads");

  auto* mesh = app.add_subcommand("mesh", "mesh utilities");
  mesh->require_subcommand(1);
  std::string family, mesh_out;
  int n = 0, lloyd = -1;
  double delta = -1.0;
  std::uint64_t seed = 1;
  auto* gen = mesh->add_subcommand("gen", "generate a mesh of one family");
  gen->add_option("family", family, "triangular | perturbed_quad | voronoi")->required();
  gen->add_option("n", n, "refinement level")->required();
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--lloyd", lloyd, "Lloyd sweeps (voronoi)");
  gen->add_option("--perturbation", delta, "vertex perturbation (perturbed_quad)");
  gen->add_option("-o,--output", mesh_out, "output file")->required();

  std::string check_path;
  auto* check = app.add_subcommand("check", "validate a mesh file and report regularity");
  check->add_option("mesh", check_path, "mesh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  if (*run) return cmd_run(config, out, jobs);
  if (*gen) return cmd_mesh_gen(family, n, seed, lloyd, delta, mesh_out);
  if (*check) return cmd_check(check_path);
  return kConfigError;
}
