// openq run <model> [--output PATH] [--seed N] [--ntraj N] [--solver NAME] [--format csv]
// openq validate <model>
// exit: 0 ok, 1 validation error, 2 solver error
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "openq/cli/model.hpp"

namespace {

int load(const std::string& path, std::string& text) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot read model file '" << path << "'\n";
    return 1;
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  text = ss.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open quantum system simulations from declarative model files"};
  app.require_subcommand(1);

  std::string run_file, out_path, format = "csv", solver;
  std::uint64_t seed = 0;
  std::size_t ntraj = 0;
  auto* run = app.add_subcommand("run", "Run a model and write expectation values as CSV");
  run->add_option("model-file", run_file, "Model file (JSON)")->required();
  auto* o_out = run->add_option("--output,-o", out_path, "Output path (default: stdout)");
  auto* o_seed = run->add_option("--seed", seed, "Master seed for trajectory solvers");
  auto* o_ntraj = run->add_option("--ntraj", ntraj, "Number of trajectories")->check(CLI::PositiveNumber);
  auto* o_solver = run->add_option("--solver", solver, "Override the model's solver");
  run->add_option("--format", format, "Output format")->default_str("csv");

  std::string val_file;
  auto* validate = app.add_subcommand("validate", "Parse and type-check a model without running it");
  validate->add_option("model-file", val_file, "Model file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  using namespace openq::cli;
  std::string text;
  if (*validate) {
    if (int rc = load(val_file, text)) return rc;
    try {
      const auto m = parse_model(text);
      std::cerr << "ok: " << m.solver << ", dims";
      for (auto d : m.dims) std::cerr << ' ' << d;
      std::cerr << ", " << m.tlist.size() << " times, " << m.e_ops.size() << " e_ops\n";
      return 0;
    } catch (const ModelError& e) {
      std::cerr << "validation error: " << e.what() << '\n';
      return 1;
    }
  }

  if (format != "csv") {
    std::cerr << "validation error: --format: only csv is supported\n";
    return 1;
  }
  if (int rc = load(run_file, text)) return rc;
  Overrides ov;
  if (*o_seed) ov.seed = seed;
  if (*o_ntraj) ov.ntraj = ntraj;
  if (*o_solver) ov.solver = solver;
  ModelSpec m;
  try {
    m = parse_model(text, ov);
  } catch (const ModelError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  }
  ResultTable t;
  try {
    std::cerr << "running " << m.solver << " on " << run_file << '\n';
    t = run_model(m);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << run_file << ": " << e.what() << '\n';
    return 2;
  }
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << '\n';
  try {
    if (*o_out)
      write_csv(t, out_path);
    else
      write_csv(t, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
