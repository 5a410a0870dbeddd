#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openq/heom/environment.hpp"
#include "openq/odeint.hpp"
#include "openq/qobj.hpp"
#include "openq/solvers/steadystate.hpp"
#include "openq/stochastic/mcsolve.hpp"
#include "openq/tdep.hpp"

namespace openq::cli {

// Anything wrong with the model document itself. what() starts with the offending path.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& path, const std::string& msg) : std::runtime_error(path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A failure inside a solver, with the model path that was being run.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Value = std::variant<cplx, Qobj>;

struct ExprContext {
  std::vector<std::size_t> dims;  // subsystems
  std::map<std::string, cplx, std::less<>> params;
};

// Evaluate an operator / state / scalar expression. Throws ModelError naming `path`.
Value eval_expr(std::string_view src, const ExprContext& ctx, const std::string& path);

struct Term {
  Qobj op;
  std::optional<Coefficient> coeff;
};

struct EOp {
  std::string label;
  Qobj op;
};

struct BathSpec {
  Qobj q;
  BosonicEnvironment env;
  std::size_t n_k = 0;
};

struct BrSpec {
  Qobj a;
  std::function<double(double)> spectrum;
};

struct NmSpec {
  Qobj a;
  Coefficient rate;
};

struct ModelSpec {
  std::vector<std::size_t> dims;
  std::vector<Term> hamiltonian;
  std::vector<Term> c_ops;
  std::vector<NmSpec> nm_ops;  // nm_mcsolve: c_ops with a "rate"
  std::vector<Qobj> sc_ops;
  Qobj initial_state;
  std::vector<double> tlist;
  std::vector<EOp> e_ops;
  std::string solver;

  // solver_options
  std::size_t ntraj = 500;
  std::uint64_t seed = 0;
  MapKind map = MapKind::parallel;
  bool improved_sampling = false;
  double sec_cutoff = 0.1;
  std::vector<BrSpec> a_ops;
  std::size_t n_c = 2;
  std::vector<BathSpec> baths;
  SteadyMethod steady_method = SteadyMethod::direct;
  double period = 0.0;
  std::size_t nt = 100;
  double dt_sub = 0.0;
  std::optional<IntegratorOptions> integrator;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ntraj;
  std::optional<std::string> solver;
};

ModelSpec parse_model(std::string_view text, const Overrides& ov = {});

struct ResultTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> warnings;
};

ResultTable run_model(const ModelSpec& spec);

// Header of labels, 17 significant digits, '\n' line ends.
void write_csv(const ResultTable& table, std::ostream& out);
void write_csv(const ResultTable& table, const std::string& path);

const std::vector<std::string>& known_solvers();

}  // namespace openq::cli
