// ncsim command-line front end: capacity / simulate / sweep / exponent /
// fluidcheck over JSON network descriptions, CSV out.
//
// Exit codes: 0 success, 2 configuration error, 3 guard refusal (problem too
// large for an exact method), 4 statistical no-fit.

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncsim/commands.hpp"

namespace {

struct CommonArgs {
  std::string network;
  std::string out;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& c, bool needs_seed = true) {
  cmd->add_option("--network", c.network, "network description (JSON)")
      ->required();
  cmd->add_option("--out", c.out, "output CSV path")->required();
  auto* seed = cmd->add_option("--seed", c.seed, "RNG seed");
  if (needs_seed) seed->required();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"random linear packet-coding toolkit"};
  app.require_subcommand(1);

  CommonArgs c_cap, c_sim, c_sweep, c_exp, c_fluid;
  std::vector<int> sinks;
  ncsim::SimulateOptions sim_opt;
  ncsim::SweepOptions sweep_opt;
  ncsim::ExponentOptions exp_opt;
  ncsim::FluidcheckOptions fluid_opt;
  int sim_field = 256, sweep_field = 256, exp_field = 256, fluid_field = 2;
  const std::vector<int> fields{2, 16, 256};

  auto* cap = app.add_subcommand("capacity", "min-cut capacity per sink");
  add_common(cap, c_cap, false);
  cap->add_option("--sinks", sinks, "sink nodes (default: network sinks)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo decode runs");
  add_common(sim, c_sim);
  sim->add_option("--K", sim_opt.K, "messages per generation")->required();
  sim->add_option("--rate", sim_opt.rate, "target rate R");
  sim->add_option("--delta", sim_opt.delta, "decode deadline");
  sim->add_option("--field", sim_field, "field size q")
      ->check(CLI::IsMember(fields));
  sim->add_option("--reps", sim_opt.reps, "replications");
  sim->add_option("--sinks", sim_opt.sinks, "sink override");
  sim->add_flag("--rateless", sim_opt.rateless,
                "run until rank K instead of a fixed deadline");

  auto* sweep = app.add_subcommand("sweep", "success rate over a rate grid");
  add_common(sweep, c_sweep);
  sweep->add_option("--K", sweep_opt.K, "messages per generation")->required();
  sweep->add_option("--rate", sweep_opt.rates, "rate grid")->required();
  sweep->add_option("--field", sweep_field, "field size q")
      ->check(CLI::IsMember(fields));
  sweep->add_option("--reps", sweep_opt.reps, "replications per point");

  auto* exp = app.add_subcommand("exponent", "error-probability decay in delta");
  add_common(exp, c_exp);
  exp->add_option("--rate", exp_opt.rate, "target rate R")->required();
  exp->add_option("--delta", exp_opt.deltas, "coding-delay grid")->required();
  exp->add_option("--rho", exp_opt.rho, "innovation order");
  exp->add_option("--field", exp_field, "field size q")
      ->check(CLI::IsMember(fields));
  exp->add_option("--reps", exp_opt.reps, "replications per point")->required();

  auto* fluid = app.add_subcommand("fluidcheck",
                                   "tandem innovative-queue growth check");
  add_common(fluid, c_fluid);
  fluid->add_option("--rho", fluid_opt.rho, "innovation order");
  fluid->add_option("--field", fluid_field, "field size q")
      ->check(CLI::IsMember(fields));
  fluid->add_option("--tau", fluid_opt.tau, "observation horizon");
  fluid->add_option("--K", fluid_opt.K, "messages per generation");
  fluid->add_option("--reps", fluid_opt.reps, "replications to average");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cap->parsed()) {
      const auto net = ncsim::load_network(c_cap.network);
      ncsim::cmd_capacity(net, sinks).write(c_cap.out);
    } else if (sim->parsed()) {
      sim_opt.field = sim_field;
      sim_opt.seed = c_sim.seed;
      const auto net = ncsim::load_network(c_sim.network);
      ncsim::cmd_simulate(net, sim_opt).write(c_sim.out);
    } else if (sweep->parsed()) {
      sweep_opt.field = sweep_field;
      sweep_opt.seed = c_sweep.seed;
      const auto net = ncsim::load_network(c_sweep.network);
      ncsim::cmd_sweep(net, sweep_opt).write(c_sweep.out);
    } else if (exp->parsed()) {
      exp_opt.field = exp_field;
      exp_opt.seed = c_exp.seed;
      const auto net = ncsim::load_network(c_exp.network);
      const auto out = ncsim::cmd_exponent(net, exp_opt);
      out.table.write(c_exp.out);
      if (!out.fit.ok) {
        std::fprintf(stderr, "no fit: %s\n", out.fit.diagnostic.c_str());
        return 4;
      }
    } else if (fluid->parsed()) {
      fluid_opt.field = fluid_field;
      fluid_opt.seed = c_fluid.seed;
      const auto net = ncsim::load_network(c_fluid.network);
      ncsim::cmd_fluidcheck(net, fluid_opt).write(c_fluid.out);
    }
  } catch (const std::length_error& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 3;
  } catch (const ncsim::NoFitError& e) {
    std::fprintf(stderr, "no fit: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
