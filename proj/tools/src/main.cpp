#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace morsenorm;
using namespace morsenorm::cli;

int main(int argc, char** argv) {
  CLI::App app{"morsenorm: normal forms and flow conjugacies near hyperbolic critical points"};
  app.set_version_flag("--version", std::string(MORSENORM_VERSION));
  app.require_subcommand(1);

  Options opts;
  int order = 0;
  double delta = 0;

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Entry entries[] = {
      {"analyze", "critical points, Morse eigenvalues and resonances", cmd_analyze},
      {"normalize", "formal normalization with an obstruction ledger", cmd_normalize},
      {"conjugate", "evaluate the conjugacy on a grid", cmd_conjugate},
      {"fixedpoint", "integral-equation solution with contraction diagnostics", cmd_fixedpoint},
      {"verify", "property battery against one problem file", cmd_verify},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("problem", opts.spec_path, "problem file (JSON)")->required();
    sub->add_option("--order", order, "jet order override")->check(CLI::Range(2, kMaxOrder));
    sub->add_option("--seed", opts.seed, "seed for randomized sampling");
    sub->add_option("--out", opts.out, "output directory");
    sub->add_flag("--timings", opts.timings, "record wall-clock timings in the report");
    if (std::string(e.name) == "conjugate" || std::string(e.name) == "fixedpoint")
      sub->add_option("--grid", opts.grid, "lo:hi:steps per axis, comma separated");
    if (std::string(e.name) == "conjugate")
      sub->add_option("--method", opts.method, "exit, fixedpoint or both")
          ->check(CLI::IsMember({"exit", "fixedpoint", "both"}));
    if (std::string(e.name) == "conjugate" || std::string(e.name) == "fixedpoint") {
      sub->add_option("--delta", delta, "weight rate (default delta_min)")->check(CLI::PositiveNumber);
      sub->add_option("--p", opts.p, "norm exponent p > 1");
      sub->add_option("--k", opts.k, "derivative count")->check(CLI::NonNegativeNumber);
      sub->add_option("--tmax", opts.tmax, "longest horizon (0 selects the default)")->check(CLI::NonNegativeNumber);
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitSpec;
  }

  std::size_t chosen = 0;
  while (chosen < subs.size() && !subs[chosen]->parsed()) ++chosen;
  opts.command = entries[chosen].name;
  if (subs[chosen]->count("--order")) opts.order = order;
  if (subs[chosen]->get_option_no_throw("--delta") && subs[chosen]->count("--delta")) opts.delta = delta;
  if (!(opts.p > 1)) {
    std::fprintf(stderr, "morsenorm: --p must exceed 1\n");
    return kExitSpec;
  }

  try {
    return entries[chosen].run(opts);
  } catch (const CliFailure& e) {
    std::fprintf(stderr, "morsenorm: %s\n", e.what());
    return e.code();
  } catch (const SpecError& e) {
    std::fprintf(stderr, "morsenorm: invalid problem file: %s\n", e.what());
    return kExitSpec;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "morsenorm: parse error: %s\n", e.what());
    return kExitSpec;
  } catch (const DegenerateCriticalPoint& e) {
    std::fprintf(stderr, "morsenorm: degenerate critical point: %s\n", e.what());
    return kExitDegenerate;
  } catch (const ComplexSpectrum& e) {
    std::fprintf(stderr, "morsenorm: complex spectrum: %s\n", e.what());
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "morsenorm: %s\n", e.what());
    return kExitCheckFailed;
  }
}
