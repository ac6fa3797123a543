// Command-line driver for the adaptive elasticity solver.
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <planelast/driver.hpp>

namespace {

void print_usage(std::ostream& os) {
  os << "usage: planelast [--config PATH] [--benchmark NAME] [--nu VALUE]\n"
        "                 [--theta VALUE] [--steps N] [--mesh PATH] [--out PATH]\n"
        "\n"
        "Runs the adaptive solve-estimate-mark-refine loop and prints one CSV row\n"
        "per step (also written to --out when given).\n"
        "\n"
        "Benchmarks: cook (default), manufactured-smooth, manufactured-divfree,\n"
        "patch-test.  Flags override config-file entries, which override the\n"
        "defaults.  Config files use 'key = value' lines with '#' comments; keys:\n"
        "benchmark, mesh, out, mu, nu, lambda, lambda_inv, theta, steps,\n"
        "korn_degree, korn_safety, korn_override, stop_tolerance.\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  for (const std::string& a : args)
    if (a == "--help" || a == "-h") {
      print_usage(std::cout);
      return 0;
    }
  try {
    const planelast::RunConfig cfg = planelast::parse_cli(args);
    const planelast::ConvergenceRecord record = planelast::run_adaptive(cfg);
    planelast::emit_csv(record, std::cout);
    if (record.slope)
      std::cerr << "fitted slope of log(bound) vs log(n_dof) over the final rows: "
                << *record.slope << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
