// Apache License, Version 2.0, refer to LICENSE.txt
#include <cstdlib>
#include <iostream>
#include <string>

#include "stickflow/acceptance.hpp"

int main(int argc, char** argv) {
  stickflow::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--seed" && i + 1 < argc) {
      options.seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (arg == "--jobs" && i + 1 < argc) {
      options.jobs = std::atoi(argv[++i]);
    } else if (arg == "--criterion" && i + 1 < argc) {
      options.criteria.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: stickflow-acceptance [--seed S] [--jobs N] [--criterion K]...\n";
      return 1;
    }
  }

  bool all_pass = true;
  stickflow::run_acceptance(options, [&](const stickflow::CriterionResult& r) {
    stickflow::print_result_line(r, std::cout);
    std::cout.flush();
    all_pass = all_pass && r.pass;
  });
  return all_pass ? 0 : 2;
}
