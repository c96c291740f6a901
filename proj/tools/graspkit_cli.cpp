#include <iostream>
#include <string>
#include <vector>

#include "gpk/cli_runner.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gpk::run_cli(args, std::cout, std::cerr);
}
