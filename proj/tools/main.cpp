#include <iostream>

#include "sobolrf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sobolrf::run_cli(args, std::cout, std::cerr);
}
