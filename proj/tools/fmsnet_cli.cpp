#include <iostream>

#include "fmsnet/cli/cli.hpp"

int main(int argc, char** argv) {
  return fmsnet::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
