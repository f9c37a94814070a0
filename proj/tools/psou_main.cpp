#include <iostream>
#include <string>
#include <vector>

#include "psou/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return psou::cli::run_command(args, std::cout, std::cerr);
}
