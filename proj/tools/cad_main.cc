#include <iostream>
#include <string>
#include <vector>

#include "cad/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cad::cli::run_command(args, std::cout, std::cerr);
}
