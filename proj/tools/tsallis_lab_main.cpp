#include <iostream>
#include <string>
#include <vector>

#include "tsallis_lab/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return tsallis_lab::cli::run(args, std::cout, std::cerr);
}
