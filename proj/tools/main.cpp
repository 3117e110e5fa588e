#include <iostream>
#include <string>
#include <vector>

#include "survcross/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return survcross::cli::run(args, std::cout, std::cerr);
}
