#include <iostream>
#include <string>
#include <vector>

#include "enpod/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return enpod::cli(args, std::cout, std::cerr);
}
