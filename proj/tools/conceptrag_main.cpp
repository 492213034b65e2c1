#include <iostream>
#include <string>
#include <vector>

#include "conceptrag/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return conceptrag::cli::run(args, std::cout, std::cerr);
}
