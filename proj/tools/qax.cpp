#include <iostream>
#include <string>
#include <vector>

#include "qax/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return qax::cli::run(args, std::cout, std::cerr);
}
