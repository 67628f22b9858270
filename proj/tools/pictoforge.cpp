#include <iostream>

#include "pictoforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pictoforge::cli_main(args, std::cout, std::cerr, std::cin);
}
