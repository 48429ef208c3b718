#include <iostream>
#include <string>
#include <vector>

#include "oid/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return oid::run_cli(args, std::cin, std::cout, std::cerr);
}
