#include <iostream>
#include <string>
#include <vector>

#include "unlearn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return unlearn::cli::run(args, std::cout, std::cerr);
}
