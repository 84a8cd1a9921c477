#include <iostream>

#include "msfan/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return msfan::cli::run(args, std::cout, std::cerr);
}
