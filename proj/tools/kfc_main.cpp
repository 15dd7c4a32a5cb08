#include <iostream>
#include <string>
#include <vector>

#include "kfc_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kfc::cli::dispatch(args, std::cout, std::cerr);
}
