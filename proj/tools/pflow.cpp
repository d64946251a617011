#include <iostream>

#include "pflow/harness/cli.hpp"

int main(int argc, char** argv) {
  return pflow::harness::run_cli(argc, argv, std::cout, std::cerr);
}
