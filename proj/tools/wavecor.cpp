#include <iostream>

#include "wavecor/cli.hpp"

int main(int argc, char** argv) {
  return wavecor::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
