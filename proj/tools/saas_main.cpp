#include <iostream>

#include "saas/cli.hpp"

int main(int argc, char** argv) {
  return saas::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
