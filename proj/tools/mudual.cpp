#include "mudual/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return mudual::cli::run(argc, argv, std::cout, std::cerr);
}
