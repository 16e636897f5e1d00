#include <iostream>

#include "dragkit/cli.hpp"

int main(int argc, char** argv) {
  return dragkit::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
