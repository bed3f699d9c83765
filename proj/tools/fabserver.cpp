#include <iostream>

#include "craft/cli.hpp"

int main(int argc, char** argv) {
  return craft::cli::fabserver_main({argv + 1, argv + argc}, std::cout, std::cerr);
}
