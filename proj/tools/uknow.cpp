#include <iostream>

#include "uknow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return uknow::dispatch(args, std::cout, std::cerr);
}
