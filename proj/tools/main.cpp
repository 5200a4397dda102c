#include "cli.hpp"
#include "ctlab/alloc.hpp"

#include <iostream>

int main(int argc, char** argv) {
  ctlab::keep_heap_resident();
  return ctlab::run_cli(argc, argv, std::cout, std::cerr);
}
