#include <iostream>

#include "rmhd/harness/cli.hpp"

int main(int argc, char** argv) { return rmhd::harness::cli(argc, argv, std::cout, std::cerr); }
