#include <iostream>

#include "fdcell/cli.hpp"

int main(int argc, char** argv) { return fdcell::run_cli(argc, argv, std::cout, std::cerr); }
