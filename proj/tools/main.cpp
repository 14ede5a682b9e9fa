#include <iostream>

#include "clavir/cli.hpp"

int main(int argc, char** argv) { return clavir::cli::run_cli(argc, argv, std::cout, std::cerr); }
