#include <iostream>

#include "grftail/cli.hpp"

int main(int argc, char** argv) { return grftail::run_cli(argc, argv, std::cout, std::cerr); }
