#include <iostream>

#include "frmsol/cli.hpp"

int main(int argc, char** argv) { return frmsol::run_command(argc, argv, std::cout, std::cerr); }
