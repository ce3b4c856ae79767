#include <iostream>

#include "volchain/cli/commands.hpp"

int main(int argc, char** argv) { return volchain::cli::run_cli(argc, argv, std::cout, std::cerr); }
