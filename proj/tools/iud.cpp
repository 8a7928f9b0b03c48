#include <iostream>

#include "iud/cli.hpp"

int main(int argc, char** argv) { return iud::cli::run(argc, argv, std::cout, std::cerr); }
