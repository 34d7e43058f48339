#include <iostream>

#include "qdensity/cli_io.hpp"

int main(int argc, char** argv) { return qdensity::io::run_cli(argc, argv, std::cout, std::cerr); }
