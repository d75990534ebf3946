#include "conflat/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return conflat::cli::main(argc, argv, std::cout, std::cerr); }
