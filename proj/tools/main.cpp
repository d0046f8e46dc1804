#include <iostream>

#include "rareda/cli.hpp"

int main(int argc, char** argv) { return rareda::cli::run(argc, argv, std::cout, std::cerr); }
