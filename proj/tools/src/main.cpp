#include <iostream>

#include "bagcheck/cli.hpp"

int main(int argc, char** argv) { return bagcheck::cli::run(argc, argv, std::cout, std::cerr); }
