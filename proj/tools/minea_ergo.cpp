#include <iostream>

#include "minea/cli.hpp"

int main(int argc, char** argv) { return minea::cli::run(argc, argv, std::cout, std::cerr); }
