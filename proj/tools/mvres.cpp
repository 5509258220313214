#include <iostream>

#include "mvres/cli.hpp"

int main(int argc, char** argv) { return mvres::cli::run(argc, argv, std::cout, std::cerr); }
