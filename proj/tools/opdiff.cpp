#include <iostream>

#include "opdiff/cli.hpp"

int main(int argc, char** argv) { return opdiff::cli::run_main(argc, argv, std::cout, std::cerr); }
