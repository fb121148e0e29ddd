#include <iostream>

#include <fgmrisk/cli.hpp>

int main(int argc, char** argv) { return fgmrisk::cli::run(argc, argv, std::cout, std::cerr); }
