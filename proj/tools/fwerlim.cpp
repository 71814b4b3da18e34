#include <iostream>

#include "fwerlim/cli.hpp"

int main(int argc, char** argv) { return fwerlim::cli::main(argc, argv, std::cout, std::cerr); }
