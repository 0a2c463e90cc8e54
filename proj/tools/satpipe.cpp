#include <iostream>

#include "satpipe/cli.hpp"

int main(int argc, char** argv) { return satpipe::cli::run(argc, argv, std::cout, std::cerr); }
