#include "vgd/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return vgd::cli::run(argc, argv, std::cout, std::cerr); }
