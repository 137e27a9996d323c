#include "degsde/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return degsde::run_cli(argc, argv, std::cout, std::cerr); }
