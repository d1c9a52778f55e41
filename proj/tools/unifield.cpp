#include <iostream>

#include "unifield/cli.hpp"

int main(int argc, char** argv) { return unifield::run_cli(argc, argv, std::cout, std::cerr); }
