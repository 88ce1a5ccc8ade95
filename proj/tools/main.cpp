#include <iostream>

#include "atomize/cli.hpp"

int main(int argc, char** argv) { return atomize::run_cli(argc, argv, std::cout, std::cerr); }
