#include <iostream>

#include "md/cli.hpp"

int main(int argc, char** argv) { return md::run_cli(argc, argv, std::cout, std::cerr); }
