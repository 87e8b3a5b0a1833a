#include "ks/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ks::run_cli(argc, argv, std::cout, std::cerr); }
