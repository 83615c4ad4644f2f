#include <iostream>

#include "pestab/cli.hpp"

int main(int argc, char** argv) { return pestab::run_cli(argc, argv, std::cout, std::cerr); }
