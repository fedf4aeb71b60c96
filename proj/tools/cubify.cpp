#include <iostream>

#include "cubify/cli.hpp"

int main(int argc, char** argv) { return cubify::cli_main(argc, argv, std::cout, std::cerr); }
