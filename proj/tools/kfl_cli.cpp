#include <iostream>

#include "kfl/cli.hpp"

int main(int argc, char** argv) { return kfl::cli_main(argc, argv, std::cout, std::cerr); }
