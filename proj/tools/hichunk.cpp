#include <iostream>

#include "hichunk/cli.hpp"

int main(int argc, char** argv) { return hichunk::run_cli(argc, argv, std::cout, std::cerr); }
