#include <iostream>

#include "viewforge/harness/commands.hpp"

int main(int argc, char** argv) { return viewforge::harness::run_cli(argc, argv, std::cout, std::cerr); }
