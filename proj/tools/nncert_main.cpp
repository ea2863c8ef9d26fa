#include <iostream>

#include "nncert/commands.hpp"

int main(int argc, char** argv) { return nncert::run_cli(argc, argv, std::cout, std::cerr); }
