#include <iostream>

#include "mechsym/cli.hpp"

int main(int argc, char** argv) { return mechsym::cli::main(argc, argv, std::cout, std::cerr); }
