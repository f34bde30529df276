#include <iostream>

#include "mfglab/cli.hpp"

int main(int argc, char** argv) { return mfglab::main_entry(argc, argv, std::cout, std::cerr); }
