#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return seqnpa::cli::main_entry(argc, argv, std::cerr); }
