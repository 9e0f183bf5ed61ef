#include "rwmpc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rwmpc::cli::run(argc, argv, std::cout, std::cerr); }
