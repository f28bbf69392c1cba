#include "page/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return page::cli::run(argc, argv, std::cout, std::cerr); }
