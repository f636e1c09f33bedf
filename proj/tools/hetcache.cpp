#include <iostream>

#include "hetcache/cli.hpp"

int main(int argc, char** argv) { return hetcache::cli::run(argc, argv, std::cout, std::cerr); }
