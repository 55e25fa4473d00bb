#include <iostream>

#include "spikemon/cli.hpp"

int main(int argc, char** argv) { return spikemon::cli::dispatch(argc, argv, std::cout, std::cerr); }
