#include <iostream>

#include "ecuhealth/cli.hpp"

int main(int argc, char** argv) { return ecuhealth::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
