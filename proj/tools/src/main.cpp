#include <iostream>

#include "sharing_cli/app.hpp"

int main(int argc, char** argv) { return sharing::cli::run(argc, argv, std::cout, std::cerr); }
