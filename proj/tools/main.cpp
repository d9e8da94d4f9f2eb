#include <iostream>

#include "coblock/cli.hpp"

int main(int argc, char** argv) {
    return coblock::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
