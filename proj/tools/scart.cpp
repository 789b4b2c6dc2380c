#include <iostream>
#include <string>
#include <vector>

#include "scart/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return scart::cli::run(args, std::cout, std::cerr);
}
