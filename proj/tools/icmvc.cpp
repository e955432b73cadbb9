#include <iostream>
#include <string>
#include <vector>

#include "icmvc/cli/app.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return icmvc::cli::run_cli(args, std::cout, std::cerr);
}
