#include <iostream>
#include <string>
#include <vector>

#include "satadv/cli.hpp"

int main(int argc, char** argv) {
    return satadv::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
