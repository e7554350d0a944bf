#include <string>
#include <vector>

#include "fedmlc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fedmlc::cli::run(args);
}
