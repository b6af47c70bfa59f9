#include <string>
#include <vector>

#include "hfgpi/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hfgpi::cli::run(args);
}
