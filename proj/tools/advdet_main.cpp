#include <vector>

#include "advdet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return advdet::cli_run(args);
}
