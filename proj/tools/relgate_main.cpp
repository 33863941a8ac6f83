#include <string>
#include <vector>

#include "relgate/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return relgate::cli_run(args);
}
