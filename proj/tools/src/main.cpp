#include <string>
#include <vector>

#include "ulrates_cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ulrates_cli::run_cli(args);
}
