#include "commands.hpp"

int main(int argc, char** argv) {
    return trajmeta::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
