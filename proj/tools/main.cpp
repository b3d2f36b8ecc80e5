#include <vector>

#include "drylab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return drylab::cli::run_cli(args);
}
