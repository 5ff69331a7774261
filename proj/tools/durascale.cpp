#include <string>
#include <vector>

#include "durascale/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return durascale::cli::run(args);
}
