#include <string>
#include <vector>

#include "canbench/cli.hpp"

int main(int argc, char** argv) {
  return canbench::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
