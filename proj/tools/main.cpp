#include <string>
#include <vector>

#include "powerfolio/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return powerfolio::run_command(args);
}
