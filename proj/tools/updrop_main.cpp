#include <string>
#include <vector>

#include <updrop/cli.hpp>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return updrop::run_cli(std::move(args));
}
