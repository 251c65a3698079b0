#include <string>
#include <vector>

#include "uwnerf/cli.hpp"

int main(int argc, char** argv) {
  return uwnerf::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
