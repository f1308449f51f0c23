#include "odesyn/cli.hpp"

int main(int argc, char** argv) {
  return odesyn::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
