#include <csignal>
#include <iostream>

#include "opnc/cli.hpp"

namespace {

void on_sigint(int) { opnc::interrupt_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  return opnc::run_cli(argc, argv, std::cout, std::cerr);
}
