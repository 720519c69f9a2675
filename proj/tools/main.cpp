#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "fergan/cli/commands.hpp"

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_interrupt(int) {
  // A second interrupt falls back to the default handler and terminates.
  if (g_cancel.exchange(true)) std::_Exit(130);
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  const std::vector<std::string> args(argv, argv + argc);
  return fergan::cli::run(args, std::cout, std::cerr, &g_cancel);
}
