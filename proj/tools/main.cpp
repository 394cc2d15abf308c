#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bninstruct/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("bninstruct"));
  if (const char* level = std::getenv("BNINSTRUCT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
  std::vector<std::string> args(argv + 1, argv + argc);
  return bninstruct::cli_dispatch(args, std::cout, std::cerr);
}
