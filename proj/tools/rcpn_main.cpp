#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "rcpn/config.hpp"
#include "rcpn/error.hpp"
#include "rcpn/pipeline.hpp"

namespace {

const char* kUsage =
    "usage: rcpn <synth|train|infer|eval|diag> [--config <path>] [--out <dir>]\n"
    "            [--seed <u64>] [--<key> <value> ...]\n"
    "\n"
    "Flags mirror config-file keys (kebab-case on the command line,\n"
    "key = value lines in the file); flags take precedence. The effective\n"
    "configuration is echoed to <out>/resolved_config.\n"
    "\n"
    "commands:\n"
    "  synth   generate a synthetic context-dependent dataset (PPM + PGM)\n"
    "  train   train a model, write checkpoint + diagnostics CSVs\n"
    "  infer   label images with a checkpoint (optional tree-MRF decoding)\n"
    "  eval    score predictions against ground truth (PPA / MCA / IoU)\n"
    "  diag    paired gradient-strength runs (rcpn vs pure_node loss)\n";

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::fputs(kUsage, args.empty() ? stderr : stdout);
    return args.empty() ? 1 : 0;
  }
  try {
    rcpn::CliConfig cfg = rcpn::parse_config(args);
    return rcpn::run_command(cfg);
  } catch (const rcpn::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), kUsage);
    return 1;
  } catch (const rcpn::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
