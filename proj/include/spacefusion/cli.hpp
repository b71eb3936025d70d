#pragma once

namespace spacefusion {

// Full command-line entry point: parses argv, dispatches the subcommand, and
// maps failures to exit codes (0 ok, 2 usage, 3 data, 4 numerics). Kept out
// of main() so tests can drive it in-process.
int run_cli(int argc, const char* const* argv);

}  // namespace spacefusion
