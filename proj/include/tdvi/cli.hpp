#pragma once

namespace tdvi {

/// Command-line entry point. Subcommands:
///   run            --config <path>    integrate and write the configured sink
///   diagnose       --config <path>    run + invariance/momentum/symplecticity
///   converge       --problem <name>   fixed-step order study over --h list
///   list-problems                     builtin catalogue
/// Exit codes: 0 success; 2 configuration/usage error; 3 runtime failure
/// (solver or output I/O) — a partial trajectory is still written when one
/// exists.
int cli_main(int argc, const char* const* argv);

}  // namespace tdvi
