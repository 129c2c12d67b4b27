#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace fieldreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitIo = 4;

struct RunOptions {
    std::filesystem::path config;
    std::filesystem::path out_dir = ".";
    bool quiet = false;
};

// Runs one of solve, oracle, sweep, mms, denoise and returns the exit code.
// Outputs land in out_dir only if the whole command succeeds.
int run_command(std::string_view command, const RunOptions& opts, std::ostream& out, std::ostream& err);

} // namespace fieldreg::cli
