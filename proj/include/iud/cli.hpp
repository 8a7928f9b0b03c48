#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iud::cli {

enum ExitCode : int { Success = 0, RuntimeFailure = 1, UsageError = 2 };

struct SimulateOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> replicates;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0; // 0: hardware concurrency
    bool emit_traces = false;
};

struct MleOptions {
    std::filesystem::path counts;
    double varsigma = 1.0;
};

struct AnalyzeOptions {
    std::filesystem::path trace;
    int j = 1; // 1-based
    int l = 2;
    int h = 1;
    std::vector<double> times = {1.0};
    double level = 0.95;
};

int simulate_command(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int mle_command(const MleOptions& options, std::ostream& out, std::ostream& err);
int analyze_command(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);
int scenarios_command(std::ostream& out);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace iud::cli
