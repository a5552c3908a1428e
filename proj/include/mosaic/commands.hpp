#pragma once

// Subcommands of the mosaic tool. Each returns a process exit status:
//   0 success, 2 config error, 3 divergence, 4 I/O error, 1 anything else.
// Every CSV written starts with '#' comment lines holding the schema version
// and the fully resolved config as one-line JSON.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace mosaic {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDivergence = 3, kExitIo = 4 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::size_t parallel = 1;  // sweep cells run concurrently
};

// trace.csv and final_state.csv.
int cmd_train(const CommandOptions& options, std::ostream& log);

// rho_vs_K.csv (K,seed,rho) and consensus_vs_round.csv
// (K,seed,round,consensus_sq). With several correlations the files are
// suffixed with the correlation name, e.g. rho_vs_K_block.csv.
int cmd_spectral(const CommandOptions& options, std::ostream& log);

// One directory per (K, degree, alpha, seed) cell holding trace.csv, plus
// summary.csv with the last trace row of every cell. Failed cells are
// listed with their status; the remaining cells still run.
int cmd_sweep(const CommandOptions& options, std::ostream& log);

}  // namespace mosaic
