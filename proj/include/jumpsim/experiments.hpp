#ifndef JUMPSIM_EXPERIMENTS_HPP
#define JUMPSIM_EXPERIMENTS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumpsim/hamiltonian.hpp"

// Config-driven experiments behind the jumpsim command line tool.
namespace jumpsim::experiments {

inline constexpr const char* kConfigSchema = "jumpsim.config.v1";

// Process exit codes.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsageError = 2, kIoError = 3, kEngineError = 4 };

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string>& kinds();

// Every recognized key of a kind, with its default value.
nlohmann::json default_config(const std::string& kind);

/**
 * Defaults, then the user file, then key=value overrides (dotted keys reach
 * into objects; values are parsed as JSON, falling back to a string).
 * Unknown keys, wrong types and out-of-range values throw SchemaError.
 */
nlohmann::json resolve_config(const std::string& kind, const nlohmann::json& user,
                              const std::vector<std::string>& overrides);

// FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct Plan {
  std::vector<std::string> lines;
  std::size_t cells = 0;            // grid points (ensembles) to run
  double estimated_events = 0.0;    // from total rate ~ sum |A| / hbar2 at the start
};

Plan describe(const std::string& kind, const nlohmann::json& config);

struct RunResult {
  bool check_passed = true;
  std::vector<std::string> files;  // relative to the output directory
  std::string summary;
};

/**
 * Runs the experiment and writes its artifacts plus manifest.json into
 * out_dir. Engine failures propagate as Error; file problems as IoError.
 */
RunResult run(const std::string& kind, const nlohmann::json& config, const std::filesystem::path& out_dir,
              const std::vector<std::string>& command_line);

}  // namespace jumpsim::experiments

#endif  // JUMPSIM_EXPERIMENTS_HPP
