#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace uknow {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Exit statuses of dispatch().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

// Record of one command run. Holds no clock or host data, so equal inputs
// give equal manifests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::string tool_version{kToolVersion};

  std::string to_json() const;
};

// <dir>/run_manifest.json for a directory output, <file>.manifest.json for a
// file output.
std::filesystem::path manifest_path_for(const std::filesystem::path& output, bool is_dir);

// Runs one command line (args exclude the program name). Machine-readable
// results go to `out`; diagnostics go to `err` as one JSON line.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uknow
