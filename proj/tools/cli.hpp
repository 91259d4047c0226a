#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace snnw::cli {

enum Exit : int { ok = 0, usage = 1, io = 2, inconsistent = 3 };

/// Parses a TOML or JSON config file (by extension; anything but .toml is
/// read as JSON) into a JSON tree.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Runs one command line and returns the process exit code.
int run(int argc, char** argv);

}  // namespace snnw::cli
