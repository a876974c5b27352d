#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace rfvar::cli {

// Flat key-value configuration:
//
//   # comment
//   threads = 2            ; keys before any section apply to every command
//   [estimate]
//   kernel = qs
//   m = 2,2
//
// Section names are command names; keys are long flag names without dashes.
struct ConfigFile {
  std::map<std::string, std::string> global;
  std::map<std::string, std::map<std::string, std::string>> sections;
};

/// Throws rfvar::ParseError carrying the line number on malformed input.
ConfigFile load_config(const std::filesystem::path& path);
ConfigFile parse_config(const std::string& text, const std::string& origin = "<config>");

}  // namespace rfvar::cli
