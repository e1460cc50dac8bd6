#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pgagent::fixtures {

namespace fs = std::filesystem;

/// Files a fixture producer emits, keyed by path relative to the fixture root.
using FileSet = std::vector<std::pair<std::string, std::string>>;

struct Fixture {
  std::string id;
  std::string purpose;
  std::string command;  // shell command that regenerates it
  std::function<FileSet()> produce;
};

/// Every checked-in fixture, in manifest order. Producers only use offline backends.
const std::vector<Fixture>& registry();

struct Drift {
  std::string fixture;
  std::string path;
  std::string reason;  // "missing", "content differs", "checksum differs"
};

struct Report {
  std::vector<Drift> drifted;
  std::vector<std::string> written;
  [[nodiscard]] std::string render() const;
};

/// Regenerates every fixture in memory and compares it with the tree under `root`, including
/// the manifest's checksums. With `update`, drifted files are rewritten instead of reported.
/// `only` restricts the comparison to the named fixtures (the manifest is always checked).
Report regenerate(const fs::path& root, bool update, const std::vector<std::string>& only = {});

/// The manifest as it should read for freshly produced files: id, purpose, command, and the
/// sha256 of each file.
nlohmann::json manifest(const std::vector<std::pair<const Fixture*, FileSet>>& produced);

}  // namespace pgagent::fixtures
