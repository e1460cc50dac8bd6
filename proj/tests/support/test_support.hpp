#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "pgagent/config.hpp"
#include "pgagent/oracle.hpp"
#include "pgagent/prompt.hpp"
#include "pgagent/scripted.hpp"
#include "pgagent/world.hpp"

namespace pgtest {

namespace fs = std::filesystem;

inline fs::path source_dir() { return PGAGENT_SOURCE_DIR; }
inline fs::path fixture(const std::string& rel) { return source_dir() / "fixtures" / rel; }
inline fs::path prompts() { return source_dir() / "config" / "prompts"; }

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("pgagent-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline pgagent::TemplateSet templates() { return pgagent::TemplateSet::load_directory(prompts()); }

inline std::shared_ptr<pgagent::ScriptedBackend> scripted(pgagent::world::WorldSpec spec = pgagent::world::demo_world()) {
  return std::make_shared<pgagent::ScriptedBackend>(std::move(spec));
}

inline pgagent::Oracle scripted_oracle(pgagent::world::WorldSpec spec = pgagent::world::demo_world(), int retries = 2) {
  return pgagent::Oracle(scripted(std::move(spec)), templates(), pgagent::OracleOptions{retries, 0});
}

struct CliResult {
  int status = -1;
  std::string out;
};

/// Runs the pgagent binary with `args` (already shell-quoted), capturing standard output.
/// Standard error is discarded unless `keep_stderr` is set.
inline CliResult run_cli(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string("'") + PGAGENT_CLI_PATH + "' " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

inline std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace pgtest
