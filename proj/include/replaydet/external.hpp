#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace replaydet {

// Replaces each "{key}" in a command template. Values are single-quoted for
// the shell.
std::string expand_command(const std::string& command_template,
                           const std::map<std::string, std::string>& values);

// Runs a shell command and returns its exit status (-1 if it did not exit).
int run_shell(const std::string& command);

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace replaydet
