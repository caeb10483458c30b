#include "replaydet/external.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <system_error>

#include "replaydet/error.hpp"

namespace replaydet {
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

}  // namespace

std::string expand_command(const std::string& command_template,
                           const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < command_template.size()) {
    const std::size_t open = command_template.find('{', pos);
    if (open == std::string::npos) {
      out += command_template.substr(pos);
      break;
    }
    const std::size_t close = command_template.find('}', open);
    if (close == std::string::npos) {
      out += command_template.substr(pos);
      break;
    }
    const std::string key = command_template.substr(open + 1, close - open - 1);
    out += command_template.substr(pos, open - pos);
    auto it = values.find(key);
    if (it != values.end())
      out += shell_quote(it->second);
    else
      out += command_template.substr(open, close - open + 1);
    pos = close + 1;
  }
  return out;
}

int run_shell(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate =
        base / ("replaydet-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec)) {
      path_ = std::move(candidate);
      return;
    }
  }
  fail(ErrorCode::kIoError, "cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace replaydet
