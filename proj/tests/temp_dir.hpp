#pragma once

#include <atomic>
#include <filesystem>
#include <string>

namespace radeval::testfix {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("radeval_" + label + "_" + std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace radeval::testfix
