#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "lama/taxonomy.hpp"

namespace lama::test {

inline std::filesystem::path data_dir() { return LAMA_TEST_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return LAMA_TEST_FIXTURE_DIR; }

inline const Taxonomy& taxonomy99() {
  static const Taxonomy t = Taxonomy::load(data_dir() / "taxonomy_99.tsv");
  return t;
}

inline const Taxonomy& mini5() {
  static const Taxonomy t = Taxonomy::load(data_dir() / "taxonomy_mini5.tsv");
  return t;
}

inline const Taxonomy& mini3() {
  static const Taxonomy t = Taxonomy::load(data_dir() / "taxonomy_mini3.tsv");
  return t;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lama_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace lama::test
