#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "searchsig/error.hpp"
#include "searchsig/spatial.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("searchsig_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Runs `fn` and returns the kind of the searchsig::Error it throws.
/// Fails the enclosing test through the returned optional when nothing or
/// something else is thrown.
inline std::optional<searchsig::ErrorKind> error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const searchsig::Error& e) {
    return e.kind();
  } catch (...) {
    return std::nullopt;
  }
  return std::nullopt;
}

inline searchsig::ZipRecord zip(std::string id, std::string county, double lat, double lon,
                                std::int64_t population = 5000) {
  searchsig::ZipRecord z;
  z.zip_id = std::move(id);
  z.state_fips = county.substr(0, 2);
  z.county_fips = std::move(county);
  z.centroid = {lat, lon};
  z.population = population;
  z.land_area_km2 = 10.0;
  return z;
}

/// Byte contents of every regular file under `root`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = read_file(entry.path());
  }
  return files;
}

}  // namespace testing
