#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "hybridmap/errors.hpp"

namespace hybridmap {

/// Newline-delimited JSON records (one line per event).
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path, bool append = false)
      : os_(path, append ? std::ios::app : std::ios::trunc) {
    if (!os_) throw InputError("cannot open run log " + path.string());
  }

  void append(const nlohmann::json& record) {
    os_ << record.dump() << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
};

inline std::vector<nlohmann::json> read_run_log(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open run log " + path.string());
  std::vector<nlohmann::json> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    records.push_back(nlohmann::json::parse(line));
  }
  return records;
}

}  // namespace hybridmap
