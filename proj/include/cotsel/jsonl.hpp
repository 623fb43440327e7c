#pragma once

#include <fstream>
#include <string>

#include "cotsel/error.hpp"
#include "json.hpp"

namespace cotsel {

// Line-delimited JSON output. Keys keep insertion order so files are
// byte-stable for identical input.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path);
  }

  void write(const nlohmann::ordered_json& j) {
    out_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
         << '\n';
    if (!out_) throw IoError("write failed: " + path_);
    ++lines_;
  }

  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
    out_.close();
  }

  std::size_t lines() const { return lines_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t lines_ = 0;
};

}  // namespace cotsel
