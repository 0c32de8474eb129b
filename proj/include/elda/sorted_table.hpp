#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace elda {

// Immutable sorted key/value file, the medium every pipeline stage reads and
// writes. Layout: magic "STBL", version byte 0x01, then records of
// (u32le key length, key bytes, u32le value length, value bytes).
// Keys are unique and strictly ascending in byte order; both the writer and
// the reader enforce that.
struct TableRecord {
  std::string key;
  std::string value;
};

class SortedTableWriter {
 public:
  explicit SortedTableWriter(const std::filesystem::path& path);
  ~SortedTableWriter();

  void add(std::string_view key, std::string_view value);
  void finish();

 private:
  std::ofstream out_;
  std::string path_;
  std::string last_key_;
  bool any_ = false;
  bool finished_ = false;
};

class SortedTableReader {
 public:
  explicit SortedTableReader(const std::filesystem::path& path);

  std::optional<TableRecord> next();
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::string last_key_;
  bool any_ = false;
  bool eof_ = false;
};

void write_table(const std::filesystem::path& path, const std::vector<TableRecord>& records);
std::vector<TableRecord> read_table(const std::filesystem::path& path);

// Sort-merge join of two tables on their keys. Emits one callback per key
// present in either input; absent sides are passed as std::nullopt.
void merge_join(const std::filesystem::path& left, const std::filesystem::path& right,
                const std::function<void(const std::string& key,
                                         const std::optional<std::string>& left_value,
                                         const std::optional<std::string>& right_value)>& fn);

}  // namespace elda
