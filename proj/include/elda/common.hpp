#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elda {

// Malformed or unreadable input data. Mapped to exit code 3 by the CLI.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise unusable numerical state. Mapped to exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- little-endian encoding helpers (value encodings are byte-order pinned) ----

inline void put_u8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i64(std::string& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

inline void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s.data(), s.size());
}

// Cursor over an encoded value; throws DataError on truncation.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context)
      : data_(data), ctx_(std::move(context)) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }

  uint32_t u32() {
    std::string_view b = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
    return v;
  }

  uint64_t u64() {
    std::string_view b = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(b[i])) << (8 * i);
    return v;
  }

  int64_t i64() { return static_cast<int64_t>(u64()); }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    uint32_t n = u32();
    std::string_view b = take(n);
    return std::string(b);
  }

  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

  void expect_done() const {
    if (!done()) throw DataError(ctx_ + ": trailing bytes in record value");
  }

 private:
  std::string_view take(size_t n) {
    if (data_.size() - pos_ < n) throw DataError(ctx_ + ": truncated record value");
    std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::string_view data_;
  size_t pos_ = 0;
  std::string ctx_;
};

// Sparse per-document topic counts, sorted ascending by topic id.
// Sizes stay small (bounded by document length), so linear ops suffice.
class CountMap {
 public:
  using Entry = std::pair<uint32_t, uint32_t>;  // (topic, count > 0)

  void clear() { e_.clear(); }
  bool empty() const { return e_.empty(); }
  size_t distinct() const { return e_.size(); }

  uint32_t count(uint32_t topic) const {
    for (const auto& [t, c] : e_) {
      if (t == topic) return c;
      if (t > topic) break;
    }
    return 0;
  }

  bool contains(uint32_t topic) const { return count(topic) != 0; }

  void inc(uint32_t topic) {
    auto it = e_.begin();
    while (it != e_.end() && it->first < topic) ++it;
    if (it != e_.end() && it->first == topic)
      ++it->second;
    else
      e_.insert(it, {topic, 1});
  }

  // pre: count(topic) > 0
  void dec(uint32_t topic) {
    auto it = e_.begin();
    while (it != e_.end() && it->first < topic) ++it;
    if (it == e_.end() || it->first != topic)
      throw std::logic_error("CountMap::dec on absent topic");
    if (--it->second == 0) e_.erase(it);
  }

  uint64_t total() const {
    uint64_t s = 0;
    for (const auto& [t, c] : e_) s += c;
    return s;
  }

  const std::vector<Entry>& entries() const { return e_; }

 private:
  std::vector<Entry> e_;
};

}  // namespace elda
