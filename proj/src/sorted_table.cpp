#include "elda/sorted_table.hpp"

#include "elda/common.hpp"

namespace elda {

static constexpr char kMagic[4] = {'S', 'T', 'B', 'L'};
static constexpr uint8_t kVersion = 0x01;

static void write_u32le(std::ofstream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

SortedTableWriter::SortedTableWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
  if (!out_) throw DataError(path_ + ": cannot open for writing");
  out_.write(kMagic, 4);
  char v = static_cast<char>(kVersion);
  out_.write(&v, 1);
}

SortedTableWriter::~SortedTableWriter() {
  if (!finished_ && out_.is_open()) out_.close();
}

void SortedTableWriter::add(std::string_view key, std::string_view value) {
  if (finished_) throw std::logic_error("SortedTableWriter: add after finish");
  if (any_ && !(last_key_ < std::string(key)))
    throw DataError(path_ + ": keys not strictly ascending at \"" + std::string(key) + "\"");
  write_u32le(out_, static_cast<uint32_t>(key.size()));
  out_.write(key.data(), static_cast<std::streamsize>(key.size()));
  write_u32le(out_, static_cast<uint32_t>(value.size()));
  out_.write(value.data(), static_cast<std::streamsize>(value.size()));
  last_key_.assign(key);
  any_ = true;
}

void SortedTableWriter::finish() {
  if (finished_) return;
  out_.close();
  if (!out_) throw DataError(path_ + ": write failed");
  finished_ = true;
}

SortedTableReader::SortedTableReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
  if (!in_) throw DataError(path_ + ": cannot open");
  char magic[4];
  in_.read(magic, 4);
  char version = 0;
  in_.read(&version, 1);
  if (!in_ || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path_ + ": bad magic, not a sorted table");
  if (version != static_cast<char>(kVersion))
    throw DataError(path_ + ": unsupported version byte");
}

static bool read_u32le(std::ifstream& in, uint32_t* v) {
  char b[4];
  in.read(b, 4);
  if (in.gcount() == 0) return false;  // clean EOF before a record
  if (in.gcount() != 4) throw DataError("truncated record header");
  *v = 0;
  for (int i = 0; i < 4; ++i) *v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
  return true;
}

std::optional<TableRecord> SortedTableReader::next() {
  if (eof_) return std::nullopt;
  uint32_t klen = 0;
  try {
    if (!read_u32le(in_, &klen)) {
      eof_ = true;
      return std::nullopt;
    }
  } catch (const DataError&) {
    throw DataError(path_ + ": truncated record after key \"" + last_key_ + "\"");
  }
  TableRecord rec;
  rec.key.resize(klen);
  in_.read(rec.key.data(), klen);
  uint32_t vlen = 0;
  if (in_.gcount() != static_cast<std::streamsize>(klen) || !read_u32le(in_, &vlen))
    throw DataError(path_ + ": truncated record after key \"" + last_key_ + "\"");
  rec.value.resize(vlen);
  in_.read(rec.value.data(), vlen);
  if (in_.gcount() != static_cast<std::streamsize>(vlen))
    throw DataError(path_ + ": truncated value for key \"" + rec.key + "\"");
  if (any_ && !(last_key_ < rec.key))
    throw DataError(path_ + ": keys not strictly ascending at \"" + rec.key + "\"");
  last_key_ = rec.key;
  any_ = true;
  return rec;
}

void write_table(const std::filesystem::path& path, const std::vector<TableRecord>& records) {
  SortedTableWriter w(path);
  for (const auto& r : records) w.add(r.key, r.value);
  w.finish();
}

std::vector<TableRecord> read_table(const std::filesystem::path& path) {
  SortedTableReader r(path);
  std::vector<TableRecord> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

void merge_join(const std::filesystem::path& left, const std::filesystem::path& right,
                const std::function<void(const std::string&, const std::optional<std::string>&,
                                         const std::optional<std::string>&)>& fn) {
  SortedTableReader lr(left), rr(right);
  auto l = lr.next();
  auto r = rr.next();
  while (l || r) {
    if (l && (!r || l->key < r->key)) {
      fn(l->key, l->value, std::nullopt);
      l = lr.next();
    } else if (r && (!l || r->key < l->key)) {
      fn(r->key, std::nullopt, r->value);
      r = rr.next();
    } else {
      fn(l->key, l->value, r->value);
      l = lr.next();
      r = rr.next();
    }
  }
}

}  // namespace elda
