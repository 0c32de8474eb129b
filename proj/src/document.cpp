#include "elda/document.hpp"

#include <fstream>

#include "elda/common.hpp"
#include "elda/sorted_table.hpp"

namespace elda {

std::string encode_document(const Document& doc) {
  std::string v;
  put_u32(v, static_cast<uint32_t>(doc.words.size()));
  for (const auto& w : doc.words) put_str(v, w);
  put_u32(v, static_cast<uint32_t>(doc.mentions.size()));
  for (const auto& m : doc.mentions) put_str(v, m);
  return v;
}

Document decode_document(const std::string& doc_id, const std::string& value) {
  Document doc;
  doc.id = doc_id;
  ByteReader r(value, "document \"" + doc_id + "\"");
  uint32_t nw = r.u32();
  doc.words.reserve(nw);
  for (uint32_t i = 0; i < nw; ++i) doc.words.push_back(r.str());
  uint32_t nm = r.u32();
  doc.mentions.reserve(nm);
  for (uint32_t i = 0; i < nm; ++i) doc.mentions.push_back(r.str());
  r.expect_done();
  return doc;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::vector<TableRecord> recs;
  recs.reserve(docs.size());
  for (const auto& d : docs) recs.push_back({"D/" + d.id, encode_document(d)});
  std::sort(recs.begin(), recs.end(),
            [](const TableRecord& a, const TableRecord& b) { return a.key < b.key; });
  write_table(path, recs);
}

std::vector<Document> read_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  SortedTableReader r(path);
  while (auto rec = r.next()) {
    if (rec->key.size() < 2 || rec->key.compare(0, 2, "D/") != 0)
      throw DataError(path.string() + ": corpus key \"" + rec->key + "\" lacks D/ prefix");
    docs.push_back(decode_document(rec->key.substr(2), rec->value));
  }
  return docs;
}

void write_gold(const std::filesystem::path& path, const std::vector<GoldRecord>& gold) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  for (const auto& g : gold)
    out << g.doc_id << '\t' << g.mention_index << '\t' << g.topic << '\n';
  out.close();
  if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<GoldRecord> read_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::vector<GoldRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError(path.string() + ": malformed gold line " + std::to_string(lineno));
    GoldRecord g;
    g.doc_id = line.substr(0, t1);
    try {
      g.mention_index = static_cast<uint32_t>(std::stoul(line.substr(t1 + 1, t2 - t1 - 1)));
      g.topic = static_cast<uint32_t>(std::stoul(line.substr(t2 + 1)));
    } catch (...) {
      throw DataError(path.string() + ": malformed gold line " + std::to_string(lineno));
    }
    out.push_back(std::move(g));
  }
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& anns,
                       const std::vector<std::string>* titles) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  for (const auto& a : anns) {
    const char* title = "-";
    if (titles && a.topic >= 0 && static_cast<size_t>(a.topic) < titles->size())
      title = (*titles)[static_cast<size_t>(a.topic)].c_str();
    out << a.doc_id << '\t' << a.mention_index << '\t' << a.mention << '\t' << a.topic << '\t'
        << title << '\n';
  }
  out.close();
  if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::vector<Annotation> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> parts;
    size_t start = 0;
    while (parts.size() < 4) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) break;
      parts.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    parts.push_back(line.substr(start));
    if (parts.size() != 5)
      throw DataError(path.string() + ": malformed annotation line " + std::to_string(lineno));
    Annotation a;
    a.doc_id = parts[0];
    try {
      a.mention_index = static_cast<uint32_t>(std::stoul(parts[1]));
      a.topic = std::stoll(parts[3]);
    } catch (...) {
      throw DataError(path.string() + ": malformed annotation line " + std::to_string(lineno));
    }
    a.mention = parts[2];
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace elda
