#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace elda {

// Bag of tokens: content words and entity mentions, both plain vocabulary
// strings. Corpus tables key documents as "D/<doc-id>".
struct Document {
  std::string id;
  std::vector<std::string> words;
  std::vector<std::string> mentions;
};

std::string encode_document(const Document& doc);
Document decode_document(const std::string& doc_id, const std::string& value);

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<Document> read_corpus(const std::filesystem::path& path);

// Gold labels: one line per labeled mention, "doc_id<TAB>mention_index<TAB>topic_id".
struct GoldRecord {
  std::string doc_id;
  uint32_t mention_index = 0;
  uint32_t topic = 0;
};

void write_gold(const std::filesystem::path& path, const std::vector<GoldRecord>& gold);
std::vector<GoldRecord> read_gold(const std::filesystem::path& path);

// One annotated mention. topic == -1 means "no prediction".
struct Annotation {
  std::string doc_id;
  uint32_t mention_index = 0;
  std::string mention;
  int64_t topic = -1;
};

// Text lines: doc_id, mention index, mention string, topic id, title.
void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& anns,
                       const std::vector<std::string>* titles);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);

}  // namespace elda
