#include "corpusscope/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "corpusscope/errors.hpp"

namespace corpusscope {

namespace {

constexpr std::string_view kStripped = ".,!?;:\"()[]";

std::vector<std::string> split_list(std::string_view field, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char c : field) {
    if (c == sep) {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

// RFC 4180 records: quoted fields may hold separators, doubled quotes and
// newlines. Each record is returned with the line it starts on.
struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> parse_csv(std::string_view doc) {
  std::vector<CsvRecord> records;
  CsvRecord rec{1, {}};
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  auto end_record = [&] {
    if (any || !field.empty() || !rec.fields.empty()) {
      rec.fields.push_back(field);
      records.push_back(std::move(rec));
    }
    field.clear();
    rec = CsvRecord{line, {}};
    any = false;
  };
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const char c = doc[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < doc.size() && doc[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        rec.fields.push_back(field);
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        any = true;
    }
  }
  if (quoted) throw IngestError(rec.line, "unterminated quoted field");
  end_record();
  return records;
}

Utterance make_utterance(std::size_t line, std::string id, std::string text, std::string label,
                         std::vector<std::string> frames, std::vector<std::string> tags) {
  if (id.empty()) throw IngestError(line, "missing id");
  if (label.empty()) throw IngestError(line, "missing label");
  Utterance u;
  u.tokens = tokenize(text);
  if (u.tokens.empty()) throw IngestError(line, "utterance '" + id + "' has no tokens");
  u.id = std::move(id);
  u.text = std::move(text);
  u.label = std::move(label);
  u.frames = std::move(frames);
  u.tags.insert(tags.begin(), tags.end());
  return u;
}

void push_unique(std::vector<Utterance>& out, std::unordered_set<std::string>& seen,
                 std::size_t line, Utterance u) {
  if (!seen.insert(u.id).second) throw IngestError(line, "duplicate id '" + u.id + "'");
  out.push_back(std::move(u));
}

std::vector<Utterance> parse_jsonl(std::string_view doc) {
  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(doc)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw IngestError(line_no, "record is not a JSON object");
    auto get_string = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end()) throw IngestError(line_no, std::string("missing ") + key);
      if (!it->is_string()) throw IngestError(line_no, std::string(key) + " must be a string");
      return it->get<std::string>();
    };
    auto get_list = [&](const char* key) -> std::vector<std::string> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return {};
      if (!it->is_array()) throw IngestError(line_no, std::string(key) + " must be an array");
      std::vector<std::string> values;
      for (const auto& v : *it) {
        if (!v.is_string()) throw IngestError(line_no, std::string(key) + " entries must be strings");
        values.push_back(v.get<std::string>());
      }
      return values;
    };
    auto id = get_string("id");
    auto text = get_string("text");
    auto label = get_string("label");
    push_unique(out, seen, line_no,
                make_utterance(line_no, std::move(id), std::move(text), std::move(label),
                               get_list("frames"), get_list("tags")));
  }
  return out;
}

std::vector<Utterance> parse_csv_corpus(std::string_view doc) {
  auto records = parse_csv(doc);
  if (records.empty()) return {};
  const auto& header = records.front().fields;
  auto column = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int id_col = column("id"), text_col = column("text"), label_col = column("label");
  const int frames_col = column("frames"), tags_col = column("tags");
  if (id_col < 0 || text_col < 0 || label_col < 0)
    throw IngestError(1, "CSV header must contain id,text,label");

  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    auto field = [&](int col) -> std::string {
      if (col < 0) return {};
      if (static_cast<std::size_t>(col) >= rec.fields.size())
        throw IngestError(rec.line, "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(rec.fields.size()));
      return rec.fields[static_cast<std::size_t>(col)];
    };
    push_unique(out, seen, rec.line,
                make_utterance(rec.line, field(id_col), field(text_col), field(label_col),
                               split_list(field(frames_col), '|'),
                               split_list(field(tags_col), '|')));
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (kStripped.find(ch) == std::string_view::npos) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Corpus::Corpus(std::string name, std::vector<Utterance> utterances)
    : name_(std::move(name)), utterances_(std::move(utterances)) {
  std::unordered_set<std::string> ids;
  std::set<std::string> labels;
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& u = utterances_[i];
    if (u.id.empty()) throw InputError("utterance " + std::to_string(i) + " has an empty id");
    if (!ids.insert(u.id).second) throw InputError("duplicate utterance id '" + u.id + "'");
    if (u.tokens.empty()) throw InputError("utterance '" + u.id + "' has no tokens");
    if (u.label.empty()) throw InputError("utterance '" + u.id + "' has an empty label");
    labels.insert(u.label);
  }
  labels_.assign(labels.begin(), labels.end());
}

int Corpus::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return -1;
  return static_cast<int>(it - labels_.begin());
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices, std::string name) const {
  std::vector<Utterance> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(utterances_.at(i));
  return Corpus(name.empty() ? name_ : std::move(name), std::move(picked));
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
}

Corpus parse_corpus(std::string_view document, CorpusFormat format, std::string name) {
  auto utterances = format == CorpusFormat::Csv ? parse_csv_corpus(document) : parse_jsonl(document);
  return Corpus(std::move(name), std::move(utterances));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), format, path.stem().string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  return load_corpus(path, format_from_path(path));
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& u : corpus.utterances()) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["text"] = u.text;
    j["label"] = u.label;
    if (!u.frames.empty()) j["frames"] = u.frames;
    if (!u.tags.empty()) j["tags"] = std::vector<std::string>(u.tags.begin(), u.tags.end());
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_jsonl(corpus);
}

LabelMapping LabelMapping::identity(const std::vector<std::string>& labels) {
  LabelMapping m;
  for (const auto& l : labels) m.rules[l] = l;
  return m;
}

void LabelMapping::validate() const {
  for (const auto& [from, to] : rules) {
    if (to.empty()) throw MappingError("rule for '" + from + "' has an empty target label");
    if (drop.count(from)) throw MappingError("label '" + from + "' is both mapped and dropped");
  }
}

Corpus apply_label_mapping(const Corpus& corpus, const LabelMapping& mapping) {
  mapping.validate();
  std::vector<std::string> unmapped;
  for (const auto& label : corpus.labels())
    if (!mapping.rules.count(label) && !mapping.drop.count(label)) unmapped.push_back(label);
  if (!unmapped.empty()) {
    std::string list;
    for (const auto& l : unmapped) list += (list.empty() ? "" : ", ") + l;
    throw MappingError("unmapped labels: " + list);
  }
  std::vector<Utterance> kept;
  for (const auto& u : corpus.utterances()) {
    if (mapping.drop.count(u.label)) continue;
    Utterance copy = u;
    copy.label = mapping.rules.at(u.label);
    kept.push_back(std::move(copy));
  }
  return Corpus(corpus.name(), std::move(kept));
}

namespace {
Corpus filter_tag(const Corpus& corpus, std::string_view tag, bool keep_tagged) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].has_tag(tag) == keep_tagged) idx.push_back(i);
  return corpus.subset(idx);
}
}  // namespace

Corpus filter_by_tag(const Corpus& corpus, std::string_view tag) { return filter_tag(corpus, tag, true); }

Corpus filter_without_tag(const Corpus& corpus, std::string_view tag) {
  return filter_tag(corpus, tag, false);
}

std::map<std::string, std::size_t> class_histogram(const Corpus& corpus) {
  std::map<std::string, std::size_t> h;
  for (const auto& u : corpus.utterances()) ++h[u.label];
  return h;
}

std::map<std::string, std::size_t> tag_histogram(const Corpus& corpus) {
  std::map<std::string, std::size_t> h;
  for (const auto& u : corpus.utterances())
    for (const auto& t : u.tags) ++h[t];
  return h;
}

}  // namespace corpusscope
