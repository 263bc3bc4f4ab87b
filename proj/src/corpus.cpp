#include "sdpforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sdpforge/random.hpp"

namespace sdpforge {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename Fn>
void for_each_json_line(std::string_view text, std::string_view source,
                        Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::kSchemaMismatch, std::string(source) + ":" +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    }
    if (!value.is_object()) {
      throw Error(Errc::kSchemaMismatch, std::string(source) + ":" +
                                             std::to_string(line_no) +
                                             ": expected a JSON object");
    }
    fn(value, line_no);
  }
}

// Checks that `obj` has exactly `required` (plus any of `optional`).
void check_fields(const json& obj, std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional,
                  const std::string& where) {
  for (auto field : required) {
    if (!obj.contains(field)) {
      throw Error(Errc::kSchemaMismatch,
                  where + ": missing field '" + std::string(field) + "'");
    }
  }
  for (const auto& [key, _] : obj.items()) {
    bool known =
        std::find(required.begin(), required.end(), key) != required.end() ||
        std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) {
      throw Error(Errc::kSchemaMismatch,
                  where + ": unexpected field '" + key + "'");
    }
  }
}

template <typename T>
T get_as(const json& obj, std::string_view field, const std::string& where) {
  try {
    return obj.at(field).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaMismatch,
                where + ": field '" + std::string(field) + "': " + e.what());
  }
}

int split_rank(std::string_view split) {
  if (split == "train") return 0;
  if (split == "dev") return 1;
  if (split == "test") return 2;
  return 3;
}

struct SplitLess {
  bool operator()(const std::string& a, const std::string& b) const {
    int ra = split_rank(a), rb = split_rank(b);
    return ra != rb ? ra < rb : a < b;
  }
};

}  // namespace

const EntitySpan* CorpusRecord::find_entity(std::string_view id) const {
  for (const auto& e : entities) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void validate_record(const CorpusRecord& record) {
  auto fail = [&](const std::string& what) {
    throw Error(Errc::kInvariantViolation, "doc " + record.doc_id + ": " + what);
  };
  std::set<std::string_view> ids;
  for (const auto& e : record.entities) {
    if (e.start >= e.end || e.end > record.tokens.size()) {
      fail("entity " + e.id + " span [" + std::to_string(e.start) + ", " +
           std::to_string(e.end) + ") invalid for " +
           std::to_string(record.tokens.size()) + " tokens");
    }
    if (!ids.insert(e.id).second) fail("duplicate entity id " + e.id);
  }
  std::set<std::pair<std::string_view, std::string_view>> pairs;
  for (const auto& r : record.relations) {
    if (!ids.count(r.head_entity)) fail("unknown head entity " + r.head_entity);
    if (!ids.count(r.tail_entity)) fail("unknown tail entity " + r.tail_entity);
    if (r.head_entity == r.tail_entity) fail("self relation on " + r.head_entity);
    if (r.label.empty()) fail("empty relation label");
    if (!pairs.insert({r.head_entity, r.tail_entity}).second) {
      fail("duplicate relation pair (" + r.head_entity + ", " + r.tail_entity +
           ")");
    }
  }
}

Adapter parse_adapter(std::string_view name) {
  if (name == "canonical") return Adapter::kCanonical;
  if (name == "crossre") return Adapter::kCrossRe;
  throw Error(Errc::kUnknownAdapter, std::string(name));
}

CrossReMapping CrossReMapping::from_json_file(
    const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::kInvalidConfig, path.string() + ": " + e.what());
  }
  CrossReMapping m;
  const std::string where = path.string();
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      field = get_as<std::decay_t<decltype(field)>>(j, key, where);
    }
  };
  opt("doc_id_field", m.doc_id_field);
  opt("tokens_field", m.tokens_field);
  opt("entities_field", m.entities_field);
  opt("entity_start", m.entity_start);
  opt("entity_end", m.entity_end);
  opt("entity_type", m.entity_type);
  opt("relations_field", m.relations_field);
  opt("relation_head_start", m.relation_head_start);
  opt("relation_head_end", m.relation_head_end);
  opt("relation_tail_start", m.relation_tail_start);
  opt("relation_tail_end", m.relation_tail_end);
  opt("relation_label", m.relation_label);
  opt("end_inclusive", m.end_inclusive);
  opt("ignored_fields", m.ignored_fields);
  if (j.contains("filename_separator")) {
    auto sep = get_as<std::string>(j, "filename_separator", where);
    if (sep.size() != 1) {
      throw Error(Errc::kInvalidConfig, where + ": filename_separator must be one character");
    }
    m.filename_separator = sep[0];
  }
  return m;
}

std::vector<CorpusRecord> parse_canonical(std::string_view text,
                                          std::string_view source) {
  std::vector<CorpusRecord> records;
  for_each_json_line(text, source, [&](const json& obj, std::size_t line_no) {
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    check_fields(obj, {"doc_id", "domain", "tokens", "entities", "relations"},
                 {"split"}, where);
    CorpusRecord rec;
    rec.doc_id = get_as<std::string>(obj, "doc_id", where);
    rec.domain = get_as<std::string>(obj, "domain", where);
    if (obj.contains("split")) rec.split = get_as<std::string>(obj, "split", where);
    rec.tokens = get_as<std::vector<std::string>>(obj, "tokens", where);
    for (const auto& e : obj.at("entities")) {
      const std::string ewhere = where + " entity";
      check_fields(e, {"id", "start", "end", "etype"}, {}, ewhere);
      rec.entities.push_back({get_as<std::string>(e, "id", ewhere),
                              get_as<std::size_t>(e, "start", ewhere),
                              get_as<std::size_t>(e, "end", ewhere),
                              get_as<std::string>(e, "etype", ewhere)});
    }
    for (const auto& r : obj.at("relations")) {
      const std::string rwhere = where + " relation";
      check_fields(r, {"head", "tail", "label"}, {}, rwhere);
      rec.relations.push_back({get_as<std::string>(r, "head", rwhere),
                               get_as<std::string>(r, "tail", rwhere),
                               get_as<std::string>(r, "label", rwhere)});
    }
    validate_record(rec);
    records.push_back(std::move(rec));
  });
  return records;
}

std::vector<CorpusRecord> parse_crossre(std::string_view text,
                                        std::string_view domain,
                                        std::string_view split,
                                        const CrossReMapping& m,
                                        std::string_view source) {
  std::vector<CorpusRecord> records;
  std::vector<std::string_view> optional_fields(m.ignored_fields.begin(),
                                                m.ignored_fields.end());
  for_each_json_line(text, source, [&](const json& obj, std::size_t line_no) {
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    for (const auto& field : {m.doc_id_field, m.tokens_field, m.entities_field,
                              m.relations_field}) {
      if (!obj.contains(field)) {
        throw Error(Errc::kSchemaMismatch, where + ": missing field '" + field + "'");
      }
    }
    for (const auto& [key, _] : obj.items()) {
      bool known = key == m.doc_id_field || key == m.tokens_field ||
                   key == m.entities_field || key == m.relations_field ||
                   std::find(optional_fields.begin(), optional_fields.end(),
                             key) != optional_fields.end();
      if (!known) {
        throw Error(Errc::kSchemaMismatch, where + ": unexpected field '" + key + "'");
      }
    }
    CorpusRecord rec;
    rec.doc_id = get_as<std::string>(obj, m.doc_id_field, where);
    rec.domain = std::string(domain);
    rec.split = std::string(split);
    rec.tokens = get_as<std::vector<std::string>>(obj, m.tokens_field, where);
    const std::size_t end_adjust = m.end_inclusive ? 1 : 0;

    auto element = [&](const json& arr, std::size_t i, const char* what) -> const json& {
      if (!arr.is_array() || i >= arr.size()) {
        throw Error(Errc::kSchemaMismatch,
                    where + ": " + what + " entry lacks position " + std::to_string(i));
      }
      return arr[i];
    };
    auto as_index = [&](const json& v) -> std::size_t {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw Error(Errc::kSchemaMismatch, where + ": expected a token index, got " + v.dump());
      }
      return v.get<std::size_t>();
    };

    std::map<std::pair<std::size_t, std::size_t>, std::string> span_ids;
    for (const auto& e : obj.at(m.entities_field)) {
      EntitySpan span;
      span.id = "T" + std::to_string(rec.entities.size());
      span.start = as_index(element(e, m.entity_start, "entity"));
      span.end = as_index(element(e, m.entity_end, "entity")) + end_adjust;
      const json& type = element(e, m.entity_type, "entity");
      if (!type.is_string()) {
        throw Error(Errc::kSchemaMismatch, where + ": entity type is not a string");
      }
      span.etype = type.get<std::string>();
      span_ids.emplace(std::make_pair(span.start, span.end), span.id);
      rec.entities.push_back(std::move(span));
    }
    for (const auto& r : obj.at(m.relations_field)) {
      auto lookup = [&](std::size_t s_pos, std::size_t e_pos) {
        std::size_t s = as_index(element(r, s_pos, "relation"));
        std::size_t e = as_index(element(r, e_pos, "relation")) + end_adjust;
        auto it = span_ids.find({s, e});
        if (it == span_ids.end()) {
          throw Error(Errc::kInvariantViolation,
                      "doc " + rec.doc_id + ": relation argument [" +
                          std::to_string(s) + ", " + std::to_string(e) +
                          ") is not an annotated entity");
        }
        return it->second;
      };
      RelationInstance rel;
      rel.head_entity = lookup(m.relation_head_start, m.relation_head_end);
      rel.tail_entity = lookup(m.relation_tail_start, m.relation_tail_end);
      const json& label = element(r, m.relation_label, "relation");
      if (!label.is_string()) {
        throw Error(Errc::kSchemaMismatch, where + ": relation label is not a string");
      }
      rel.label = label.get<std::string>();
      rec.relations.push_back(std::move(rel));
    }
    validate_record(rec);
    records.push_back(std::move(rec));
  });
  return records;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& file,
                                      Adapter adapter,
                                      const CrossReMapping& mapping) {
  std::string text = read_file(file);
  if (adapter == Adapter::kCanonical) {
    return parse_canonical(text, file.string());
  }
  std::string stem = file.stem().string();
  std::size_t sep = stem.rfind(mapping.filename_separator);
  if (sep == std::string::npos) {
    throw Error(Errc::kSchemaMismatch,
                file.string() + ": expected a file name like <domain>" +
                    mapping.filename_separator + "<split>.json");
  }
  return parse_crossre(text, stem.substr(0, sep), stem.substr(sep + 1),
                       mapping, file.string());
}

std::string serialize_canonical(std::span<const CorpusRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    ordered_json j;
    j["doc_id"] = rec.doc_id;
    j["domain"] = rec.domain;
    if (!rec.split.empty()) j["split"] = rec.split;
    j["tokens"] = rec.tokens;
    j["entities"] = ordered_json::array();
    for (const auto& e : rec.entities) {
      j["entities"].push_back(
          {{"id", e.id}, {"start", e.start}, {"end", e.end}, {"etype", e.etype}});
    }
    j["relations"] = ordered_json::array();
    for (const auto& r : rec.relations) {
      j["relations"].push_back(
          {{"head", r.head_entity}, {"tail", r.tail_entity}, {"label", r.label}});
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const std::filesystem::path& file,
                 std::span<const CorpusRecord> records) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + file.string());
  out << serialize_canonical(records);
}

std::vector<CandidatePair> candidate_pairs(const CorpusRecord& record) {
  std::map<std::pair<std::string_view, std::string_view>, std::string_view> gold;
  for (const auto& r : record.relations) {
    gold[{r.head_entity, r.tail_entity}] = r.label;
  }
  std::vector<CandidatePair> out;
  const std::size_t n = record.entities.size();
  out.reserve(n * (n > 0 ? n - 1 : 0));
  for (const auto& head : record.entities) {
    for (const auto& tail : record.entities) {
      if (&head == &tail) continue;
      auto it = gold.find({head.id, tail.id});
      out.push_back({head.id, tail.id,
                     std::string(it == gold.end() ? kNoRelation : it->second)});
    }
  }
  return out;
}

std::vector<CandidatePair> cap_negatives(std::vector<CandidatePair> pairs,
                                         std::size_t max_negatives,
                                         std::uint64_t seed,
                                         std::string_view doc_id) {
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == kNoRelation) negatives.push_back(i);
  }
  if (negatives.size() <= max_negatives) return pairs;
  Rng rng(derive_seed(seed, doc_id));
  std::vector<bool> keep(pairs.size(), true);
  for (std::size_t i : negatives) keep[i] = false;
  for (std::size_t k : rng.sample_without_replacement(negatives.size(), max_negatives)) {
    keep[negatives[k]] = true;
  }
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(std::move(pairs[i]));
  }
  return out;
}

std::vector<AlignedSentence> align(std::span<const CorpusRecord> corpus,
                                   std::span<const ParsedSentence> parses) {
  if (corpus.size() != parses.size()) {
    throw Error(Errc::kLengthMismatch,
                std::to_string(corpus.size()) + " records vs " +
                    std::to_string(parses.size()) + " parsed sentences");
  }
  std::vector<AlignedSentence> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tokens = corpus[i].tokens;
    const auto& parsed = parses[i].tokens;
    const std::size_t common = std::min(tokens.size(), parsed.size());
    std::size_t diverge = common;
    for (std::size_t k = 0; k < common; ++k) {
      if (tokens[k] != parsed[k].form) {
        diverge = k;
        break;
      }
    }
    if (diverge != common || tokens.size() != parsed.size()) {
      throw Error(Errc::kTokenMismatch,
                  "record " + std::to_string(i) + " (doc " + corpus[i].doc_id +
                      ", sent_id " + parses[i].sent_id + ") diverges at token " +
                      std::to_string(diverge));
    }
    out.push_back({&corpus[i], &parses[i]});
  }
  return out;
}

SplitCounts DatasetStats::domain_total(std::string_view domain) const {
  SplitCounts sum;
  for (const auto& [key, c] : cells) {
    if (key.first == domain) sum += c;
  }
  return sum;
}

SplitCounts DatasetStats::split_total(std::string_view split) const {
  SplitCounts sum;
  for (const auto& [key, c] : cells) {
    if (key.second == split) sum += c;
  }
  return sum;
}

SplitCounts DatasetStats::total() const {
  SplitCounts sum;
  for (const auto& [_, c] : cells) sum += c;
  return sum;
}

std::string DatasetStats::to_tsv() const {
  std::set<std::string> domains;
  std::set<std::string, SplitLess> splits;
  for (const auto& [key, _] : cells) {
    domains.insert(key.first);
    splits.insert(key.second);
  }
  std::ostringstream os;
  os << "domain\tsplit\tsentences\trelations\n";
  auto row = [&os](std::string_view d, std::string_view s, const SplitCounts& c) {
    os << d << '\t' << s << '\t' << c.sentences << '\t' << c.relations << '\n';
  };
  for (const auto& d : domains) {
    for (const auto& s : splits) {
      auto it = cells.find({d, s});
      if (it != cells.end()) row(d, s, it->second);
    }
    row(d, "total", domain_total(d));
  }
  if (!cells.empty()) {
    for (const auto& s : splits) row("total", s, split_total(s));
    row("total", "total", total());
  }
  return os.str();
}

std::string DatasetStats::to_json() const {
  ordered_json j;
  j["cells"] = ordered_json::array();
  std::set<std::string> domains;
  std::set<std::string, SplitLess> splits;
  for (const auto& [key, _] : cells) {
    domains.insert(key.first);
    splits.insert(key.second);
  }
  for (const auto& d : domains) {
    for (const auto& s : splits) {
      auto it = cells.find({d, s});
      if (it == cells.end()) continue;
      j["cells"].push_back({{"domain", d},
                            {"split", s},
                            {"sentences", it->second.sentences},
                            {"relations", it->second.relations}});
    }
  }
  j["per_relation"] = ordered_json::object();
  for (const auto& [label, n] : per_relation) j["per_relation"][label] = n;
  auto t = total();
  j["total"] = {{"sentences", t.sentences}, {"relations", t.relations}};
  return j.dump(2) + "\n";
}

DatasetStats dataset_stats(std::span<const CorpusRecord> corpus) {
  DatasetStats stats;
  for (const auto& rec : corpus) {
    auto& cell = stats.cells[{rec.domain, rec.split}];
    cell.sentences += 1;
    cell.relations += static_cast<std::int64_t>(rec.relations.size());
    for (const auto& r : rec.relations) stats.per_relation[r.label] += 1;
  }
  return stats;
}

}  // namespace sdpforge
