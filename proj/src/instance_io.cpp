#include "sdpforge/instance_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdpforge/error.hpp"

namespace sdpforge {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Span span_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() ||
      !j[1].is_number_unsigned()) {
    throw Error(Errc::kSchemaMismatch, where + ": span must be [start, end]");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

void expect_fields(const json& obj, std::initializer_list<const char*> fields,
                   const std::string& where) {
  for (const char* f : fields) {
    if (!obj.contains(f)) {
      throw Error(Errc::kSchemaMismatch, where + ": missing field '" + f + "'");
    }
  }
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* f : fields) known = known || key == f;
    if (!known) {
      throw Error(Errc::kSchemaMismatch, where + ": unexpected field '" + key + "'");
    }
  }
}

}  // namespace

std::string to_json_line(const InstanceRecord& r) {
  ordered_json j;
  j["tokens"] = r.tokens;
  j["e1"] = {r.e1.start, r.e1.end};
  j["e2"] = {r.e2.start, r.e2.end};
  j["label"] = r.label;
  j["domain"] = r.domain;
  if (const auto* s = std::get_if<SilverProvenance>(&r.provenance)) {
    j["provenance"] = {{"file", s->file},     {"sent_id", s->sent_id},
                       {"deprel", s->deprel}, {"head", s->head},
                       {"dep", s->dep}};
  } else {
    const auto& g = std::get<GoldProvenance>(r.provenance);
    j["provenance"] = {
        {"doc_id", g.doc_id}, {"head", g.head_entity}, {"tail", g.tail_entity}};
  }
  return j.dump();
}

InstanceRecord instance_from_json(std::string_view line, std::string_view where_sv) {
  const std::string where(where_sv);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kSchemaMismatch, where + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::kSchemaMismatch, where + ": not an object");
  expect_fields(j, {"tokens", "e1", "e2", "label", "domain", "provenance"}, where);
  InstanceRecord r;
  try {
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.label = j.at("label").get<std::string>();
    r.domain = j.at("domain").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaMismatch, where + ": " + e.what());
  }
  r.e1 = span_from_json(j.at("e1"), where);
  r.e2 = span_from_json(j.at("e2"), where);
  const json& p = j.at("provenance");
  if (!p.is_object()) throw Error(Errc::kSchemaMismatch, where + ": provenance must be an object");
  try {
    if (p.contains("file")) {
      expect_fields(p, {"file", "sent_id", "deprel", "head", "dep"}, where + " provenance");
      r.provenance = SilverProvenance{p.at("file").get<std::string>(),
                                      p.at("sent_id").get<std::string>(),
                                      p.at("deprel").get<std::string>(),
                                      p.at("head").get<int>(), p.at("dep").get<int>()};
    } else {
      expect_fields(p, {"doc_id", "head", "tail"}, where + " provenance");
      r.provenance = GoldProvenance{p.at("doc_id").get<std::string>(),
                                    p.at("head").get<std::string>(),
                                    p.at("tail").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaMismatch, where + " provenance: " + e.what());
  }
  if (r.e1.start >= r.e1.end || r.e2.start >= r.e2.end ||
      r.e1.end > r.tokens.size() || r.e2.end > r.tokens.size()) {
    throw Error(Errc::kSchemaMismatch, where + ": span outside tokens");
  }
  return r;
}

std::vector<InstanceRecord> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::vector<InstanceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(instance_from_json(line, path.string() + ":" + std::to_string(line_no)));
  }
  return out;
}

std::string serialize_instances(std::span<const InstanceRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  return out;
}

void write_instances(const std::filesystem::path& path,
                     std::span<const InstanceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << serialize_instances(records);
}

MarkedInstance mark_instance(std::span<const std::string> tokens, Span e1,
                             Span e2, std::string label, Provenance provenance) {
  for (const Span& s : {e1, e2}) {
    if (s.start >= s.end || s.end > tokens.size()) {
      throw Error(Errc::kSpanOutOfRange,
                  "[" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                      ") over " + std::to_string(tokens.size()) + " tokens");
    }
  }
  if (e1.overlaps(e2)) {
    throw Error(Errc::kOverlappingSpans,
                "[" + std::to_string(e1.start) + ", " + std::to_string(e1.end) +
                    ") and [" + std::to_string(e2.start) + ", " +
                    std::to_string(e2.end) + ")");
  }
  MarkedInstance m;
  m.label = std::move(label);
  m.provenance = std::move(provenance);
  m.tokens.reserve(tokens.size() + 4);
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i == e1.end) {
      m.e1_end_pos = m.tokens.size();
      m.tokens.emplace_back(kE1End);
    }
    if (i == e2.end) {
      m.e2_end_pos = m.tokens.size();
      m.tokens.emplace_back(kE2End);
    }
    if (i == e1.start) {
      m.e1_start_pos = m.tokens.size();
      m.tokens.emplace_back(kE1Start);
    }
    if (i == e2.start) {
      m.e2_start_pos = m.tokens.size();
      m.tokens.emplace_back(kE2Start);
    }
    if (i < tokens.size()) m.tokens.push_back(tokens[i]);
  }
  return m;
}

MarkedInstance mark_instance(const InstanceRecord& record) {
  return mark_instance(record.tokens, record.e1, record.e2, record.label,
                       record.provenance);
}

std::vector<std::string> unmark(const MarkedInstance& instance) {
  std::vector<std::string> out;
  out.reserve(instance.tokens.size() >= 4 ? instance.tokens.size() - 4 : 0);
  for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
    if (i == instance.e1_start_pos || i == instance.e1_end_pos ||
        i == instance.e2_start_pos || i == instance.e2_end_pos) {
      continue;
    }
    out.push_back(instance.tokens[i]);
  }
  return out;
}

}  // namespace sdpforge
