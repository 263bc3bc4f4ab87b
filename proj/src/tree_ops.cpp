#include "sdpforge/tree_ops.hpp"

#include <algorithm>

namespace sdpforge {

namespace {

void require_valid(const ParsedSentence& sentence) {
  auto report = validate_tree(sentence);
  if (!report.empty()) {
    throw Error(Errc::kInvalidTree, "sentence " + sentence.sent_id + ": " +
                                        std::string(to_string(report[0].code)) +
                                        " " + report[0].message);
  }
}

// Distance to the root, bounded so malformed input cannot loop forever.
std::size_t depth_of(const ParsedSentence& sentence, std::size_t pos) {
  std::size_t depth = 0;
  const std::size_t n = sentence.tokens.size();
  while (auto g = governor(sentence, pos)) {
    pos = *g;
    if (++depth > n) {
      throw Error(Errc::kInvalidTree,
                  "sentence " + sentence.sent_id + " contains a cycle");
    }
  }
  return depth;
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::kUp ? "up" : "down";
}

std::string_view base_deprel(std::string_view deprel) {
  return deprel.substr(0, deprel.find(':'));
}

std::optional<std::size_t> governor(const ParsedSentence& sentence,
                                    std::size_t pos) {
  int head = sentence.tokens[pos].head;
  if (head <= 0 || head > static_cast<int>(sentence.tokens.size())) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(head - 1);
}

ParsedSentence propagate_conj(ParsedSentence sentence) {
  require_valid(sentence);
  auto& tokens = sentence.tokens;
  // Every rewrite lifts a token one level, so n passes always suffice; the
  // loop normally exits after the first pass without a change.
  for (std::size_t pass = 0; pass <= tokens.size(); ++pass) {
    bool changed = false;
    for (auto& tok : tokens) {
      if (base_deprel(tok.deprel) != "conj" || tok.head == 0) continue;
      const Token& gov = tokens[tok.head - 1];
      std::string_view gov_rel = base_deprel(gov.deprel);
      if (gov_rel == "conj" || gov_rel == "root" || gov.head == 0) continue;
      tok.head = gov.head;
      tok.deprel = gov.deprel;
      changed = true;
    }
    if (!changed) break;
  }
  return sentence;
}

std::size_t span_head(const ParsedSentence& sentence, std::size_t start,
                      std::size_t end) {
  if (start >= end) {
    throw Error(Errc::kEmptySpan, "[" + std::to_string(start) + ", " +
                                      std::to_string(end) + ")");
  }
  if (end > sentence.tokens.size()) {
    throw Error(Errc::kSpanOutOfRange,
                "[" + std::to_string(start) + ", " + std::to_string(end) +
                    ") in sentence of " +
                    std::to_string(sentence.tokens.size()) + " tokens");
  }
  for (std::size_t i = start; i < end; ++i) {
    auto g = governor(sentence, i);
    if (!g || *g < start || *g >= end) return i;
  }
  // Only reachable when the span contains a cycle.
  throw Error(Errc::kInvalidTree,
              "no token of the span is headed outside it in sentence " +
                  sentence.sent_id);
}

DependencyPath shortest_path(const ParsedSentence& sentence, std::size_t a,
                             std::size_t b) {
  const std::size_t n = sentence.tokens.size();
  if (a >= n || b >= n) {
    throw Error(Errc::kIndexOutOfRange,
                "positions " + std::to_string(a) + ", " + std::to_string(b) +
                    " in sentence of " + std::to_string(n) + " tokens");
  }
  DependencyPath path{a, b, {}};
  std::size_t depth_a = depth_of(sentence, a);
  std::size_t depth_b = depth_of(sentence, b);

  auto edge_to_governor = [&](std::size_t pos, Direction dir) {
    std::size_t g = *governor(sentence, pos);
    return PathEdge{g, pos, sentence.tokens[pos].deprel, dir};
  };

  std::vector<PathEdge> descent;  // collected from b upwards, reversed later
  std::size_t x = a;
  std::size_t y = b;
  while (depth_a > depth_b) {
    path.edges.push_back(edge_to_governor(x, Direction::kUp));
    x = path.edges.back().governor;
    --depth_a;
  }
  while (depth_b > depth_a) {
    descent.push_back(edge_to_governor(y, Direction::kDown));
    y = descent.back().governor;
    --depth_b;
  }
  while (x != y) {
    path.edges.push_back(edge_to_governor(x, Direction::kUp));
    x = path.edges.back().governor;
    descent.push_back(edge_to_governor(y, Direction::kDown));
    y = descent.back().governor;
  }
  path.edges.insert(path.edges.end(), descent.rbegin(), descent.rend());
  return path;
}

std::vector<std::string> path_labels(const DependencyPath& path) {
  std::vector<std::string> labels;
  labels.reserve(path.edges.size());
  for (const auto& e : path.edges) {
    labels.emplace_back(base_deprel(e.deprel));
  }
  return labels;
}

}  // namespace sdpforge
