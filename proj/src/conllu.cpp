#include "sdpforge/conllu.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace sdpforge {

namespace {

constexpr std::size_t kColumns = 10;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

// Canonical non-negative integer: digits only, no leading zero except "0".
std::optional<int> parse_canonical_int(std::string_view s) {
  if (!all_digits(s) || (s.size() > 1 && s[0] == '0') || s.size() > 9) {
    return std::nullopt;
  }
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// "2-3" (multiword token) or "5.1" (empty node).
bool is_passthrough_id(std::string_view id) {
  for (char sep : {'-', '.'}) {
    std::size_t pos = id.find(sep);
    if (pos != std::string_view::npos) {
      return all_digits(id.substr(0, pos)) && all_digits(id.substr(pos + 1));
    }
  }
  return false;
}

// Value of a "# key = value" comment, if the line is one.
std::optional<std::string> comment_value(std::string_view line,
                                         std::string_view key) {
  if (line.empty() || line[0] != '#') return std::nullopt;
  std::string_view rest = line.substr(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.substr(0, key.size()) != key) return std::nullopt;
  rest.remove_prefix(key.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty() || rest.front() != '=') return std::nullopt;
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
  return std::string(rest);
}

struct Block {
  std::size_t first_line = 0;  // 1-based
  std::vector<std::string_view> lines;
  std::size_t leading_newlines = 0;
  std::size_t trailing_newlines = 0;
};

std::vector<Block> split_blocks(std::string_view text) {
  std::vector<Block> blocks;
  std::size_t pending_newlines = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  Block current;
  bool in_block = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    bool has_newline = nl != std::string_view::npos;
    std::string_view line =
        text.substr(pos, has_newline ? nl - pos : std::string_view::npos);
    pos = has_newline ? nl + 1 : text.size();
    ++line_no;
    if (line.empty()) {
      // Only reachable with a newline: an empty final segment ends the loop.
      if (in_block) {
        blocks.push_back(std::move(current));
        current = Block{};
        in_block = false;
        pending_newlines = 0;
        blocks.back().trailing_newlines = 2;
      } else if (!blocks.empty()) {
        ++blocks.back().trailing_newlines;
      } else {
        ++pending_newlines;
      }
      continue;
    }
    if (!in_block) {
      in_block = true;
      current.first_line = line_no;
      current.leading_newlines = pending_newlines;
      pending_newlines = 0;
    }
    current.lines.push_back(line);
    current.trailing_newlines = has_newline ? 1 : 0;
  }
  if (in_block) blocks.push_back(std::move(current));
  return blocks;
}

void check_tree(const ParsedSentence& sentence,
                std::vector<Violation>& out) {
  const int n = static_cast<int>(sentence.tokens.size());
  if (n == 0) {
    out.push_back({Errc::kNoRoot, 0, "sentence has no tokens"});
    return;
  }
  std::vector<int> roots;
  bool heads_in_range = true;
  for (int i = 0; i < n; ++i) {
    const Token& t = sentence.tokens[i];
    if (t.index != i + 1) {
      out.push_back({Errc::kMalformedLine, t.index,
                     "token ID " + std::to_string(t.index) +
                         " at position " + std::to_string(i + 1)});
    }
    if (t.deprel.empty()) {
      out.push_back({Errc::kEmptyDeprel, i + 1, "empty deprel"});
    }
    if (t.head < 0 || t.head > n) {
      out.push_back({Errc::kHeadOutOfRange, i + 1,
                     "head " + std::to_string(t.head) + " outside [0, " +
                         std::to_string(n) + "]"});
      heads_in_range = false;
    } else if (t.head == i + 1) {
      out.push_back({Errc::kCycleDetected, i + 1, "token is its own head"});
    } else if (t.head == 0) {
      roots.push_back(i + 1);
    }
  }
  if (roots.empty()) {
    out.push_back({Errc::kNoRoot, 0, "no token has head 0"});
  } else if (roots.size() > 1) {
    for (std::size_t r = 1; r < roots.size(); ++r) {
      out.push_back({Errc::kMultipleRoots, roots[r],
                     "additional root besides token " +
                         std::to_string(roots[0])});
    }
  }
  if (!heads_in_range) return;

  // 0 = unvisited, 1 = on current walk, 2 = reaches the root.
  std::vector<char> state(n + 1, 0);
  state[0] = 2;
  std::vector<int> walk;
  for (int start = 1; start <= n; ++start) {
    if (state[start] != 0) continue;
    walk.clear();
    int node = start;
    while (state[node] == 0) {
      state[node] = 1;
      walk.push_back(node);
      int head = sentence.tokens[node - 1].head;
      if (head == node) break;  // self-loop, reported above
      node = head;
    }
    if (state[node] == 1 && sentence.tokens[node - 1].head != node) {
      // Cycle: the walk from `node` onwards. Name its smallest member.
      auto it = std::find(walk.begin(), walk.end(), node);
      int smallest = *std::min_element(it, walk.end());
      std::ostringstream members;
      for (auto m = it; m != walk.end(); ++m) {
        if (m != it) members << "->";
        members << *m;
      }
      out.push_back({Errc::kCycleDetected, smallest,
                     "cycle " + members.str()});
    }
    for (int m : walk) state[m] = 2;
  }
}

}  // namespace

std::vector<std::string> ParsedSentence::raw_comments() const {
  std::vector<std::string> comments;
  for (const auto& line : passthrough) {
    if (!line.text.empty() && line.text[0] == '#') comments.push_back(line.text);
  }
  return comments;
}

std::vector<std::string> ParsedSentence::forms() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.form);
  return out;
}

std::string ConlluIssue::describe() const {
  std::ostringstream os;
  os << to_string(code) << "\tsent_id=" << sent_id;
  if (line) os << "\tline=" << line;
  if (token) os << "\ttoken=" << token;
  os << "\t" << message;
  return os.str();
}

ParseResult parse_conllu(std::string_view text,
                         std::string_view default_domain) {
  ParseResult result;
  std::vector<Block> blocks = split_blocks(text);
  result.blocks = blocks.size();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& block = blocks[b];
    ParsedSentence sentence;
    sentence.sent_id = std::to_string(b + 1);
    sentence.domain = std::string(default_domain);
    sentence.leading_newlines = block.leading_newlines;
    sentence.trailing_newlines = block.trailing_newlines;

    // Header comments first so every issue carries the right sent_id.
    for (std::string_view line : block.lines) {
      if (auto id = comment_value(line, "sent_id")) sentence.sent_id = *id;
      if (auto domain = comment_value(line, "domain")) sentence.domain = *domain;
    }

    std::size_t issues_before = result.errors.size();
    auto report = [&](Errc code, std::size_t line, int token,
                      std::string message) {
      result.errors.push_back(
          {code, sentence.sent_id, line, token, std::move(message)});
    };

    for (std::size_t i = 0; i < block.lines.size(); ++i) {
      std::string_view line = block.lines[i];
      const std::size_t line_no = block.first_line + i;
      if (line[0] == '#') {
        sentence.passthrough.push_back({sentence.tokens.size(), std::string(line)});
        continue;
      }
      auto fields = split_tabs(line);
      if (fields.size() != kColumns) {
        report(Errc::kMalformedLine, line_no, 0,
               "expected 10 tab-separated columns, found " +
                   std::to_string(fields.size()));
        continue;
      }
      if (is_passthrough_id(fields[0])) {
        sentence.passthrough.push_back({sentence.tokens.size(), std::string(line)});
        continue;
      }
      auto id = parse_canonical_int(fields[0]);
      if (!id || *id == 0) {
        report(Errc::kMalformedLine, line_no, 0,
               "bad token ID '" + std::string(fields[0]) + "'");
        continue;
      }
      auto head = parse_canonical_int(fields[6]);
      if (!head) {
        report(Errc::kNonIntegerHead, line_no, *id,
               "head '" + std::string(fields[6]) + "' is not an integer");
        continue;
      }
      Token token;
      token.index = *id;
      token.form = std::string(fields[1]);
      token.lemma = std::string(fields[2]);
      token.upos = std::string(fields[3]);
      token.xpos = std::string(fields[4]);
      token.feats = std::string(fields[5]);
      token.head = *head;
      token.raw_deprel = std::string(fields[7]);
      token.deprel = lowercase(fields[7]);
      token.deps = std::string(fields[8]);
      token.misc = std::string(fields[9]);
      if (token.index != static_cast<int>(sentence.tokens.size()) + 1) {
        report(Errc::kMalformedLine, line_no, token.index,
               "token ID out of sequence, expected " +
                   std::to_string(sentence.tokens.size() + 1));
      }
      sentence.tokens.push_back(std::move(token));
    }

    if (result.errors.size() == issues_before) {
      std::vector<Violation> violations;
      check_tree(sentence, violations);
      for (auto& v : violations) {
        std::size_t line_no = block.first_line;
        if (v.token > 0) {
          // Line of the token: count non-token lines ahead of it.
          std::size_t seen = 0;
          for (std::size_t i = 0; i < block.lines.size(); ++i) {
            std::string_view l = block.lines[i];
            if (l[0] == '#' || is_passthrough_id(l.substr(0, l.find('\t')))) {
              continue;
            }
            if (++seen == static_cast<std::size_t>(v.token)) {
              line_no = block.first_line + i;
              break;
            }
          }
        }
        report(v.code, line_no, v.token, std::move(v.message));
      }
    }
    if (result.errors.size() == issues_before) {
      result.sentences.push_back(std::move(sentence));
    }
  }
  return result;
}

ParseResult read_conllu_file(const std::filesystem::path& path,
                             std::string_view default_domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_conllu(buffer.str(), default_domain);
}

std::string serialize_conllu(std::span<const ParsedSentence> sentences) {
  std::string out;
  auto emit_token = [&out](const Token& t) {
    const std::string& deprel =
        (!t.raw_deprel.empty() && lowercase(t.raw_deprel) == t.deprel)
            ? t.raw_deprel
            : t.deprel;
    out += std::to_string(t.index);
    for (const std::string* col :
         {&t.form, &t.lemma, &t.upos, &t.xpos, &t.feats}) {
      out += '\t';
      out += *col;
    }
    out += '\t';
    out += std::to_string(t.head);
    for (const std::string* col : {&deprel, &t.deps, &t.misc}) {
      out += '\t';
      out += *col;
    }
  };
  for (const auto& s : sentences) {
    out.append(s.leading_newlines, '\n');
    bool first = true;
    auto newline = [&] {
      if (!first) out += '\n';
      first = false;
    };
    std::size_t next_pass = 0;
    for (std::size_t i = 0; i <= s.tokens.size(); ++i) {
      while (next_pass < s.passthrough.size() &&
             s.passthrough[next_pass].position <= i) {
        newline();
        out += s.passthrough[next_pass++].text;
      }
      if (i < s.tokens.size()) {
        newline();
        emit_token(s.tokens[i]);
      }
    }
    while (next_pass < s.passthrough.size()) {
      newline();
      out += s.passthrough[next_pass++].text;
    }
    out.append(s.trailing_newlines, '\n');
  }
  return out;
}

void write_conllu_file(const std::filesystem::path& path,
                       std::span<const ParsedSentence> sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << serialize_conllu(sentences);
}

ValidationReport validate_tree(const ParsedSentence& sentence) {
  ValidationReport report;
  check_tree(sentence, report);
  return report;
}

}  // namespace sdpforge
