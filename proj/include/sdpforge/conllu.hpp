#pragma once

// CoNLL-U reading, validation and writing.
//
// Only the basic tree (HEAD/DEPREL columns) is interpreted. Multiword-token
// lines ("2-3"), empty nodes ("5.1"), comments and the enhanced DEPS column
// are carried through untouched so that a file that parses cleanly serializes
// back to the same bytes.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdpforge/error.hpp"

namespace sdpforge {

struct Token {
  int index = 0;  // ID column, 1-based
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = root
  std::string deprel;  // lowercased, subtype suffix kept ("nmod:poss")
  std::string deps = "_";
  std::string misc = "_";
  // DEPREL as written in the file. Emitted on serialization as long as it
  // still lowercases to `deprel`; otherwise `deprel` wins.
  std::string raw_deprel;
};

// A line that is not part of the basic tree, anchored after `position`
// tokens of its sentence.
struct PassthroughLine {
  std::size_t position = 0;
  std::string text;
};

struct ParsedSentence {
  std::string sent_id;
  std::string domain = "unknown";
  std::vector<Token> tokens;
  std::vector<PassthroughLine> passthrough;
  // Newlines before the first line and after the last line of the block.
  // The defaults give one blank line between sentences.
  std::size_t leading_newlines = 0;
  std::size_t trailing_newlines = 2;

  std::size_t size() const { return tokens.size(); }
  // "#"-prefixed passthrough lines, in order.
  std::vector<std::string> raw_comments() const;
  std::vector<std::string> forms() const;
};

struct ConlluIssue {
  Errc code;
  std::string sent_id;
  std::size_t line = 0;  // 1-based line in the input; 0 when not line-bound
  int token = 0;         // offending token ID, 0 when not token-bound
  std::string message;

  std::string describe() const;
};

struct ParseResult {
  // Sentences without any issue. A block that produced an issue is left out
  // so downstream code only ever sees valid trees.
  std::vector<ParsedSentence> sentences;
  std::vector<ConlluIssue> errors;
  std::size_t blocks = 0;

  bool ok() const { return errors.empty(); }
};

// Domain comes from a "# domain = X" comment, else `default_domain`.
// sent_id comes from "# sent_id = X", else the 1-based block number.
ParseResult parse_conllu(std::string_view text,
                         std::string_view default_domain = "unknown");

ParseResult read_conllu_file(const std::filesystem::path& path,
                             std::string_view default_domain = "unknown");

std::string serialize_conllu(std::span<const ParsedSentence> sentences);

void write_conllu_file(const std::filesystem::path& path,
                       std::span<const ParsedSentence> sentences);

struct Violation {
  Errc code;
  int token = 0;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

// Empty iff: token IDs run 1..n, every head is in [0, n] and differs from
// its own ID, deprels are non-empty, there is exactly one root, and
// following heads from any token reaches the root.
ValidationReport validate_tree(const ParsedSentence& sentence);

}  // namespace sdpforge
