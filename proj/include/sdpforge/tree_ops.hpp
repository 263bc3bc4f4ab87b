#pragma once

// Tree algorithms over ParsedSentence.
//
// Positions in this API are 0-based offsets into ParsedSentence::tokens
// (token ID minus one). Spans are [start, end) in the same coordinates, which
// are also the coordinates of entity spans in corpus records.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdpforge/conllu.hpp"

namespace sdpforge {

enum class Direction { kUp, kDown };

std::string_view to_string(Direction d);

struct PathEdge {
  std::size_t governor = 0;
  std::size_t dependent = 0;
  std::string deprel;
  Direction direction = Direction::kUp;

  friend bool operator==(const PathEdge&, const PathEdge&) = default;
};

struct DependencyPath {
  std::size_t source = 0;
  std::size_t target = 0;
  std::vector<PathEdge> edges;

  std::size_t length() const { return edges.size(); }
};

// "nmod:poss" -> "nmod".
std::string_view base_deprel(std::string_view deprel);

// Position of the governor, or nullopt for the root.
std::optional<std::size_t> governor(const ParsedSentence& sentence,
                                    std::size_t pos);

// Rewrites conjunct attachments until a fixpoint: a token attached by "conj"
// to a governor whose own relation is neither "conj" nor "root" takes over
// that governor's head and relation. Conjuncts of the root stay as they are,
// and so do conjuncts of any governor attached to head 0, since moving them
// would create a second root. Throws Error(kInvalidTree) on invalid input.
ParsedSentence propagate_conj(ParsedSentence sentence);

// Leftmost token in [start, end) whose head is outside the span or is the
// root. Throws kEmptySpan / kSpanOutOfRange.
std::size_t span_head(const ParsedSentence& sentence, std::size_t start,
                      std::size_t end);

// The unique tree path from `a` to `b`: edges climbing from `a` to the lowest
// common ancestor are kUp, edges descending from there to `b` are kDown.
// Throws kIndexOutOfRange, or kInvalidTree if the heads do not form a tree.
DependencyPath shortest_path(const ParsedSentence& sentence, std::size_t a,
                             std::size_t b);

// Subtype-stripped deprels of the path edges, in path order.
std::vector<std::string> path_labels(const DependencyPath& path);

}  // namespace sdpforge
