#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdpforge/conllu.hpp"
#include "sdpforge/random.hpp"

namespace sdpforge::testing {

std::filesystem::path data_path(const std::string& name);
std::string read_text(const std::filesystem::path& path);
ParsedSentence load_one(const std::string& fixture);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Uniformly random attachment tree: token i+1 hangs off a random earlier
// token after a random relabelling of positions, so roots and depths vary.
ParsedSentence random_tree(std::size_t n, Rng& rng);

// Shortest path by breadth-first search over the undirected edge set,
// ignoring any tree structure. Labels are subtype-stripped, in order from
// a to b.
struct OraclePath {
  std::size_t length = 0;
  std::vector<std::string> labels;
  bool reachable = false;
};
OraclePath bfs_path(const ParsedSentence& sentence, std::size_t a, std::size_t b);

}  // namespace sdpforge::testing
