#include "helpers.hpp"

#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace sdpforge::testing {

std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(SDPFORGE_TEST_DATA) / name;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParsedSentence load_one(const std::string& fixture) {
  auto result = read_conllu_file(data_path(fixture));
  if (!result.ok() || result.sentences.size() != 1) {
    throw std::runtime_error("fixture " + fixture + " does not hold one valid sentence");
  }
  return result.sentences.front();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("sdpforge-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ParsedSentence random_tree(std::size_t n, Rng& rng) {
  static const char* kLabels[] = {"nsubj", "obj", "obl", "nmod", "appos", "amod",
                                  "det",   "case", "conj", "punct", "nmod:poss"};
  // perm[k] is the sentence position of the k-th node in attachment order.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  ParsedSentence s;
  s.sent_id = "random";
  s.tokens.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens[i].index = static_cast<int>(i + 1);
    s.tokens[i].form = "t" + std::to_string(i + 1);
  }
  for (std::size_t k = 0; k < n; ++k) {
    Token& t = s.tokens[perm[k]];
    if (k == 0) {
      t.head = 0;
      t.deprel = "root";
    } else {
      t.head = static_cast<int>(perm[rng.uniform_index(k)] + 1);
      t.deprel = kLabels[rng.uniform_index(std::size(kLabels))];
    }
    t.raw_deprel = t.deprel;
  }
  return s;
}

OraclePath bfs_path(const ParsedSentence& s, std::size_t a, std::size_t b) {
  const std::size_t n = s.tokens.size();
  std::vector<std::vector<std::pair<std::size_t, std::string>>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int h = s.tokens[i].head;
    if (h <= 0) continue;
    std::string label = s.tokens[i].deprel.substr(0, s.tokens[i].deprel.find(':'));
    adj[i].push_back({static_cast<std::size_t>(h - 1), label});
    adj[static_cast<std::size_t>(h - 1)].push_back({i, label});
  }
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> prev(n, none);
  std::vector<std::string> via(n);
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{a};
  seen[a] = true;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (const auto& [v, label] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      prev[v] = u;
      via[v] = label;
      queue.push_back(v);
    }
  }
  OraclePath out;
  if (!seen[b]) return out;
  out.reachable = true;
  for (std::size_t v = b; v != a; v = prev[v]) out.labels.insert(out.labels.begin(), via[v]);
  out.length = out.labels.size();
  return out;
}

}  // namespace sdpforge::testing
