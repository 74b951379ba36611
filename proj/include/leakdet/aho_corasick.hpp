#pragma once

#include <array>
#include <cstdint>
#include <queue>
#include <string_view>
#include <vector>

namespace leakdet {

/// Byte-level Aho-Corasick automaton with a dense transition table.
///
/// Call add() for every pattern, then build(), then scan(). Patterns must
/// be non-empty.
class AhoCorasick {
 public:
  AhoCorasick() { nodes_.emplace_back(); }

  std::size_t add(std::string_view pattern) {
    std::int32_t cur = 0;
    for (unsigned char c : pattern) {
      if (nodes_[cur].next[c] < 0) {
        nodes_[cur].next[c] = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      cur = nodes_[cur].next[c];
    }
    const std::size_t id = pattern_count_++;
    nodes_[cur].terminal.push_back(id);
    return id;
  }

  void build() {
    std::queue<std::int32_t> bfs;
    for (auto& child : nodes_[0].next) {
      if (child < 0) {
        child = 0;
      } else {
        nodes_[child].fail = 0;
        bfs.push(child);
      }
    }
    while (!bfs.empty()) {
      const std::int32_t u = bfs.front();
      bfs.pop();
      const std::int32_t f = nodes_[u].fail;
      // Nearest proper suffix state that ends a pattern.
      nodes_[u].output = nodes_[f].terminal.empty() ? nodes_[f].output : f;
      for (int c = 0; c < 256; ++c) {
        std::int32_t& v = nodes_[u].next[c];
        if (v < 0) {
          v = nodes_[f].next[c];
        } else {
          nodes_[v].fail = nodes_[f].next[c];
          bfs.push(v);
        }
      }
    }
    built_ = true;
  }

  std::size_t pattern_count() const { return pattern_count_; }

  /// Calls on_match(pattern_id) for every occurrence in `text`.
  template <class F>
  void scan(std::string_view text, F&& on_match) const {
    std::int32_t cur = 0;
    for (unsigned char c : text) {
      cur = nodes_[cur].next[c];
      for (std::int32_t s = cur; s > 0; s = nodes_[s].output) {
        for (auto id : nodes_[s].terminal) on_match(id);
      }
    }
  }

  bool built() const { return built_; }

 private:
  struct Node {
    Node() { next.fill(-1); }
    std::array<std::int32_t, 256> next;
    std::int32_t fail = 0;
    std::int32_t output = 0;  // 0 = none (the root never ends a pattern)
    std::vector<std::size_t> terminal;
  };

  std::vector<Node> nodes_;
  std::size_t pattern_count_ = 0;
  bool built_ = false;
};

}  // namespace leakdet
