#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leakdet {

/// Maximal common substrings.
///
/// Returns every byte string of length >= `min_len` that occurs in all of
/// `contents` and is not a proper substring of another such string. When
/// `separator` is set, no returned string contains that byte.
///
/// Every common substring starting at position i of the shortest input is
/// a prefix of the longest common extension from i, so those extensions
/// contain all maximal tokens. Extensions shrink by at most one per step,
/// which keeps the scan linear in the length of the shortest input.
inline std::set<std::string> common_tokens(std::span<const std::string> contents, std::size_t min_len,
                                           std::optional<char> separator = std::nullopt) {
  std::set<std::string> out;
  if (contents.empty() || min_len == 0) return out;

  const auto shortest_it = std::min_element(contents.begin(), contents.end(),
                                            [](const auto& a, const auto& b) { return a.size() < b.size(); });
  const std::string_view base = *shortest_it;
  std::vector<std::string_view> others;
  for (auto it = contents.begin(); it != contents.end(); ++it) {
    if (it != shortest_it) others.emplace_back(*it);
  }
  auto common = [&](std::string_view s) {
    return std::all_of(others.begin(), others.end(), [&](auto o) { return o.find(s) != std::string_view::npos; });
  };

  std::vector<std::string_view> candidates;
  std::size_t len = 0;  // longest common extension from the previous start, minus one
  for (std::size_t i = 0; i < base.size(); ++i) {
    len = len > 0 ? len - 1 : 0;
    while (i + len < base.size() && (!separator || base[i + len] != *separator) &&
           common(base.substr(i, len + 1))) {
      ++len;
    }
    if (len >= min_len) candidates.push_back(base.substr(i, len));
  }

  // Keep candidates not strictly inside another candidate. Longest first so
  // each is only compared against strings that could contain it.
  std::sort(candidates.begin(), candidates.end(),
            [](auto a, auto b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  std::vector<std::string_view> kept;
  for (auto c : candidates) {
    const bool inside = std::any_of(kept.begin(), kept.end(), [&](auto k) {
      return k.size() > c.size() && k.find(c) != std::string_view::npos;
    });
    if (!inside) {
      kept.push_back(c);
      out.emplace(c);
    }
  }
  return out;
}

/// HTTP boilerplate that on its own would match nearly every request.
inline const std::vector<std::string>& default_blocklist() {
  static const std::vector<std::string> list = {"GET ", "POST ", " HTTP/1.1", "HTTP/1.0", "Cookie:", "&", "=", "?"};
  return list;
}

/// True when `token` is a blocklist entry or a concatenation of entries.
inline bool is_blocklisted(std::string_view token, std::span<const std::string> blocklist) {
  if (token.empty()) return true;
  // reachable[i]: token[0, i) splits into blocklist entries.
  std::vector<char> reachable(token.size() + 1, 0);
  reachable[0] = 1;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (!reachable[i]) continue;
    for (const auto& entry : blocklist) {
      if (!entry.empty() && token.substr(i).starts_with(entry)) reachable[i + entry.size()] = 1;
    }
  }
  return reachable[token.size()] != 0;
}

}  // namespace leakdet
