#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "leakdet/aho_corasick.hpp"
#include "leakdet/clustering.hpp"
#include "leakdet/codec.hpp"
#include "leakdet/error.hpp"
#include "leakdet/record.hpp"
#include "leakdet/tokens.hpp"

namespace leakdet {

/// Separates the content fields in the matching view. Tokens never contain it.
inline constexpr char kFieldSeparator = '\0';

/// request_line, cookie and body joined by kFieldSeparator. Both signature
/// generation and matching operate on this view.
inline std::string content_view(const HttpRecord& r) {
  std::string v;
  v.reserve(r.request_line.size() + r.cookie.size() + r.body.size() + 2);
  v += r.request_line;
  v += kFieldSeparator;
  v += r.cookie;
  v += kFieldSeparator;
  v += r.body;
  return v;
}

struct SignatureMetadata {
  int compressor_level = 9;
  double tau = 1.0;
  std::size_t min_token_len = 5;
  std::uint64_t seed = 0;
  std::size_t n_sample = 0;
  bool low_generality = false;  // generated from a single record

  friend bool operator==(const SignatureMetadata&, const SignatureMetadata&) = default;
};

/// A set of invariant tokens; a record matches only if every token occurs.
class ConjunctionSignature {
 public:
  /// Throws ValidationError on an empty token set, an empty token, or a
  /// token contained in a sibling.
  ConjunctionSignature(std::string id, std::vector<std::string> tokens, std::size_t source_cluster_size,
                       SignatureMetadata metadata)
      : id_(std::move(id)),
        tokens_(std::move(tokens)),
        source_cluster_size_(source_cluster_size),
        metadata_(metadata) {
    if (tokens_.empty()) throw ValidationError("signature " + id_ + " has no tokens");
    if (source_cluster_size_ == 0) throw ValidationError("signature " + id_ + " has an empty source cluster");
    std::sort(tokens_.begin(), tokens_.end());
    tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
    for (const auto& t : tokens_) {
      if (t.empty()) throw ValidationError("signature " + id_ + " has an empty token");
      for (const auto& u : tokens_) {
        if (&t != &u && u.find(t) != std::string::npos) {
          throw ValidationError("signature " + id_ + " has a token contained in another token");
        }
      }
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t source_cluster_size() const { return source_cluster_size_; }
  const SignatureMetadata& metadata() const { return metadata_; }

  friend bool operator==(const ConjunctionSignature&, const ConjunctionSignature&) = default;

 private:
  std::string id_;
  std::vector<std::string> tokens_;  // sorted, unique
  std::size_t source_cluster_size_;
  SignatureMetadata metadata_;
};

inline bool matches_view(const ConjunctionSignature& sig, std::string_view view) {
  return std::all_of(sig.tokens().begin(), sig.tokens().end(),
                     [&](const std::string& t) { return view.find(t) != std::string_view::npos; });
}

inline bool matches(const ConjunctionSignature& sig, const HttpRecord& record) {
  return matches_view(sig, content_view(record));
}

// ---------------------------------------------------------------------------
// Generation

/// Id of the signature generated from cluster `c` of a flat clustering.
inline std::string signature_id_for_cluster(std::size_t c) {
  char id[32];
  std::snprintf(id, sizeof id, "sig-%04zu", c);
  return id;
}

struct SignatureConfig {
  std::size_t min_token_len = 5;
  std::vector<std::string> blocklist = default_blocklist();
  int compressor_level = 9;
  std::uint64_t seed = 0;
  std::size_t n_sample = 0;
  /// Receives a message for each cluster that yields no usable token.
  std::function<void(const std::string&)> warn;
};

/// One signature per cluster that keeps at least one token after the
/// length and blocklist filters. Ids are "sig-NNNN" in cluster order.
inline std::vector<ConjunctionSignature> generate_signatures(const FlatClusters& clusters,
                                                             std::span<const HttpRecord> records,
                                                             const SignatureConfig& cfg) {
  std::vector<ConjunctionSignature> out;
  for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
    const auto& members = clusters.clusters[c];
    if (members.empty()) continue;
    std::vector<std::string> views;
    views.reserve(members.size());
    for (auto idx : members) {
      if (idx >= records.size()) throw std::out_of_range("cluster member index out of range");
      views.push_back(content_view(records[idx]));
    }

    std::vector<std::string> tokens;
    for (auto& t : common_tokens(views, cfg.min_token_len, kFieldSeparator)) {
      if (!is_blocklisted(t, cfg.blocklist)) tokens.push_back(t);
    }
    if (tokens.empty()) {
      if (cfg.warn) {
        cfg.warn(std::string("cluster ") + std::to_string(c) + " (" + std::to_string(members.size()) +
                 " records) has no usable common token; dropped");
      }
      continue;
    }
    SignatureMetadata meta{cfg.compressor_level, clusters.tau, cfg.min_token_len, cfg.seed, cfg.n_sample,
                           members.size() == 1};
    out.emplace_back(signature_id_for_cluster(c), std::move(tokens), members.size(), meta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection

struct Verdict {
  std::vector<std::size_t> signatures;  // indices into the signature list, ascending

  bool detected() const { return !signatures.empty(); }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Reference detector: every token of every signature searched directly.
inline std::vector<Verdict> detect_naive(std::span<const ConjunctionSignature> sigs,
                                         std::span<const HttpRecord> records) {
  std::vector<Verdict> out(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto view = content_view(records[r]);
    for (std::size_t s = 0; s < sigs.size(); ++s) {
      if (matches_view(sigs[s], view)) out[r].signatures.push_back(s);
    }
  }
  return out;
}

/// Multi-pattern detector. One automaton pass per record over the union of
/// all tokens, then a per-signature count of distinct tokens seen.
class Detector {
 public:
  explicit Detector(std::span<const ConjunctionSignature> sigs) : sig_sizes_(sigs.size()) {
    std::vector<std::string> unique;
    for (const auto& s : sigs) unique.insert(unique.end(), s.tokens().begin(), s.tokens().end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    owners_.resize(unique.size());
    for (const auto& t : unique) automaton_.add(t);
    automaton_.build();
    for (std::size_t s = 0; s < sigs.size(); ++s) {
      sig_sizes_[s] = sigs[s].tokens().size();
      for (const auto& t : sigs[s].tokens()) {
        const auto pos = std::lower_bound(unique.begin(), unique.end(), t) - unique.begin();
        owners_[static_cast<std::size_t>(pos)].push_back(s);
      }
    }
  }

  Verdict check(std::string_view view) const {
    std::vector<char> seen(owners_.size(), 0);
    std::vector<std::size_t> hits(sig_sizes_.size(), 0);
    Verdict v;
    automaton_.scan(view, [&](std::size_t token) {
      if (seen[token]) return;
      seen[token] = 1;
      for (auto s : owners_[token]) ++hits[s];
    });
    for (std::size_t s = 0; s < hits.size(); ++s) {
      if (hits[s] == sig_sizes_[s]) v.signatures.push_back(s);
    }
    return v;
  }

  Verdict check(const HttpRecord& record) const { return check(content_view(record)); }

 private:
  AhoCorasick automaton_;
  std::vector<std::vector<std::size_t>> owners_;  // token -> signatures containing it
  std::vector<std::size_t> sig_sizes_;
};

inline std::vector<Verdict> detect(std::span<const ConjunctionSignature> sigs, std::span<const HttpRecord> records) {
  std::vector<Verdict> out(records.size());
  if (sigs.empty()) return out;
  const Detector detector(sigs);
  for (std::size_t r = 0; r < records.size(); ++r) out[r] = detector.check(records[r]);
  return out;
}

// ---------------------------------------------------------------------------
// Signature file

inline nlohmann::ordered_json signatures_to_json(std::span<const ConjunctionSignature> sigs) {
  std::vector<const ConjunctionSignature*> sorted;
  for (const auto& s : sigs) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id() < b->id(); });

  auto arr = nlohmann::ordered_json::array();
  for (const auto* s : sorted) {
    nlohmann::ordered_json j;
    j["id"] = s->id();
    auto tokens = nlohmann::ordered_json::array();
    for (const auto& t : s->tokens()) tokens.push_back(base64_encode(t));
    j["tokens"] = std::move(tokens);
    j["source_cluster_size"] = s->source_cluster_size();
    const auto& m = s->metadata();
    j["metadata"] = {{"compressor_level", m.compressor_level}, {"tau", m.tau},
                     {"min_token_len", m.min_token_len},       {"seed", m.seed},
                     {"n_sample", m.n_sample},                 {"low_generality", m.low_generality}};
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<ConjunctionSignature> signatures_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ParseError("signature file must be a JSON array");
  std::vector<ConjunctionSignature> out;
  for (const auto& j : arr) {
    try {
      std::vector<std::string> tokens;
      for (const auto& t : j.at("tokens")) tokens.push_back(base64_decode(t.get<std::string>()));
      const auto& m = j.at("metadata");
      SignatureMetadata meta{m.at("compressor_level").get<int>(), m.at("tau").get<double>(),
                             m.at("min_token_len").get<std::size_t>(), m.at("seed").get<std::uint64_t>(),
                             m.at("n_sample").get<std::size_t>(), m.value("low_generality", false)};
      out.emplace_back(j.at("id").get<std::string>(), std::move(tokens), j.at("source_cluster_size").get<std::size_t>(),
                       meta);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed signature: ") + e.what());
    }
  }
  return out;
}

}  // namespace leakdet
