#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "leakdet/codec.hpp"
#include "leakdet/error.hpp"

namespace leakdet {

/// IPv4 address held in host byte order.
struct Ipv4 {
  std::uint32_t value = 0;

  friend bool operator==(Ipv4, Ipv4) = default;

  static Ipv4 from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return Ipv4{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }

  /// Strict dotted quad: four decimal octets, no leading '+', no empty parts.
  static std::optional<Ipv4> parse(std::string_view text) {
    std::uint32_t out = 0;
    std::size_t pos = 0;
    for (int part = 0; part < 4; ++part) {
      if (part > 0) {
        if (pos >= text.size() || text[pos] != '.') return std::nullopt;
        ++pos;
      }
      std::size_t start = pos;
      unsigned octet = 0;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        octet = octet * 10 + static_cast<unsigned>(text[pos] - '0');
        if (octet > 255 || pos - start >= 3) return std::nullopt;
        ++pos;
      }
      if (pos == start) return std::nullopt;
      out = (out << 8) | octet;
    }
    if (pos != text.size()) return std::nullopt;
    return Ipv4{out};
  }

  std::string to_string() const {
    return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
           std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
  }
};

enum class SensitiveKind {
  AndroidId,
  AndroidIdMd5,
  AndroidIdSha1,
  Imei,
  ImeiMd5,
  ImeiSha1,
  Imsi,
  SimSerial,
  Carrier,
};

inline constexpr std::array<SensitiveKind, 9> kAllSensitiveKinds = {
    SensitiveKind::AndroidId, SensitiveKind::AndroidIdMd5, SensitiveKind::AndroidIdSha1,
    SensitiveKind::Imei,      SensitiveKind::ImeiMd5,      SensitiveKind::ImeiSha1,
    SensitiveKind::Imsi,      SensitiveKind::SimSerial,    SensitiveKind::Carrier,
};

inline std::string_view to_string(SensitiveKind kind) {
  switch (kind) {
    case SensitiveKind::AndroidId: return "AndroidId";
    case SensitiveKind::AndroidIdMd5: return "AndroidIdMd5";
    case SensitiveKind::AndroidIdSha1: return "AndroidIdSha1";
    case SensitiveKind::Imei: return "Imei";
    case SensitiveKind::ImeiMd5: return "ImeiMd5";
    case SensitiveKind::ImeiSha1: return "ImeiSha1";
    case SensitiveKind::Imsi: return "Imsi";
    case SensitiveKind::SimSerial: return "SimSerial";
    case SensitiveKind::Carrier: return "Carrier";
  }
  return "";
}

inline std::optional<SensitiveKind> sensitive_kind_from_string(std::string_view name) {
  for (auto kind : kAllSensitiveKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

/// One observed HTTP GET/POST request. Byte-string fields may hold any bytes.
struct HttpRecord {
  std::string app_id;
  Ipv4 dst_ip;
  std::uint32_t dst_port = 0;
  std::string host;
  std::string request_line;
  std::string cookie;
  std::string body;
  std::set<SensitiveKind> labels;

  bool suspicious() const { return !labels.empty(); }

  friend bool operator==(const HttpRecord&, const HttpRecord&) = default;
};

/// Throws ValidationError when `r` breaks a record invariant.
inline void validate(const HttpRecord& r) {
  if (r.dst_port > 65535) throw ValidationError("dst_port out of range: " + std::to_string(r.dst_port));
  if (r.host.empty()) throw ValidationError("host is empty");
  if (std::any_of(r.host.begin(), r.host.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw ValidationError("host contains whitespace");
  }
  if (r.request_line.empty()) throw ValidationError("request_line is empty");
}

struct DeviceProfile {
  std::string android_id;
  std::string imei;
  std::string imsi;
  std::string sim_serial;
  std::string carrier;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

inline void validate(const DeviceProfile& p) {
  const std::array<const std::string*, 5> fields = {&p.android_id, &p.imei, &p.imsi, &p.sim_serial,
                                                    &p.carrier};
  for (auto* f : fields) {
    if (f->empty()) throw ValidationError("device profile field is empty");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (*fields[i] == *fields[j]) throw ValidationError("device identifiers must be pairwise distinct");
    }
  }
}

inline DeviceProfile parse_profile(const nlohmann::json& j) {
  DeviceProfile p;
  auto field = [&](const char* name) {
    if (!j.contains(name)) throw ParseError(std::string("missing field: ") + name);
    if (!j[name].is_string()) throw ParseError(std::string("invalid field: ") + name);
    return j[name].get<std::string>();
  };
  if (!j.is_object()) throw ParseError("device profile must be a JSON object");
  p.android_id = field("android_id");
  p.imei = field("imei");
  p.imsi = field("imsi");
  p.sim_serial = field("sim_serial");
  p.carrier = field("carrier");
  validate(p);
  return p;
}

inline nlohmann::ordered_json profile_to_json(const DeviceProfile& p) {
  return {{"android_id", p.android_id}, {"imei", p.imei},       {"imsi", p.imsi},
          {"sim_serial", p.sim_serial}, {"carrier", p.carrier}};
}

// ---------------------------------------------------------------------------
// JSON Lines record format

inline HttpRecord parse_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object");

  auto require = [&](const char* name) -> const nlohmann::json& {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field: ") + name);
    return *it;
  };
  auto string_field = [&](const char* name) {
    const auto& v = require(name);
    if (!v.is_string()) throw ParseError(std::string("invalid field: ") + name);
    return v.get<std::string>();
  };
  auto bytes_field = [&](const char* name) {
    try {
      return base64_decode(string_field(name));
    } catch (const ParseError&) {
      throw ParseError(std::string("invalid field: ") + name);
    }
  };

  HttpRecord r;
  r.app_id = string_field("app_id");
  auto ip = Ipv4::parse(string_field("dst_ip"));
  if (!ip) throw ParseError("invalid field: dst_ip");
  r.dst_ip = *ip;

  const auto& port = require("dst_port");
  if (!port.is_number_integer()) throw ParseError("invalid field: dst_port");
  const bool in_range = port.is_number_unsigned()
                            ? port.get<std::uint64_t>() <= 65535
                            : port.get<std::int64_t>() >= 0 && port.get<std::int64_t>() <= 65535;
  if (!in_range) throw ValidationError("dst_port out of range: " + port.dump());
  r.dst_port = port.get<std::uint32_t>();

  r.host = string_field("host");
  std::transform(r.host.begin(), r.host.end(), r.host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  r.request_line = bytes_field("request_line_b64");
  r.cookie = bytes_field("cookie_b64");
  r.body = bytes_field("body_b64");

  if (auto it = j.find("labels"); it != j.end()) {
    if (!it->is_array()) throw ParseError("invalid field: labels");
    for (const auto& l : *it) {
      auto kind = l.is_string() ? sensitive_kind_from_string(l.get<std::string>()) : std::nullopt;
      if (!kind) throw ParseError("invalid field: labels");
      r.labels.insert(*kind);
    }
  }
  validate(r);
  return r;
}

inline std::string serialize_record(const HttpRecord& r) {
  nlohmann::ordered_json j;
  j["app_id"] = r.app_id;
  j["dst_ip"] = r.dst_ip.to_string();
  j["dst_port"] = r.dst_port;
  j["host"] = r.host;
  j["request_line_b64"] = base64_encode(r.request_line);
  j["cookie_b64"] = base64_encode(r.cookie);
  j["body_b64"] = base64_encode(r.body);
  auto labels = nlohmann::ordered_json::array();
  for (auto kind : r.labels) labels.push_back(std::string(to_string(kind)));
  j["labels"] = std::move(labels);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Payload check

enum class VariantForm { Raw, Md5Lower, Md5Upper, Sha1Lower, Sha1Upper };

struct IdentifierVariant {
  VariantForm form;
  std::string bytes;

  friend bool operator==(const IdentifierVariant&, const IdentifierVariant&) = default;
};

/// The raw identifier plus its MD5 and SHA1 hex digests in both cases.
inline std::vector<IdentifierVariant> expand_identifier_variants(std::string_view value) {
  return {
      {VariantForm::Raw, std::string(value)},
      {VariantForm::Md5Lower, hex_digest(DigestAlgorithm::Md5, value)},
      {VariantForm::Md5Upper, hex_digest(DigestAlgorithm::Md5, value, true)},
      {VariantForm::Sha1Lower, hex_digest(DigestAlgorithm::Sha1, value)},
      {VariantForm::Sha1Upper, hex_digest(DigestAlgorithm::Sha1, value, true)},
  };
}

namespace detail {

inline bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

/// Case-insensitive occurrence of `needle` bounded by non-alphanumerics.
inline bool contains_word_icase(std::string_view hay, std::string_view needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool eq = true;
    for (std::size_t k = 0; k < needle.size() && eq; ++k) {
      eq = std::tolower(static_cast<unsigned char>(hay[i + k])) ==
           std::tolower(static_cast<unsigned char>(needle[k]));
    }
    if (!eq) continue;
    const bool left_ok = i == 0 || !is_alnum(static_cast<unsigned char>(hay[i - 1]));
    const std::size_t end = i + needle.size();
    const bool right_ok = end == hay.size() || !is_alnum(static_cast<unsigned char>(hay[end]));
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace detail

/// Byte patterns whose presence marks a record with a given kind.
/// Precompute once per profile when labeling many records.
class PayloadChecker {
 public:
  explicit PayloadChecker(const DeviceProfile& profile) : carrier_(profile.carrier) {
    auto add_digest_family = [&](const std::string& value, SensitiveKind raw, SensitiveKind md5,
                                 SensitiveKind sha1) {
      for (auto& v : expand_identifier_variants(value)) {
        switch (v.form) {
          case VariantForm::Raw: patterns_.push_back({raw, std::move(v.bytes)}); break;
          case VariantForm::Md5Lower:
          case VariantForm::Md5Upper: patterns_.push_back({md5, std::move(v.bytes)}); break;
          case VariantForm::Sha1Lower:
          case VariantForm::Sha1Upper: patterns_.push_back({sha1, std::move(v.bytes)}); break;
        }
      }
    };
    add_digest_family(profile.android_id, SensitiveKind::AndroidId, SensitiveKind::AndroidIdMd5,
                      SensitiveKind::AndroidIdSha1);
    add_digest_family(profile.imei, SensitiveKind::Imei, SensitiveKind::ImeiMd5, SensitiveKind::ImeiSha1);
    patterns_.push_back({SensitiveKind::Imsi, profile.imsi});
    patterns_.push_back({SensitiveKind::SimSerial, profile.sim_serial});
  }

  std::set<SensitiveKind> labels_for(const HttpRecord& r) const {
    std::set<SensitiveKind> out;
    const std::array<std::string_view, 3> fields = {r.request_line, r.cookie, r.body};
    for (const auto& [kind, bytes] : patterns_) {
      if (out.contains(kind)) continue;
      for (auto f : fields) {
        if (f.find(bytes) != std::string_view::npos) {
          out.insert(kind);
          break;
        }
      }
    }
    for (auto f : fields) {
      if (detail::contains_word_icase(f, carrier_)) {
        out.insert(SensitiveKind::Carrier);
        break;
      }
    }
    return out;
  }

 private:
  struct Pattern {
    SensitiveKind kind;
    std::string bytes;
  };
  std::vector<Pattern> patterns_;
  std::string carrier_;
};

/// Returns `record` with labels replaced by every kind found in its content.
inline HttpRecord label_sensitive(HttpRecord record, const DeviceProfile& profile) {
  record.labels = PayloadChecker(profile).labels_for(record);
  return record;
}

}  // namespace leakdet
