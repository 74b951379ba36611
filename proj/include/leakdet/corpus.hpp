#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "leakdet/codec.hpp"
#include "leakdet/error.hpp"
#include "leakdet/random.hpp"
#include "leakdet/record.hpp"

namespace leakdet {

/// One kind of request an ad module or app backend sends.
///
/// The request_line, cookie and body strings are templates. `${name}`
/// expands to a profile value (android_id, android_id_md5,
/// android_id_md5_upper, android_id_sha1, android_id_sha1_upper, imei,
/// imei_md5, imei_md5_upper, imei_sha1, imei_sha1_upper, imsi, sim_serial,
/// carrier) or to noise: `${hex:N}`, `${dec:N}`, `${int:A-B}`, `${ts}`,
/// `${word}`, `${app}`.
struct RecordTemplate {
  std::string name;
  std::string host;
  std::uint32_t port = 80;
  std::string ip_prefix;  // CIDR, e.g. "219.94.128.0/24"
  std::string request_line;
  std::string cookie;
  std::string body;
  std::set<SensitiveKind> embedded;
  double weight = 1.0;

  bool sensitive() const { return !embedded.empty(); }
};

struct CorpusSpec {
  std::vector<RecordTemplate> templates;
  std::size_t n_records = 0;
  double sensitive_fraction = 0.0;
  std::uint64_t seed = 0;
  DeviceProfile profile;
};

namespace detail {

struct Cidr {
  Ipv4 base;
  int bits = 32;
};

inline Cidr parse_cidr(std::string_view text) {
  const auto slash = text.find('/');
  auto ip = Ipv4::parse(text.substr(0, slash));
  if (!ip) throw SpecError("invalid ip_prefix: " + std::string(text));
  int bits = 32;
  if (slash != std::string_view::npos) {
    const auto rest = std::string(text.substr(slash + 1));
    if (rest.empty() || rest.size() > 2 || !std::all_of(rest.begin(), rest.end(), ::isdigit)) {
      throw SpecError("invalid ip_prefix: " + std::string(text));
    }
    bits = std::stoi(rest);
    if (bits > 32) throw SpecError("invalid ip_prefix: " + std::string(text));
  }
  return {*ip, bits};
}

inline const std::vector<std::string>& noise_words() {
  static const std::vector<std::string> words = {
      "news",    "weather", "sports", "game",  "puzzle", "camera", "music", "video",  "photo", "manga",
      "ranking", "recipe",  "travel", "train", "map",    "chat",   "diary", "alarm",  "memo",  "horoscope",
      "quiz",    "book",    "coupon", "shop",  "fortune"};
  return words;
}

/// Values a `${name}` placeholder may take from the device profile, with
/// the label each one produces.
struct ProfileSlot {
  std::string_view name;
  SensitiveKind kind;
};

inline constexpr std::array<ProfileSlot, 13> kProfileSlots = {{
    {"android_id", SensitiveKind::AndroidId},
    {"android_id_md5", SensitiveKind::AndroidIdMd5},
    {"android_id_md5_upper", SensitiveKind::AndroidIdMd5},
    {"android_id_sha1", SensitiveKind::AndroidIdSha1},
    {"android_id_sha1_upper", SensitiveKind::AndroidIdSha1},
    {"imei", SensitiveKind::Imei},
    {"imei_md5", SensitiveKind::ImeiMd5},
    {"imei_md5_upper", SensitiveKind::ImeiMd5},
    {"imei_sha1", SensitiveKind::ImeiSha1},
    {"imei_sha1_upper", SensitiveKind::ImeiSha1},
    {"imsi", SensitiveKind::Imsi},
    {"sim_serial", SensitiveKind::SimSerial},
    {"carrier", SensitiveKind::Carrier},
}};

inline std::string profile_value(std::string_view slot, const DeviceProfile& p) {
  using D = DigestAlgorithm;
  if (slot == "android_id") return p.android_id;
  if (slot == "android_id_md5") return hex_digest(D::Md5, p.android_id);
  if (slot == "android_id_md5_upper") return hex_digest(D::Md5, p.android_id, true);
  if (slot == "android_id_sha1") return hex_digest(D::Sha1, p.android_id);
  if (slot == "android_id_sha1_upper") return hex_digest(D::Sha1, p.android_id, true);
  if (slot == "imei") return p.imei;
  if (slot == "imei_md5") return hex_digest(D::Md5, p.imei);
  if (slot == "imei_md5_upper") return hex_digest(D::Md5, p.imei, true);
  if (slot == "imei_sha1") return hex_digest(D::Sha1, p.imei);
  if (slot == "imei_sha1_upper") return hex_digest(D::Sha1, p.imei, true);
  if (slot == "imsi") return p.imsi;
  if (slot == "sim_serial") return p.sim_serial;
  if (slot == "carrier") return p.carrier;
  return {};
}

/// Calls on_placeholder(name, arg) for every `${name[:arg]}` and
/// on_literal(text) for the text between them.
template <class Lit, class Ph>
void walk_template(std::string_view t, Lit&& on_literal, Ph&& on_placeholder) {
  std::size_t pos = 0;
  while (pos < t.size()) {
    const auto open = t.find("${", pos);
    if (open == std::string_view::npos) {
      on_literal(t.substr(pos));
      return;
    }
    on_literal(t.substr(pos, open - pos));
    const auto close = t.find('}', open);
    if (close == std::string_view::npos) throw SpecError("unterminated placeholder in template");
    const auto inner = t.substr(open + 2, close - open - 2);
    const auto colon = inner.find(':');
    on_placeholder(inner.substr(0, colon),
                   colon == std::string_view::npos ? std::string_view{} : inner.substr(colon + 1));
    pos = close + 1;
  }
}

inline std::size_t parse_count(std::string_view arg, std::string_view what) {
  if (arg.empty() || arg.size() > 4 || !std::all_of(arg.begin(), arg.end(), ::isdigit)) {
    throw SpecError("invalid argument for ${" + std::string(what) + "}");
  }
  return static_cast<std::size_t>(std::stoul(std::string(arg)));
}

/// Kinds referenced by a template string; also validates placeholder syntax.
inline std::set<SensitiveKind> template_kinds(std::string_view t) {
  std::set<SensitiveKind> kinds;
  walk_template(
      t, [](std::string_view) {},
      [&](std::string_view name, std::string_view arg) {
        for (const auto& slot : kProfileSlots) {
          if (slot.name == name) {
            kinds.insert(slot.kind);
            return;
          }
        }
        if (name == "hex" || name == "dec") {
          parse_count(arg, name);
        } else if (name == "int") {
          const auto dash = arg.find('-');
          if (dash == std::string_view::npos ||
              parse_count(arg.substr(0, dash), name) > parse_count(arg.substr(dash + 1), name)) {
            throw SpecError("invalid argument for ${int}");
          }
        } else if (name != "ts" && name != "word" && name != "app") {
          throw SpecError("unknown placeholder ${" + std::string(name) + "}");
        }
      });
  return kinds;
}

// Mid-2012 capture window.
inline constexpr std::uint64_t kTsFirst = 1325376000;  // 2012-01-01
inline constexpr std::uint64_t kTsSpan = 10368000;     // 120 days

inline std::string expand(std::string_view t, const DeviceProfile& p, Rng& rng, std::string_view app) {
  std::string out;
  walk_template(
      t, [&](std::string_view lit) { out += lit; },
      [&](std::string_view name, std::string_view arg) {
        if (name == "hex") {
          out += rng.hex(parse_count(arg, name));
        } else if (name == "dec") {
          out += rng.decimal(parse_count(arg, name));
        } else if (name == "int") {
          const auto dash = arg.find('-');
          const auto lo = parse_count(arg.substr(0, dash), name);
          const auto hi = parse_count(arg.substr(dash + 1), name);
          out += std::to_string(lo + rng.below(hi - lo + 1));
        } else if (name == "ts") {
          out += std::to_string(kTsFirst + rng.below(kTsSpan));
        } else if (name == "word") {
          const auto& w = noise_words();
          out += w[rng.below(w.size())];
        } else if (name == "app") {
          out += app;
        } else {
          out += profile_value(name, p);
        }
      });
  return out;
}

}  // namespace detail

/// Throws SpecError unless `spec` can be generated.
inline void validate(const CorpusSpec& spec) {
  validate(spec.profile);
  if (spec.templates.empty()) throw SpecError("corpus spec has no templates");
  if (!(spec.sensitive_fraction >= 0.0 && spec.sensitive_fraction <= 1.0)) {
    throw SpecError("sensitive_fraction must be in [0, 1]");
  }
  bool any_sensitive = false, any_benign = false;
  for (const auto& t : spec.templates) {
    if (!(t.weight > 0.0)) throw SpecError("template " + t.name + ": weight must be positive");
    if (t.host.empty() || t.request_line.empty()) throw SpecError("template " + t.name + ": empty host or request_line");
    if (t.port > 65535) throw SpecError("template " + t.name + ": port out of range");
    detail::parse_cidr(t.ip_prefix);
    std::set<SensitiveKind> used;
    for (auto* part : {&t.request_line, &t.cookie, &t.body}) used.merge(detail::template_kinds(*part));
    if (used != t.embedded) {
      throw SpecError("template " + t.name + ": embedded kinds do not match its placeholders");
    }
    (t.sensitive() ? any_sensitive : any_benign) = true;
  }
  const auto n_sensitive = static_cast<std::size_t>(std::llround(spec.sensitive_fraction * spec.n_records));
  if (n_sensitive > 0 && !any_sensitive) throw SpecError("sensitive_fraction infeasible: no sensitive template");
  if (n_sensitive < spec.n_records && !any_benign) throw SpecError("sensitive_fraction infeasible: no benign template");
}

/// Seeded corpus. Exactly round(sensitive_fraction * n_records) records are
/// sensitive; each carries ground-truth labels equal to what the payload
/// check finds in it.
inline std::vector<HttpRecord> generate_corpus(const CorpusSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const std::size_t n = spec.n_records;
  const auto n_sensitive = static_cast<std::size_t>(std::llround(spec.sensitive_fraction * n));

  std::vector<std::size_t> sensitive_ids, benign_ids;
  std::vector<double> sensitive_w, benign_w;
  for (std::size_t i = 0; i < spec.templates.size(); ++i) {
    const auto& t = spec.templates[i];
    (t.sensitive() ? sensitive_ids : benign_ids).push_back(i);
    (t.sensitive() ? sensitive_w : benign_w).push_back(t.weight);
  }

  // Which positions are sensitive: first n_sensitive of a shuffled order.
  std::vector<char> is_sensitive(n, 0);
  {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n_sensitive; ++i) {
      std::swap(order[i], order[i + rng.below(n - i)]);
      is_sensitive[order[i]] = 1;
    }
  }

  std::vector<std::string> apps;
  for (int i = 0; i < 120; ++i) apps.push_back("jp.app" + rng.decimal(6));

  const PayloadChecker checker(spec.profile);
  std::vector<HttpRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = is_sensitive[i] ? spec.templates[sensitive_ids[rng.weighted(sensitive_w)]]
                                    : spec.templates[benign_ids[rng.weighted(benign_w)]];
    const auto cidr = detail::parse_cidr(t.ip_prefix);
    const std::string& app = apps[rng.below(apps.size())];

    // Noise could in principle spell out an identifier; redraw until the
    // payload check agrees with the template.
    for (int attempt = 0;; ++attempt) {
      HttpRecord r;
      r.app_id = app;
      const std::uint32_t host_mask = cidr.bits == 32 ? 0u : (cidr.bits == 0 ? ~0u : (~0u >> cidr.bits));
      r.dst_ip = Ipv4{(cidr.base.value & ~host_mask) | (static_cast<std::uint32_t>(rng.next()) & host_mask)};
      r.dst_port = t.port;
      r.host = t.host;
      r.request_line = detail::expand(t.request_line, spec.profile, rng, app);
      r.cookie = detail::expand(t.cookie, spec.profile, rng, app);
      r.body = detail::expand(t.body, spec.profile, rng, app);
      r.labels = t.embedded;
      if (checker.labels_for(r) == r.labels) {
        out.push_back(std::move(r));
        break;
      }
      if (attempt == 100) throw SpecError("template " + t.name + " cannot produce records matching its labels");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json corpus_spec_to_json(const CorpusSpec& spec) {
  nlohmann::ordered_json j;
  j["n_records"] = spec.n_records;
  j["sensitive_fraction"] = spec.sensitive_fraction;
  j["seed"] = spec.seed;
  j["profile"] = profile_to_json(spec.profile);
  auto templates = nlohmann::ordered_json::array();
  for (const auto& t : spec.templates) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["host"] = t.host;
    tj["port"] = t.port;
    tj["ip_prefix"] = t.ip_prefix;
    tj["request_line"] = t.request_line;
    tj["cookie"] = t.cookie;
    tj["body"] = t.body;
    auto kinds = nlohmann::ordered_json::array();
    for (auto k : t.embedded) kinds.push_back(std::string(to_string(k)));
    tj["embedded"] = std::move(kinds);
    tj["weight"] = t.weight;
    templates.push_back(std::move(tj));
  }
  j["templates"] = std::move(templates);
  return j;
}

inline CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  CorpusSpec spec;
  try {
    spec.n_records = j.at("n_records").get<std::size_t>();
    spec.sensitive_fraction = j.at("sensitive_fraction").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.profile = parse_profile(j.at("profile"));
    for (const auto& tj : j.at("templates")) {
      RecordTemplate t;
      t.name = tj.value("name", std::string{});
      t.host = tj.at("host").get<std::string>();
      t.port = tj.at("port").get<std::uint32_t>();
      t.ip_prefix = tj.at("ip_prefix").get<std::string>();
      t.request_line = tj.at("request_line").get<std::string>();
      t.cookie = tj.value("cookie", std::string{});
      t.body = tj.value("body", std::string{});
      for (const auto& k : tj.at("embedded")) {
        auto kind = sensitive_kind_from_string(k.get<std::string>());
        if (!kind) throw SpecError("unknown sensitive kind: " + k.get<std::string>());
        t.embedded.insert(*kind);
      }
      t.weight = tj.value("weight", 1.0);
      spec.templates.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed corpus spec: ") + e.what());
  } catch (const ParseError& e) {
    throw SpecError(std::string("malformed corpus spec: ") + e.what());
  } catch (const ValidationError& e) {
    throw SpecError(std::string("invalid corpus spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

inline DeviceProfile default_profile() {
  return {"3f2c8a91b04de7a5", "356938035643809", "440103123456789", "8981100022152967705", "NTT DOCOMO"};
}

/// Ten templates after the ad and content hosts most seen in Japanese
/// Android traffic: six leak identifiers, four are ordinary traffic.
inline CorpusSpec default_corpus_spec() {
  using K = SensitiveKind;
  CorpusSpec s;
  s.n_records = 2000;
  s.sensitive_fraction = 0.22;
  s.seed = 42;
  s.profile = default_profile();
  s.templates = {
      {"ad-maker", "ad-maker.info", 80, "219.94.128.0/24",
       "GET /ad/api/get?site=${dec:5}&imei=${imei}&aid=${android_id}&sdk=2.1&r=${hex:8}&t=${ts} HTTP/1.1", "", "",
       {K::Imei, K::AndroidId}, 3.5},
      {"admob", "admob.com", 80, "74.125.235.0/24",
       "GET /mads/gma?preqs=${int:0-40}&u_sd=1.5&u_w=320&u_h=533&isu=${android_id_md5_upper}&format=320x50_mb"
       "&output=html&region=mobile_app&msid=${app}&app_name=1.${int:0-9}.android.${app}&ts=${ts} HTTP/1.1",
       "", "", {K::AndroidIdMd5}, 5.0},
      {"mydas", "mydas.mobi", 80, "216.157.12.0/24", "POST /getAd.php5 HTTP/1.1", "",
       "apid=${dec:5}&auid=${imei_sha1}&ua=Android+2.3.6&mmisdk=4.5.1&hsht=${int:40-80}&ts=${ts}",
       {K::ImeiSha1}, 1.2},
      {"zqapk", "zqapk.com", 8080, "59.151.106.0/24", "POST /client/report.do HTTP/1.1", "",
       "imei=${imei}&iccid=${sim_serial}&carrier=${carrier}&ver=${int:100-140}&sid=${hex:12}",
       {K::Imei, K::SimSerial, K::Carrier}, 0.3},
      {"nend", "nend.net", 80, "210.129.114.0/24", "POST /api/v1/ad.php HTTP/1.1", "nend_uid=${hex:16}",
       "uid=${android_id_sha1}&imsi=${imsi}&carrier=${carrier}&spot=${dec:6}&ts=${ts}",
       {K::AndroidIdSha1, K::Imsi, K::Carrier}, 0.5},
      {"adlantis", "adlantis.jp", 80, "202.218.3.0/24",
       "GET /sp/load_app_ads?zid=${dec:6}&aid=${android_id_md5}&did=${imei_md5}&os=android&osv=2.3.6"
       "&r=${hex:10} HTTP/1.1",
       "", "", {K::AndroidIdMd5, K::ImeiMd5}, 2.0},
      {"google-analytics", "google-analytics.com", 80, "173.194.38.0/24",
       "GET /__utm.gif?utmwv=4.8.1ma&utmn=${dec:10}&utmcs=UTF-8&utmsr=480x800&utmul=ja-jp&utmp=%2F${word}"
       "&utmac=UA-${dec:8}-1&utmcc=__utma%3D${dec:9}.${dec:10}.${ts}%3B HTTP/1.1",
       "", "", {}, 4.0},
      {"gstatic", "gstatic.com", 80, "173.194.38.0/24", "GET /images?q=tbn:${hex:32}&s=${int:48-96} HTTP/1.1", "",
       "", {}, 3.0},
      {"yahoo", "yahoo.co.jp", 80, "124.83.187.0/24",
       "GET /rss/topics/${word}.xml?t=${ts}&lang=ja HTTP/1.1", "B=${hex:20}&b=3&s=${hex:4}", "", {}, 2.0},
      {"naver", "naver.jp", 443, "125.209.222.0/24", "POST /api/v2/${word}/sync HTTP/1.1", "NID=${hex:20}",
       "{\"session\":\"${hex:24}\",\"page\":${int:1-30},\"tag\":\"${word}\"}", {}, 2.0},
  };
  return s;
}

}  // namespace leakdet
