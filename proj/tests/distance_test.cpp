#include <gtest/gtest.h>

#include <random>

#include "leakdet/corpus.hpp"
#include "leakdet/distance.hpp"
#include "oracles.hpp"

using namespace leakdet;

namespace {

Ipv4 ip(const char* s) { return *Ipv4::parse(s); }

HttpRecord rec(const char* addr, std::uint32_t port, std::string host, std::string rline, std::string cookie = "",
               std::string body = "") {
  HttpRecord r;
  r.app_id = "a";
  r.dst_ip = ip(addr);
  r.dst_port = port;
  r.host = std::move(host);
  r.request_line = std::move(rline);
  r.cookie = std::move(cookie);
  r.body = std::move(body);
  return r;
}

std::string repeated_pattern(std::size_t n, const std::string& unit = "GET /ad?udid=abc123&os=android ") {
  std::string s;
  while (s.size() < n) s += unit;
  s.resize(n);
  return s;
}

HttpRecord random_record(std::mt19937_64& gen) {
  static const std::vector<std::string> hosts = {"admob.com", "ad-maker.info", "nend.net", "gstatic.com", "a.jp"};
  auto text = [&](std::size_t max_len) {
    std::string s(gen() % (max_len + 1), 'a');
    for (auto& c : s) c = static_cast<char>("abcdef=&?/0123456789"[gen() % 20]);
    return s;
  };
  HttpRecord r;
  r.app_id = "x";
  r.dst_ip = Ipv4{static_cast<std::uint32_t>(gen())};
  r.dst_port = gen() % 2 ? 80 : static_cast<std::uint32_t>(gen() % 65536);
  r.host = hosts[gen() % hosts.size()];
  r.request_line = "GET /" + text(80);
  r.cookie = text(30);
  r.body = text(120);
  return r;
}

}  // namespace

TEST(IpDistance, Examples) {
  EXPECT_EQ(ip_distance(ip("10.0.0.1"), ip("10.0.0.1")), 0.0);
  EXPECT_EQ(ip_distance(ip("0.0.0.0"), ip("128.0.0.0")), 1.0);
  EXPECT_EQ(oracle::lmatch(ip("192.168.0.1"), ip("192.168.0.129")), 24);
  EXPECT_EQ(ip_distance(ip("192.168.0.1"), ip("192.168.0.129")), 0.25);
}

TEST(IpDistance, MatchesBitOracle) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 2000; ++i) {
    const Ipv4 a{static_cast<std::uint32_t>(gen())};
    // Flip one random bit so every prefix length shows up.
    const Ipv4 b{a.value ^ (1u << (gen() % 32))};
    EXPECT_EQ(common_prefix_bits(a, b), oracle::lmatch(a, b));
    EXPECT_EQ(ip_distance(a, b), 1.0 - oracle::lmatch(a, b) / 32.0);
  }
}

TEST(PortDistance, Examples) {
  EXPECT_EQ(port_distance(80, 80), 0.0);
  EXPECT_EQ(port_distance(80, 443), 1.0);
  EXPECT_EQ(port_distance(8080, 8080), 0.0);
}

TEST(HostDistance, Examples) {
  EXPECT_EQ(host_distance("admob.com", "admob.com"), 0.0);
  EXPECT_EQ(oracle::edit_distance("ab.com", "ab.org"), 3u);
  EXPECT_EQ(host_distance("ab.com", "ab.org"), 0.5);
  EXPECT_EQ(oracle::edit_distance("a", "bb"), 2u);
  EXPECT_EQ(host_distance("a", "bb"), 1.0);
}

TEST(HostDistance, MatchesDpOracle) {
  std::mt19937_64 gen(5);
  auto word = [&] {
    std::string s(1 + gen() % 12, 'a');
    for (auto& c : s) c = static_cast<char>("abc.-"[gen() % 5]);
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    const auto a = word(), b = word();
    const double expect = double(oracle::edit_distance(a, b)) / double(std::max(a.size(), b.size()));
    EXPECT_EQ(host_distance(a, b), expect) << a << " / " << b;
  }
}

TEST(DestDistance, Examples) {
  const auto p = rec("10.0.0.1", 80, "admob.com", "GET / HTTP/1.1");
  EXPECT_EQ(dest_distance(p, p), 0.0);
  const auto q = rec("138.0.0.1", 80, "admob.com", "GET / HTTP/1.1");
  EXPECT_EQ(dest_distance(p, q), 1.0);
  const auto r = rec("138.0.0.1", 443, "xyz", "GET / HTTP/1.1");
  const auto s = rec("10.0.0.1", 80, "abc", "GET / HTTP/1.1");
  EXPECT_EQ(dest_distance(r, s), 3.0);
}

TEST(Ncd, EmptyRules) {
  EXPECT_EQ(ncd("", ""), 0.0);
  EXPECT_EQ(ncd("abc", ""), 1.0);
  EXPECT_EQ(ncd("", "abc"), 1.0);
}

TEST(Ncd, SelfDistanceOfRepeatedPatternIsSmall) {
  const auto s = repeated_pattern(256);
  const double d = ncd(s, s);
  EXPECT_GE(d, 0.0);
  EXPECT_LE(d, 0.15);
  std::mt19937_64 gen(3);
  for (std::size_t period : {16, 32, 64, 128}) {
    std::string unit(period, '\0');
    for (auto& ch : unit) ch = static_cast<char>(gen());
    EXPECT_LE(ncd(repeated_pattern(256, unit), repeated_pattern(256, unit)), 0.15) << period;
  }
}

TEST(Ncd, ShortPeriodSelfDistanceIsDominatedByBackReferenceCost) {
  // A 256-byte run of a tiny unit compresses to ~12 bytes; the second copy
  // still costs a couple of bytes, so the ratio is well above zero.
  const auto s = repeated_pattern(256, "abcdefg");
  EXPECT_GT(ncd(s, s), 0.15);
  EXPECT_LT(ncd(s, s), 0.5);
}

TEST(Ncd, UnrelatedRandomBytesAreFar) {
  std::mt19937_64 gen(9);
  std::string a(200, '\0'), b(200, '\0');
  for (auto& c : a) c = static_cast<char>(gen());
  for (auto& c : b) c = static_cast<char>(gen());
  EXPECT_GT(ncd(a, b), 0.9);
  EXPECT_LE(ncd(a, b), 1.0);
}

TEST(Ncd, CompressorLevelIsValidated) {
  EXPECT_THROW(DeflateCompressor(10), InternalError);
  EXPECT_THROW(DeflateCompressor(-1), InternalError);
}

TEST(Ncd, ChunkedCompressionMatchesConcatenation) {
  DeflateCompressor c;
  const auto x = repeated_pattern(300), y = std::string("POST /getAd.php5 HTTP/1.1");
  EXPECT_EQ(c.compressed_size({x, y}), c.compressed_size(x + y));
  // Larger than the internal output buffer.
  std::mt19937_64 gen(1);
  std::string big(100000, '\0');
  for (auto& ch : big) ch = static_cast<char>(gen());
  EXPECT_GT(c.compressed_size(big), big.size());
}

TEST(ContentDistance, Examples) {
  const auto p = rec("10.0.0.1", 80, "a.com", "GET /ad?x=1 HTTP/1.1", "sid=42", "imei=356938035643809");
  EXPECT_LE(content_distance(p, p), 0.45);

  const auto g1 = rec("10.0.0.1", 80, "a.com", "GET /ad?x=1 HTTP/1.1");
  EXPECT_LE(content_distance(g1, g1), 0.15);

  auto with_body = rec("10.0.0.1", 80, "a.com", "GET /a HTTP/1.1", "", "payload");
  auto without = rec("10.0.0.1", 80, "a.com", "GET /b HTTP/1.1");
  const double rline = ncd(with_body.request_line, without.request_line);
  EXPECT_DOUBLE_EQ(content_distance(with_body, without), 1.0 + rline + 0.0);
}

TEST(PacketDistance, IdentityAndBounds) {
  const auto p = rec("10.0.0.1", 80, "admob.com", "GET /mads/gma?isu=ABC HTTP/1.1", "id=1", "x=y");
  const auto q = rec("172.16.9.9", 443, "ssl.gstatic.com", "POST /collect HTTP/1.1", "", "v=1&tid=UA-1");
  EXPECT_EQ(dest_distance(p, p), 0.0);
  EXPECT_EQ(packet_distance(p, p), content_distance(p, p));
  EXPECT_LT(packet_distance(p, p), packet_distance(p, q));
  EXPECT_LE(packet_distance(p, q), 6.0);
}

TEST(DistanceProperties, RandomPairs) {
  std::mt19937_64 gen(21);
  DeflateCompressor c;
  for (int i = 0; i < 300; ++i) {
    const auto p = random_record(gen), q = random_record(gen);
    EXPECT_EQ(ip_distance(p.dst_ip, q.dst_ip), ip_distance(q.dst_ip, p.dst_ip));
    EXPECT_EQ(host_distance(p.host, q.host), host_distance(q.host, p.host));
    EXPECT_EQ(dest_distance(p, q), dest_distance(q, p));
    for (auto [x, y] : {std::pair{p.request_line, q.request_line}, {p.cookie, q.cookie}, {p.body, q.body}}) {
      const double a = ncd(x, y, c), b = ncd(y, x, c);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
      EXPECT_LE(b, 1.0);
    }
    const double d = packet_distance(p, q, c);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 6.0);
    EXPECT_LE(content_distance(p, p, c), 3.0);
  }
}

TEST(DistanceProperties, NcdAsymmetryOnHttpFields) {
  // Realistic request fields stay within 0.05; tiny random strings need not.
  auto spec = default_corpus_spec();
  spec.n_records = 500;
  const auto corpus = generate_corpus(spec);
  std::mt19937_64 gen(17);
  DeflateCompressor c;
  for (int i = 0; i < 500; ++i) {
    const auto fp = content_fields(corpus[gen() % corpus.size()]);
    const auto fq = content_fields(corpus[gen() % corpus.size()]);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(std::abs(ncd(fp[k], fq[k], c) - ncd(fq[k], fp[k], c)), 0.05);
  }
}

TEST(DistanceMatrix, SingleRecord) {
  const std::vector<HttpRecord> one = {rec("10.0.0.1", 80, "a.com", "GET / HTTP/1.1")};
  const auto m = distance_matrix(one);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at(0, 0), 0.0);
}

TEST(DistanceMatrix, EmptyInputRejected) {
  EXPECT_THROW(distance_matrix(std::vector<HttpRecord>{}), std::invalid_argument);
}

TEST(DistanceMatrix, IdenticalRecords) {
  const auto r = rec("10.0.0.1", 80, "a.com", "GET /ad?u=1 HTTP/1.1", "c=1", "b=2");
  const std::vector<HttpRecord> two = {r, r};
  EXPECT_EQ(distance_matrix(two).at(0, 1), packet_distance(r, r));
  EXPECT_LT(distance_matrix(two).at(0, 1), 1.0);
}

TEST(DistanceMatrix, AgreesWithPairwiseAndIsThreadIndependent) {
  std::mt19937_64 gen(4);
  std::vector<HttpRecord> rs;
  for (int i = 0; i < 25; ++i) rs.push_back(random_record(gen));
  const auto m1 = distance_matrix(rs, 9, 1);
  const auto m4 = distance_matrix(rs, 9, 4);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(m1.at(i, i), 0.0);
    for (std::size_t j = 0; j < rs.size(); ++j) {
      EXPECT_EQ(m1.at(i, j), m1.at(j, i));
      EXPECT_EQ(m1.at(i, j), m4.at(i, j));
      EXPECT_GE(m1.at(i, j), 0.0);
      EXPECT_LE(m1.at(i, j), 6.0);
      if (i < j) {
        EXPECT_DOUBLE_EQ(m1.at(i, j), packet_distance(rs[i], rs[j]));
      }
    }
  }
}
