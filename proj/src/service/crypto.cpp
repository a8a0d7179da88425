#include "contexta/service/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <stdexcept>

#include "contexta/error.hpp"
#include "json.hpp"

namespace contexta::crypto {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '-') return 62;
  if (c == '_') return 63;
  return -1;
}

}  // namespace

std::string base64url_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::uint32_t buf = 0;
  int bits = 0;
  for (unsigned char c : bytes) {
    buf = (buf << 8) | c;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += kAlphabet[(buf >> bits) & 0x3F];
    }
  }
  if (bits > 0) out += kAlphabet[(buf << (6 - bits)) & 0x3F];
  return out;
}

std::string base64url_decode(std::string_view text) {
  std::string out;
  std::uint32_t buf = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const int v = decode_char(c);
    if (v < 0) throw std::invalid_argument("bad base64url character");
    buf = (buf << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buf >> bits) & 0xFF);
    }
  }
  return out;
}

std::string hmac_sha256(std::string_view key, std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const unsigned char*>(data.data()), data.size(), md, &len);
  return std::string(reinterpret_cast<char*>(md), len);
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : md) {
    out += hex[b >> 4];
    out += hex[b & 0xF];
  }
  return out;
}

std::string random_bytes(std::size_t n) {
  std::string out(n, '\0');
  if (RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(n)) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
  return out;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

namespace {

std::string pbkdf2(std::string_view secret, std::string_view salt, int iterations) {
  std::string out(32, '\0');
  PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()),
                    reinterpret_cast<const unsigned char*>(salt.data()), static_cast<int>(salt.size()),
                    iterations, EVP_sha256(), static_cast<int>(out.size()),
                    reinterpret_cast<unsigned char*>(out.data()));
  return out;
}

}  // namespace

std::string hash_secret(std::string_view secret, int iterations) {
  const auto salt = random_bytes(16);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + base64url_encode(salt) + "$" +
         base64url_encode(pbkdf2(secret, salt, iterations));
}

bool verify_secret(std::string_view secret, std::string_view stored) {
  const auto a = stored.find('$');
  const auto b = stored.find('$', a + 1);
  const auto c = stored.find('$', b + 1);
  if (a == std::string_view::npos || b == std::string_view::npos || c == std::string_view::npos) return false;
  if (stored.substr(0, a) != "pbkdf2-sha256") return false;
  try {
    const int iterations = std::stoi(std::string(stored.substr(a + 1, b - a - 1)));
    const auto salt = base64url_decode(stored.substr(b + 1, c - b - 1));
    const auto hash = base64url_decode(stored.substr(c + 1));
    return constant_time_equal(pbkdf2(secret, salt, iterations), hash);
  } catch (const std::exception&) {
    return false;
  }
}

std::string issue_token(std::string_view subject, std::string_view key, std::int64_t now_ms,
                        std::int64_t ttl_ms) {
  const std::string header = base64url_encode(R"({"alg":"HS256","typ":"JWT"})");
  nlohmann::ordered_json claims;
  claims["sub"] = subject;
  claims["iat"] = now_ms / 1000;
  claims["exp"] = (now_ms + ttl_ms) / 1000;
  const std::string body = header + "." + base64url_encode(claims.dump());
  return body + "." + base64url_encode(hmac_sha256(key, body));
}

std::string verify_token(std::string_view token, std::string_view key, std::int64_t now_ms) {
  const auto d1 = token.find('.');
  const auto d2 = token.rfind('.');
  if (d1 == std::string_view::npos || d1 == d2) throw AuthFailure("malformed token");
  const auto body = token.substr(0, d2);
  std::string sig;
  nlohmann::json header, claims;
  try {
    sig = base64url_decode(token.substr(d2 + 1));
    header = nlohmann::json::parse(base64url_decode(token.substr(0, d1)));
    claims = nlohmann::json::parse(base64url_decode(token.substr(d1 + 1, d2 - d1 - 1)));
  } catch (const std::exception&) {
    throw AuthFailure("malformed token");
  }
  if (header.value("alg", "") != "HS256") throw AuthFailure("unsupported token algorithm");
  if (!constant_time_equal(sig, hmac_sha256(key, body))) throw AuthFailure("bad token signature");
  if (!claims.contains("sub") || !claims["sub"].is_string() || !claims.contains("exp") ||
      !claims["exp"].is_number_integer()) {
    throw AuthFailure("token lacks sub/exp");
  }
  if (claims["exp"].get<std::int64_t>() * 1000 <= now_ms) throw ExpiredToken();
  return claims["sub"].get<std::string>();
}

}  // namespace contexta::crypto
