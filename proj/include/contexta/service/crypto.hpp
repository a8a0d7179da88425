#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace contexta::crypto {

std::string base64url_encode(std::string_view bytes);
/// Throws std::invalid_argument.
std::string base64url_decode(std::string_view text);

std::string hmac_sha256(std::string_view key, std::string_view data);
std::string sha256_hex(std::string_view data);
std::string random_bytes(std::size_t n);
bool constant_time_equal(std::string_view a, std::string_view b);

/// "pbkdf2-sha256$<iterations>$<salt>$<hash>" with base64url fields.
std::string hash_secret(std::string_view secret, int iterations = 100'000);
bool verify_secret(std::string_view secret, std::string_view stored);

/// HS256 JWT with sub, iat and exp (seconds).
std::string issue_token(std::string_view subject, std::string_view key, std::int64_t now_ms,
                        std::int64_t ttl_ms);
/// Returns the subject. Throws AuthFailure or ExpiredToken.
std::string verify_token(std::string_view token, std::string_view key, std::int64_t now_ms);

}  // namespace contexta::crypto
