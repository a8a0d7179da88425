#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace contexta {

/// Base for every error raised by the library. `code()` is a stable
/// machine-readable name (e.g. "SchemaViolation") used by the CLI and the
/// HTTP layer when mapping failures onto exit codes and status codes.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// A trace line that is not a syntactically valid record.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, std::string field, const std::string& what)
      : Error("MalformedRecord", "line " + std::to_string(line) + ": field '" +
                                     field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A syntactically valid record with a missing field or out-of-range value.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::size_t line, std::string field, const std::string& what)
      : Error("SchemaViolation", "line " + std::to_string(line) + ": field '" +
                                     field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class OutOfOrderEvent : public Error {
 public:
  OutOfOrderEvent(std::int64_t last, std::int64_t got)
      : Error("OutOfOrderEvent", "event at " + std::to_string(got) +
                                     " precedes last ingested " +
                                     std::to_string(last)),
        last_(last),
        got_(got) {}

  std::int64_t last_timestamp() const noexcept { return last_; }
  std::int64_t event_timestamp() const noexcept { return got_; }

 private:
  std::int64_t last_;
  std::int64_t got_;
};

class UnknownChannel : public Error {
 public:
  explicit UnknownChannel(const std::string& what) : Error("UnknownChannel", what) {}
};

class InvalidScript : public Error {
 public:
  explicit InvalidScript(const std::string& what) : Error("InvalidScript", what) {}
};

class SinkFailure : public Error {
 public:
  explicit SinkFailure(const std::string& what) : Error("SinkFailure", what) {}
};

class MissingTemplate : public Error {
 public:
  explicit MissingTemplate(const std::string& what) : Error("MissingTemplate", what) {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& what) : Error("TemplateError", what) {}
};

class ResponderTimeout : public Error {
 public:
  explicit ResponderTimeout(const std::string& what) : Error("ResponderTimeout", what) {}
};

class ResponderUnavailable : public Error {
 public:
  explicit ResponderUnavailable(const std::string& what)
      : Error("ResponderUnavailable", what) {}
};

class UnknownMessage : public Error {
 public:
  explicit UnknownMessage(const std::string& id)
      : Error("UnknownMessage", "unknown message '" + id + "'") {}
};

class UnknownEmoji : public Error {
 public:
  explicit UnknownEmoji(const std::string& e)
      : Error("UnknownEmoji", "emoji '" + e + "' is not in the palette") {}
};

class BackendUnavailable : public Error {
 public:
  explicit BackendUnavailable(const std::string& what)
      : Error("BackendUnavailable", what) {}
};

class MissingLabels : public Error {
 public:
  explicit MissingLabels(const std::string& what) : Error("MissingLabels", what) {}
};

class BadConfig : public Error {
 public:
  explicit BadConfig(const std::string& what) : Error("BadConfig", what) {}
};

/// Missing, malformed or expired bearer token, or bad credentials.
class AuthFailure : public Error {
 public:
  explicit AuthFailure(const std::string& what, std::string code = "AuthFailure")
      : Error(std::move(code), what) {}
};

class InvalidCredentials : public AuthFailure {
 public:
  InvalidCredentials() : AuthFailure("unknown user or wrong secret", "InvalidCredentials") {}
};

class ExpiredToken : public AuthFailure {
 public:
  ExpiredToken() : AuthFailure("token has expired", "ExpiredToken") {}
};

/// A valid token used on another tenant's resource.
class Forbidden : public Error {
 public:
  explicit Forbidden(const std::string& what) : Error("Forbidden", what) {}
};

class DuplicateUser : public Error {
 public:
  explicit DuplicateUser(const std::string& user)
      : Error("DuplicateUser", "user '" + user + "' already exists") {}
};

class StaleBatch : public Error {
 public:
  explicit StaleBatch(const std::string& what) : Error("StaleBatch", what) {}
};

class MalformedBatch : public Error {
 public:
  explicit MalformedBatch(const std::string& what) : Error("MalformedBatch", what) {}
};

class BindFailure : public Error {
 public:
  explicit BindFailure(const std::string& what) : Error("BindFailure", what) {}
};

/// A request with a bad parameter that no more specific error covers.
class BadRequest : public Error {
 public:
  explicit BadRequest(const std::string& what) : Error("BadRequest", what) {}
};

class NoActiveReplay : public Error {
 public:
  NoActiveReplay() : Error("NoActiveReplay", "no replay is polling for control commands") {}
};

}  // namespace contexta
