#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cavdet {

// Raised when a formula is evaluated outside its domain (zero denominator,
// probability out of range, non-positive rate).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A (Q, T_s, M) measurement triple that admits no joint probability table.
// `constraint()` names the violated relation.
class InfeasibleTriple : public std::runtime_error {
 public:
  InfeasibleTriple(std::string constraint, const std::string& detail)
      : std::runtime_error("inconsistent measurement triple: " + constraint + " (" + detail + ")"),
        constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

// Configuration text that cannot be parsed or resolved. `line()` is 0 when
// the problem is not tied to a specific line (e.g. a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string key, const std::string& message)
      : std::runtime_error(format(line, key, message)), line_(line), key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  static std::string format(std::size_t line, const std::string& key, const std::string& message) {
    std::string out = "config error";
    if (line != 0) out += " at line " + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + message;
  }

  std::size_t line_;
  std::string key_;
};

// A correlation estimate was requested on a channel with no clicks.
class NoEventsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavdet
