#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esg {

enum class Errc {
  invalid_argument,
  not_found,
  already_exists,
  denied,
  conflict,
  transient,     // retryable failure (network, stage, archive)
  checksum_mismatch,
  no_space,
  corrupt,       // malformed bytes or persisted state
  failed_precondition,
  unavailable,
};

std::string_view to_string(Errc code);

/// Base exception for every module. The code drives retry decisions in the
/// data mover, HTTP status mapping in the portal and CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

  bool retryable() const noexcept {
    return code_ == Errc::transient || code_ == Errc::checksum_mismatch;
  }

 private:
  Errc code_;
};

/// Syntax error with the byte offset where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(Errc::invalid_argument,
              what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace esg
