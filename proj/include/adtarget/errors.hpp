#pragma once

#include <stdexcept>
#include <string>

namespace adtarget {

// Base for every error the library raises on bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed syntax. `where` carries "line N" or "field X" style locations.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(where) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Well-formed input missing a required column or key.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A value outside its mathematical domain (negative probability, L > 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Oracles refuse enumerations that would not finish.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace adtarget
