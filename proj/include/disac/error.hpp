#pragma once

#include <stdexcept>
#include <string>

namespace disac {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  Infeasible,
  RankDeficient,
  IllConditioned,
  Unidentifiable,
  Underdetermined,
  Io,
  Config,
};

const char* to_string(ErrorKind kind);

// Every failure in the library surfaces as this exception; the harness
// catches it per stage and records the trial as failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace disac
