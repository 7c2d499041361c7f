#pragma once

#include <stdexcept>
#include <string>

namespace tailx {

enum class ErrorKind {
  Domain,      // argument outside the operation's domain
  Degenerate,  // input makes the requested quantity undefined
  Rank,        // linear system is rank deficient
  Collision,   // generated prefix sizes coincide
  Index,       // index out of range
  Diverged,    // training blew up
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const char* what) {
  if (!cond) fail(kind, what);
}

}  // namespace tailx
