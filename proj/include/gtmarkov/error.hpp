#pragma once

#include <stdexcept>
#include <string>

namespace gtm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Chain has numerical rank above two.
class NotRank2 : public Error {
 public:
  using Error::Error;
};

/// No unique stationary distribution, or spectral gap zero.
class ReducibleChain : public Error {
 public:
  using Error::Error;
};

/// A bound's preconditions (theta < 1, lambda_pi < 1, beta threshold) fail.
class Inapplicable : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace gtm
