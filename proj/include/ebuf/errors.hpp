#pragma once

#include <stdexcept>
#include <string>

namespace ebuf {

// Invalid user-supplied configuration (bad parameter ranges, K <= M, ...).
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to converge or overflowed.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// The requested quantity does not exist in this parameter regime
// (e.g. no stationary distribution when delta <= 1).
class regime_error : public std::runtime_error {
public:
  explicit regime_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Linear system is singular or too ill-conditioned to trust.
class singular_error : public std::runtime_error {
public:
  singular_error(const std::string& msg, double cond_estimate)
      : std::runtime_error(msg), cond(cond_estimate) {}
  double cond;
};

}  // namespace ebuf
