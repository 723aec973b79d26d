#pragma once

#include <stdexcept>
#include <string>

namespace avgemb {

// a quantity that must stay strictly positive collapsed to zero, e.g. the
// variance of s(X,X) under a Rademacher marginal
class degenerate_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// quadrature gave up before reaching the requested tolerance; carries the
// error estimate that was actually achieved
class convergence_error : public std::runtime_error {
public:
  convergence_error(const std::string& msg, double achieved)
      : std::runtime_error(msg), achieved_(achieved) {}
  double achieved_error() const noexcept { return achieved_; }

private:
  double achieved_;
};

}  // namespace avgemb
