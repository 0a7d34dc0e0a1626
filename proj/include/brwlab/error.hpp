#pragma once

#include <stdexcept>
#include <string>

namespace brwlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class PopulationCapExceeded : public Error {
 public:
  using Error::Error;
};

class NonContracting : public Error {
 public:
  NonContracting(const std::string& what, double estimate, double se)
      : Error(what), estimate_(estimate), se_(se) {}
  double estimate() const { return estimate_; }
  double se() const { return se_; }

 private:
  double estimate_;
  double se_;
};

class HorizonExceeded : public Error {
 public:
  using Error::Error;
};

class TailBoundUnavailable : public Error {
 public:
  using Error::Error;
};

class GridResolutionError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double lo, double hi)
      : Error(what + " on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace brwlab
