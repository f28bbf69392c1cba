#pragma once

#include <stdexcept>
#include <string>

namespace page {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidGraph : Error {
  using Error::Error;
};
struct InvalidMask : Error {
  using Error::Error;
};
struct IndexError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct DatasetFormatError : Error {
  using Error::Error;
};
struct IntegrityError : Error {
  using Error::Error;
};
struct ModelError : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};
struct DistributionError : Error {
  using Error::Error;
};
struct MetricUnavailable : Error {
  using Error::Error;
};

struct TrainingError : Error {
  TrainingError(const std::string& what, int epoch) : Error(what), epoch(epoch) {}
  int epoch;
};

}  // namespace page
