// SPDX-License-Identifier: Apache-2.0
#include "matten/error.hpp"

#include <sstream>

namespace matten {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::dataset: return "dataset";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::parse: return "parse";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::state: return "state";
    case ErrorKind::shape: return "shape";
    case ErrorKind::argument: return "argument";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

std::string divergence_message(std::size_t epoch, double lr) {
  std::ostringstream os;
  os << "training diverged (non-finite loss) at epoch " << epoch
     << " with learning rate " << lr;
  return os.str();
}

std::string bounds_message(std::size_t mode, std::size_t index, std::size_t extent) {
  std::ostringstream os;
  os << "index " << index << " out of bounds on mode " << mode << " (extent " << extent
     << ")";
  return os.str();
}

}  // namespace

DivergenceError::DivergenceError(std::size_t epoch, double learning_rate)
    : Error(ErrorKind::divergence, divergence_message(epoch, learning_rate)),
      epoch_(epoch),
      learning_rate_(learning_rate) {}

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(ErrorKind::parse, what + " at byte " + std::to_string(offset)),
      offset_(offset) {}

BoundsError::BoundsError(std::size_t mode, std::size_t index, std::size_t extent)
    : Error(ErrorKind::bounds, bounds_message(mode, index, extent)), mode_(mode) {}

}  // namespace matten
