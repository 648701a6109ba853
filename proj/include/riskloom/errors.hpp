#pragma once

#include <stdexcept>
#include <string>

namespace riskloom {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace riskloom
