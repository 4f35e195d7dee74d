#pragma once

#include <stdexcept>
#include <string>

namespace vcore {

// Error taxonomy mirrored by the C API status codes: validation errors cover
// bad shapes, bad configs and violated preconditions; I/O errors cover the
// filesystem and file formats; numeric errors cover non-finite values where
// finiteness is part of the contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Checkpoint loading failures get their own classes so a caller can tell a
// short file from a corrupted one from a format it does not speak.
class TruncationError : public IoError {
 public:
  using IoError::IoError;
};

class ChecksumError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace vcore
