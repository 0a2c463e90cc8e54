#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace satpipe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed header, magic or CSV layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training labels containing a single class.
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};

class ClassCountError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity produced during training or analysis.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace satpipe
