#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hlg {

// Base for every domain error raised by the library. The CLI maps these to
// exit status 1; anything else is a bug or a usage error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define HLG_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                        \
   public:                                                           \
    using Error::Error;                                              \
    const char* kind() const noexcept override { return #Name; }     \
  };

// Errors that point at a location inside a document carry the JSON path.
class PathError : public Error {
 public:
  PathError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class SyntaxError : public PathError {
 public:
  using PathError::PathError;
  const char* kind() const noexcept override { return "SyntaxError"; }
};

class SchemaError : public PathError {
 public:
  using PathError::PathError;
  const char* kind() const noexcept override { return "SchemaError"; }
};

class InvariantError : public PathError {
 public:
  using PathError::PathError;
  const char* kind() const noexcept override { return "InvariantError"; }
};

HLG_DEFINE_ERROR(DecodeError)
HLG_DEFINE_ERROR(EncodeError)
HLG_DEFINE_ERROR(IdMismatch)
HLG_DEFINE_ERROR(DimensionMismatch)
HLG_DEFINE_ERROR(EmptyCorpus)
HLG_DEFINE_ERROR(EmptyInput)
HLG_DEFINE_ERROR(DivisibilityError)
HLG_DEFINE_ERROR(GeneratorError)
HLG_DEFINE_ERROR(TransportError)
HLG_DEFINE_ERROR(FormatError)
HLG_DEFINE_ERROR(ConfigError)
HLG_DEFINE_ERROR(IoError)

class MissingAsset : public Error {
 public:
  explicit MissingAsset(std::string id)
      : Error("missing asset for element '" + id + "'"), id_(std::move(id)) {}
  const char* kind() const noexcept override { return "MissingAsset"; }
  const std::string& element_id() const noexcept { return id_; }

 private:
  std::string id_;
};

class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : Error("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "ManifestError"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#undef HLG_DEFINE_ERROR

}  // namespace hlg
