#pragma once

#include <stdexcept>
#include <string>

namespace g2p {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the path and the byte offset of the failure.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t offset, const std::string& what)
      : Error(path + ":" + std::to_string(offset) + ": " + what),
        path_(std::move(path)),
        offset_(offset) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string path_;
  std::size_t offset_;
};

/// Network references an id that does not exist, or is otherwise ill-formed.
class TopologyError : public Error {
 public:
  TopologyError(std::string id, const std::string& what)
      : Error(what + ": " + id), id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Bad scenario / command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Lookup of state that the caller was required to supply.
class MissingStateError : public Error {
 public:
  using Error::Error;
};

}  // namespace g2p
