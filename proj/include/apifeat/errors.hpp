#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apifeat {

// Malformed input bytes (bad JSON, bad CSV). Carries the byte offset of the
// first offending character when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

// Structurally valid input that violates the expected schema.
class SchemaError : public std::runtime_error {
public:
  SchemaError(const std::string& what, std::string path)
      : std::runtime_error(what + " at " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

class EmptyCorpusError : public std::runtime_error {
public:
  explicit EmptyCorpusError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A temporal split produced an empty partition; names the partition.
class SplitError : public std::runtime_error {
public:
  SplitError(const std::string& what, std::string partition)
      : std::runtime_error(what), partition_(std::move(partition)) {}
  const std::string& partition() const { return partition_; }

private:
  std::string partition_;
};

class ShapeError : public std::runtime_error {
public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

class TrainingError : public std::runtime_error {
public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

class SizeError : public std::runtime_error {
public:
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage was invoked before the stage it depends on.
class StageError : public std::runtime_error {
public:
  StageError(const std::string& what, std::string required_stage)
      : std::runtime_error(what), required_stage_(std::move(required_stage)) {}
  const std::string& required_stage() const { return required_stage_; }

private:
  std::string required_stage_;
};

}  // namespace apifeat
