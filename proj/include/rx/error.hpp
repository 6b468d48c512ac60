#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rx {

/// Failure categories raised across the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidArgument,
  InvalidDepth,
  OutOfBounds,
  NonPositiveDepth,
  LengthMismatch,
  DegenerateConfiguration,
  NoConsensus,
  InsufficientFrames,
  KTooLarge,
  DimensionMismatch,
  UnrepairableDepth,
  InsufficientStaticArea,
  UnstabilizableClip,
  UnknownFrame,
  MissingJoints,
  MissingPose,
  DegenerateHand,
  EmptyRetrieval,
  Transport,
  KMismatch,
  EmptyContext,
  MalformedOutput,
  WrongArity,
  DegenerateKeypoints,
  GenerationFailed,
  Schema,
  MissingAsset,
  CorruptDescriptorFile,
  Io,
};

std::string_view to_string(ErrorKind kind);
/// Inverse of to_string; throws InvalidArgument for unknown names.
ErrorKind parse_error_kind(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parser failure carrying the byte offset where the grammar was violated.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, const std::string& message, std::size_t offset)
      : Error(kind, message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// An error raised inside a pipeline stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), stage + ": " + cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace rx
