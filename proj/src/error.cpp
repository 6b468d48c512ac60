#include "rx/error.hpp"

namespace rx {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidDepth: return "invalid-depth";
    case ErrorKind::OutOfBounds: return "out-of-bounds";
    case ErrorKind::NonPositiveDepth: return "non-positive-depth";
    case ErrorKind::LengthMismatch: return "length-mismatch";
    case ErrorKind::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::NoConsensus: return "no-consensus";
    case ErrorKind::InsufficientFrames: return "insufficient-frames";
    case ErrorKind::KTooLarge: return "k-too-large";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::UnrepairableDepth: return "unrepairable-depth";
    case ErrorKind::InsufficientStaticArea: return "insufficient-static-area";
    case ErrorKind::UnstabilizableClip: return "unstabilizable-clip";
    case ErrorKind::UnknownFrame: return "unknown-frame";
    case ErrorKind::MissingJoints: return "missing-joints";
    case ErrorKind::MissingPose: return "missing-pose";
    case ErrorKind::DegenerateHand: return "degenerate-hand";
    case ErrorKind::EmptyRetrieval: return "empty-retrieval";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::KMismatch: return "k-mismatch";
    case ErrorKind::EmptyContext: return "empty-context";
    case ErrorKind::MalformedOutput: return "malformed-output";
    case ErrorKind::WrongArity: return "wrong-arity";
    case ErrorKind::DegenerateKeypoints: return "degenerate-keypoints";
    case ErrorKind::GenerationFailed: return "generation-failed";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::MissingAsset: return "missing-asset";
    case ErrorKind::CorruptDescriptorFile: return "corrupt-descriptor-file";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

ErrorKind parse_error_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::Io); ++k)
    if (to_string(static_cast<ErrorKind>(k)) == name) return static_cast<ErrorKind>(k);
  throw Error(ErrorKind::InvalidArgument, "unknown error kind '" + std::string(name) + "'");
}

}  // namespace rx
