#include "lodrefine/errors.hpp"

namespace lodrefine {

  std::string_view to_string(ErrorCode code) {
    switch (code) {
      case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
      case ErrorCode::HoleOutsideWall: return "HoleOutsideWall";
      case ErrorCode::HoleOverlap: return "HoleOverlap";
      case ErrorCode::SchemaError: return "SchemaError";
      case ErrorCode::GeometryError: return "GeometryError";
      case ErrorCode::DuplicateId: return "DuplicateId";
      case ErrorCode::UnresolvedParent: return "UnresolvedParent";
      case ErrorCode::FormatError: return "FormatError";
      case ErrorCode::UnknownOriginIndex: return "UnknownOriginIndex";
      case ErrorCode::EmptyInput: return "EmptyInput";
      case ErrorCode::EmptyWall: return "EmptyWall";
      case ErrorCode::SizeMismatch: return "SizeMismatch";
      case ErrorCode::FrameMismatch: return "FrameMismatch";
      case ErrorCode::ClassMismatch: return "ClassMismatch";
      case ErrorCode::UnresolvedWall: return "UnresolvedWall";
      case ErrorCode::UnmappedClass: return "UnmappedClass";
      case ErrorCode::LibraryError: return "LibraryError";
      case ErrorCode::IoError: return "IoError";
      case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
  }

  static std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
    std::string out{to_string(code)};
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    out += ": ";
    out += message;
    return out;
  }

  Error::Error(ErrorCode code, const std::string& message, std::size_t line)
      : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace lodrefine
