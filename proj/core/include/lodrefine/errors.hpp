#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lodrefine {

  enum class ErrorCode {
    DegeneratePolygon,
    HoleOutsideWall,
    HoleOverlap,
    SchemaError,
    GeometryError,
    DuplicateId,
    UnresolvedParent,
    FormatError,
    UnknownOriginIndex,
    EmptyInput,
    EmptyWall,
    SizeMismatch,
    FrameMismatch,
    ClassMismatch,
    UnresolvedWall,
    UnmappedClass,
    LibraryError,
    IoError,
    InvalidArgument,
  };

  std::string_view to_string(ErrorCode code);

  /**
   * @brief Single exception type for the library. The code identifies the
   * failure class; `line()` is non-zero for errors tied to a line of a text
   * input.
   */
  class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message, std::size_t line = 0);

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

  private:
    ErrorCode code_;
    std::size_t line_;
  };

}  // namespace lodrefine
