#pragma once

#include "lodrefine/facade_class.hpp"
#include "lodrefine/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lodrefine {

  struct LabeledPoint {
    Point3 position;
    FacadeClass label = FacadeClass::Other;
    std::uint32_t origin_index = 0;
    bool operator==(const LabeledPoint&) const = default;
  };

  /// Points with semantic labels; each point references the sensor position
  /// its ray was fired from.
  struct LabeledPointCloud {
    std::vector<LabeledPoint> points;
    std::vector<Point3> origins;
    /// ISO-8601 acquisition time, empty if the file did not carry one.
    std::string acquisition_time;
    bool operator==(const LabeledPointCloud&) const = default;
  };

  /// Positioning uncertainty of the model surfaces (sigma_model) and of
  /// the measured points (sigma_point), with optional systematic biases.
  struct UncertaintyParams {
    double sigma_model = 0.3;
    double sigma_point = 0.05;
    double mu_model = 0.0;
    double mu_point = 0.0;

    /// Throws InvalidArgument unless both sigmas are positive and finite.
    void validate() const;
  };

  /// Dataset label code -> facade class. Codes missing from the table map
  /// to FacadeClass::Other.
  class LabelMapping {
  public:
    LabelMapping() = default;

    /// Codes 1..14 in the order GroundSurface, RoofSurface, Wall, Window,
    /// Door, Underpass, Balcony, Molding, Deco, Column, Arch, Drainpipe,
    /// Stairs, Blinds.
    static LabelMapping table_default();

    void set(int code, FacadeClass c) { table_[code] = c; }
    FacadeClass lookup(int code) const;
    /// Smallest code mapped to `c`, if any.
    std::optional<int> code_for(FacadeClass c) const;
    const std::map<int, FacadeClass>& entries() const { return table_; }

  private:
    std::map<int, FacadeClass> table_;
  };

  FacadeClass map_label(int code, const LabelMapping& mapping);

  namespace io {

    /// CSV "code,class_name"; a header row whose first field is not an
    /// integer is skipped. Class names match case-insensitively.
    LabelMapping parse_label_mapping(std::string_view csv);
    LabelMapping read_label_mapping(const std::filesystem::path& path);

    /**
     * @brief Parse the ASCII `.lpc` format.
     *
     *     ORIGINS <n>
     *     x y z                               (n lines)
     *     POINTS <m>
     *     x y z label_code origin_index       (m lines)
     *
     * Blank lines and lines starting with '#' are ignored, except a comment
     * of the form "# acquisition_time <ISO-8601>" which sets the cloud's
     * acquisition time. Throws FormatError / UnknownOriginIndex carrying the
     * offending line number.
     */
    LabeledPointCloud parse_point_cloud(std::string_view text,
                                        const LabelMapping& mapping = LabelMapping::table_default());
    LabeledPointCloud read_point_cloud(const std::filesystem::path& path,
                                       const LabelMapping& mapping = LabelMapping::table_default());

    /// Writes coordinates in shortest round-trip form; labels are written
    /// as `mapping.code_for(label)`, or 0 when the class has no code.
    std::string write_point_cloud(const LabeledPointCloud& cloud,
                                  const LabelMapping& mapping = LabelMapping::table_default());

  }  // namespace io

}  // namespace lodrefine
