#pragma once

#include "lodrefine/geometry.hpp"
#include "lodrefine/model.hpp"
#include "lodrefine/point_cloud.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lodrefine::visibility {

  struct VoxelIndex {
    int x = 0;
    int y = 0;
    int z = 0;
    bool operator==(const VoxelIndex&) const = default;
    auto operator<=>(const VoxelIndex&) const = default;
  };

  /// Uniform voxel grid. The grid spans `aabb_min + dims * voxel_size`,
  /// which covers `aabb_max`.
  struct VoxelGrid {
    Point3 aabb_min;
    Point3 aabb_max;
    double voxel_size = 0.1;
    std::array<int, 3> dims{1, 1, 1};

    std::size_t count() const {
      return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
             static_cast<std::size_t>(dims[2]);
    }
    std::size_t linear(const VoxelIndex& i) const {
      return (static_cast<std::size_t>(i.z) * static_cast<std::size_t>(dims[1]) +
              static_cast<std::size_t>(i.y)) *
                 static_cast<std::size_t>(dims[0]) +
             static_cast<std::size_t>(i.x);
    }
    VoxelIndex unlinear(std::size_t l) const;
    bool in_range(const VoxelIndex& i) const {
      return i.x >= 0 && i.y >= 0 && i.z >= 0 && i.x < dims[0] && i.y < dims[1] && i.z < dims[2];
    }
    /// Voxel containing `p`, clamped to the grid.
    VoxelIndex index_of(const Point3& p) const;
    Point3 center(const VoxelIndex& i) const;
    Point3 grid_max() const;
    bool operator==(const VoxelGrid&) const = default;
  };

  /// Grid over [lo, hi]; dims = ceil((hi - lo) / voxel_size), at least 1.
  VoxelGrid make_grid(const Point3& lo, const Point3& hi, double voxel_size);

  /// AABB of cloud points, sensor origins and model vertices, padded on
  /// every side. Throws EmptyInput for a cloud without points.
  VoxelGrid build_grid(const LabeledPointCloud& cloud, const BuildingModel& model, double voxel_size,
                       double padding);

  struct RayTraversal {
    /// Voxels in order from origin to endpoint.
    std::vector<VoxelIndex> voxels;
    /// True when the last voxel holds the (unclipped) endpoint.
    bool terminal = false;
  };

  /**
   * @brief Exact voxel traversal of the segment origin -> endpoint
   * (Amanatides & Woo). The segment is clipped to the grid first; a segment
   * missing the grid yields no voxels. Consecutive voxels differ by one step
   * along exactly one axis.
   */
  RayTraversal traverse_ray(const VoxelGrid& grid, const Point3& origin, const Point3& endpoint);

  /// Ray statistics per voxel.
  struct OccupancyGrid {
    VoxelGrid grid;
    std::vector<std::uint32_t> traversals;  // rays passing through
    std::vector<std::uint32_t> hits;        // ray endpoints inside
    /// Distance from the voxel center to the nearest endpoint inside the
    /// voxel; +inf where hits == 0.
    std::vector<double> nearest_hit;
    bool operator==(const OccupancyGrid&) const = default;
  };

  /// Casts one ray per point from its sensor origin. With jobs > 1 the
  /// points are split into contiguous batches whose partial grids are
  /// merged by addition (counts) and minimum (nearest_hit); the result is
  /// identical for any job count and any point order.
  OccupancyGrid cast_all(const VoxelGrid& grid, const LabeledPointCloud& cloud, unsigned jobs = 1);

  enum class VoxelState : std::uint8_t { Empty, Occupied, Unknown, Confirmed, Conflicted };
  std::string_view to_string(VoxelState s);

  /// Occupied if hits > 0, else Empty if traversed, else Unknown.
  VoxelState occupancy_state(std::uint32_t hits, std::uint32_t traversals);
  std::vector<VoxelState> voxel_state(const OccupancyGrid& occ);

  /// exp(-(d - bias)^2 / (2 sigma^2)); 1 at d == bias, decreasing beyond.
  double positional_probability(double distance, double sigma, double bias = 0.0);

  struct JointProbability {
    double p_confirmed = 0.0;
    double p_conflicted = 0.0;
  };
  /// P_confirmed = P(A) * P(B), P_conflicted = 1 - P_confirmed.
  JointProbability joint_probability(double p_a, double p_b);

  /// A wall prepared for voxel classification and projection.
  struct WallTarget {
    std::string wall_id;
    PolygonWithHoles polygon;
    WallFrame frame;
    std::vector<Ring2> rings;  // polygon in frame coordinates
  };
  WallTarget make_wall_target(const Surface& wall);
  /// All WallSurfaces of the model in document order.
  std::vector<WallTarget> wall_targets(const BuildingModel& model);

  enum class PlaneTest {
    /// |d| <= (voxel_size / 2) * (|n_x| + |n_y| + |n_z|): the plane cuts the voxel box.
    BoxExact,
    /// |d| <= (sqrt(3) / 2) * voxel_size: circumscribed sphere.
    CircumscribedSphere,
  };

  struct ClassifyOptions {
    PlaneTest plane_test = PlaneTest::BoxExact;
  };

  struct ClassifiedVoxel {
    std::size_t voxel = 0;  // linear index
    FrameCoords coords;     // voxel center in the wall frame
    VoxelState state = VoxelState::Unknown;
    double p_confirmed = 0.0;
    double p_conflicted = 0.0;
  };

  struct WallConflicts {
    std::string wall_id;
    std::vector<ClassifiedVoxel> voxels;
  };

  struct ConflictField {
    VoxelGrid grid;
    std::vector<VoxelState> states;
    std::vector<double> p_confirmed;
    std::vector<double> p_conflicted;
    std::vector<WallConflicts> walls;  // same order as the wall targets

    const WallConflicts* find_wall(std::string_view wall_id) const;
  };

  /**
   * @brief Joint ray/model analysis.
   *
   * Voxels intersecting a wall plane whose center projects inside the wall
   * polygon become Confirmed (from Occupied) or Conflicted (from Empty).
   * P(A) is the positional probability of the center's distance to the
   * plane under sigma_model; P(B) uses sigma_point with the distance to the
   * nearest hit in the voxel (Occupied) or to the nearest Occupied voxel
   * center within 3 sigma_point (Empty; 0 if none). A voxel claimed by two
   * walls keeps the classification of the closer plane.
   */
  ConflictField classify_conflicts(std::span<const VoxelState> states, const OccupancyGrid& occ,
                                   std::span<const WallTarget> walls, const UncertaintyParams& params,
                                   const ClassifyOptions& options = {});

  /// "ix iy iz state p_confirmed" for every voxel that is not Unknown.
  std::string dump_voxels(const ConflictField& field);

}  // namespace lodrefine::visibility
