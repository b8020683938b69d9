#include "lodrefine/visibility.hpp"

#include "lodrefine/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace lodrefine::visibility {

  namespace {

    constexpr double kInf = std::numeric_limits<double>::infinity();

    double axis(const Point3& p, int i) { return i == 0 ? p.x : (i == 1 ? p.y : p.z); }
    int& axis(VoxelIndex& v, int i) { return i == 0 ? v.x : (i == 1 ? v.y : v.z); }
    int axis(const VoxelIndex& v, int i) { return i == 0 ? v.x : (i == 1 ? v.y : v.z); }

    struct Bounds {
      Point3 lo{kInf, kInf, kInf};
      Point3 hi{-kInf, -kInf, -kInf};
      bool empty = true;
      void add(const Point3& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        empty = false;
      }
    };

    void accumulate(const VoxelGrid& grid, const LabeledPointCloud& cloud, std::size_t begin,
                    std::size_t end, OccupancyGrid& occ) {
      for (std::size_t i = begin; i < end; ++i) {
        const LabeledPoint& p = cloud.points[i];
        const RayTraversal ray = traverse_ray(grid, cloud.origins[p.origin_index], p.position);
        if (ray.voxels.empty()) continue;
        const std::size_t n = ray.voxels.size();
        const std::size_t passed = ray.terminal ? n - 1 : n;
        for (std::size_t k = 0; k < passed; ++k) ++occ.traversals[grid.linear(ray.voxels[k])];
        if (ray.terminal) {
          const VoxelIndex last = ray.voxels.back();
          const std::size_t l = grid.linear(last);
          ++occ.hits[l];
          occ.nearest_hit[l] = std::min(occ.nearest_hit[l], distance(grid.center(last), p.position));
        }
      }
    }

    OccupancyGrid empty_occupancy(const VoxelGrid& grid) {
      OccupancyGrid occ;
      occ.grid = grid;
      occ.traversals.assign(grid.count(), 0);
      occ.hits.assign(grid.count(), 0);
      occ.nearest_hit.assign(grid.count(), kInf);
      return occ;
    }

  }  // namespace

  VoxelIndex VoxelGrid::unlinear(std::size_t l) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(l % nx), static_cast<int>((l / nx) % ny), static_cast<int>(l / (nx * ny))};
  }

  VoxelIndex VoxelGrid::index_of(const Point3& p) const {
    VoxelIndex v;
    for (int i = 0; i < 3; ++i) {
      const double f = std::floor((axis(p, i) - axis(aabb_min, i)) / voxel_size);
      const double clamped = std::clamp(f, 0.0, static_cast<double>(dims[i] - 1));
      axis(v, i) = static_cast<int>(clamped);
    }
    return v;
  }

  Point3 VoxelGrid::center(const VoxelIndex& i) const {
    return {aabb_min.x + (i.x + 0.5) * voxel_size, aabb_min.y + (i.y + 0.5) * voxel_size,
            aabb_min.z + (i.z + 0.5) * voxel_size};
  }

  Point3 VoxelGrid::grid_max() const {
    return {aabb_min.x + dims[0] * voxel_size, aabb_min.y + dims[1] * voxel_size,
            aabb_min.z + dims[2] * voxel_size};
  }

  VoxelGrid make_grid(const Point3& lo, const Point3& hi, double voxel_size) {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
      throw Error(ErrorCode::InvalidArgument, "voxel_size must be positive");
    VoxelGrid g;
    g.aabb_min = lo;
    g.aabb_max = hi;
    g.voxel_size = voxel_size;
    for (int i = 0; i < 3; ++i) {
      const double n = std::ceil((axis(hi, i) - axis(lo, i)) / voxel_size);
      if (n > 1e9) throw Error(ErrorCode::InvalidArgument, "voxel grid too large");
      g.dims[i] = std::max(1, static_cast<int>(n));
    }
    return g;
  }

  VoxelGrid build_grid(const LabeledPointCloud& cloud, const BuildingModel& model, double voxel_size,
                       double padding) {
    if (cloud.points.empty()) throw Error(ErrorCode::EmptyInput, "point cloud has no points");
    if (!(padding >= 0.0)) throw Error(ErrorCode::InvalidArgument, "padding must be non-negative");
    Bounds b;
    for (const auto& p : cloud.points) b.add(p.position);
    for (const auto& o : cloud.origins) b.add(o);
    for (const auto& bldg : model.buildings)
      for (const auto& s : bldg.surfaces) {
        for (const auto& p : s.geometry.exterior) b.add(p);
        for (const auto& h : s.geometry.interiors)
          for (const auto& p : h) b.add(p);
      }
    const Vec3 pad{padding, padding, padding};
    return make_grid(b.lo - pad, b.hi + pad, voxel_size);
  }

  RayTraversal traverse_ray(const VoxelGrid& grid, const Point3& origin, const Point3& endpoint) {
    RayTraversal out;
    const Vec3 d = endpoint - origin;
    const Point3 lo = grid.aabb_min;
    const Point3 hi = grid.grid_max();

    double t0 = 0.0;
    double t1 = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double o = axis(origin, i);
      const double di = axis(d, i);
      if (di == 0.0) {
        if (o < axis(lo, i) || o > axis(hi, i)) return out;
        continue;
      }
      double ta = (axis(lo, i) - o) / di;
      double tb = (axis(hi, i) - o) / di;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return out;
    }
    out.terminal = t1 >= 1.0;

    const Point3 start = t0 > 0.0 ? origin + d * t0 : origin;
    const Point3 stop = t1 < 1.0 ? origin + d * t1 : endpoint;
    VoxelIndex cur = grid.index_of(start);
    const VoxelIndex last = grid.index_of(stop);

    std::array<int, 3> step{};
    std::array<int, 3> remaining{};
    std::array<double, 3> t_max{kInf, kInf, kInf};
    std::array<double, 3> t_delta{kInf, kInf, kInf};
    for (int i = 0; i < 3; ++i) {
      const int delta = axis(last, i) - axis(cur, i);
      remaining[i] = std::abs(delta);
      step[i] = delta > 0 ? 1 : (delta < 0 ? -1 : 0);
      const double di = axis(d, i);
      if (step[i] == 0 || di == 0.0) continue;
      const int boundary = axis(cur, i) + (step[i] > 0 ? 1 : 0);
      t_max[i] = (axis(lo, i) + boundary * grid.voxel_size - axis(origin, i)) / di;
      t_delta[i] = grid.voxel_size / std::abs(di);
    }

    out.voxels.reserve(static_cast<std::size_t>(1 + remaining[0] + remaining[1] + remaining[2]));
    out.voxels.push_back(cur);
    while (remaining[0] + remaining[1] + remaining[2] > 0) {
      int best = -1;
      for (int i = 0; i < 3; ++i) {
        if (remaining[i] == 0) continue;
        if (best < 0 || t_max[i] < t_max[best]) best = i;
      }
      axis(cur, best) += step[best];
      t_max[best] += t_delta[best];
      --remaining[best];
      out.voxels.push_back(cur);
    }
    return out;
  }

  OccupancyGrid cast_all(const VoxelGrid& grid, const LabeledPointCloud& cloud, unsigned jobs) {
    for (const auto& p : cloud.points)
      if (p.origin_index >= cloud.origins.size())
        throw Error(ErrorCode::UnknownOriginIndex, "point references a missing sensor origin");

    const std::size_t n = cloud.points.size();
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, n / 1024))));
    if (jobs == 1) {
      OccupancyGrid occ = empty_occupancy(grid);
      accumulate(grid, cloud, 0, n, occ);
      return occ;
    }

    std::vector<OccupancyGrid> partial(jobs, empty_occupancy(grid));
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t begin = n * j / jobs;
      const std::size_t end = n * (j + 1) / jobs;
      workers.emplace_back([&, j, begin, end] { accumulate(grid, cloud, begin, end, partial[j]); });
    }
    for (auto& t : workers) t.join();

    OccupancyGrid occ = std::move(partial[0]);
    for (unsigned j = 1; j < jobs; ++j) {
      for (std::size_t v = 0; v < occ.traversals.size(); ++v) {
        occ.traversals[v] += partial[j].traversals[v];
        occ.hits[v] += partial[j].hits[v];
        occ.nearest_hit[v] = std::min(occ.nearest_hit[v], partial[j].nearest_hit[v]);
      }
    }
    return occ;
  }

  std::string_view to_string(VoxelState s) {
    switch (s) {
      case VoxelState::Empty: return "empty";
      case VoxelState::Occupied: return "occupied";
      case VoxelState::Unknown: return "unknown";
      case VoxelState::Confirmed: return "confirmed";
      case VoxelState::Conflicted: return "conflicted";
    }
    return "unknown";
  }

  VoxelState occupancy_state(std::uint32_t hits, std::uint32_t traversals) {
    if (hits > 0) return VoxelState::Occupied;
    if (traversals > 0) return VoxelState::Empty;
    return VoxelState::Unknown;
  }

  std::vector<VoxelState> voxel_state(const OccupancyGrid& occ) {
    std::vector<VoxelState> s(occ.hits.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = occupancy_state(occ.hits[i], occ.traversals[i]);
    return s;
  }

  double positional_probability(double distance, double sigma, double bias) {
    const double e = distance - bias;
    return std::exp(-(e * e) / (2.0 * sigma * sigma));
  }

  JointProbability joint_probability(double p_a, double p_b) {
    const double confirmed = p_a * p_b;
    return {confirmed, 1.0 - confirmed};
  }

  WallTarget make_wall_target(const Surface& wall) {
    WallTarget t;
    t.wall_id = wall.id;
    t.polygon = wall.geometry;
    t.frame = wall_frame_from_polygon(wall.geometry);
    t.rings = project_rings(wall.geometry, t.frame);
    return t;
  }

  std::vector<WallTarget> wall_targets(const BuildingModel& model) {
    std::vector<WallTarget> out;
    for (const auto& b : model.buildings)
      for (const auto& s : b.surfaces)
        if (s.kind == SurfaceKind::WallSurface) out.push_back(make_wall_target(s));
    return out;
  }

  const WallConflicts* ConflictField::find_wall(std::string_view wall_id) const {
    for (const auto& w : walls)
      if (w.wall_id == wall_id) return &w;
    return nullptr;
  }

  ConflictField classify_conflicts(std::span<const VoxelState> states, const OccupancyGrid& occ,
                                   std::span<const WallTarget> walls, const UncertaintyParams& params,
                                   const ClassifyOptions& options) {
    params.validate();
    const VoxelGrid& grid = occ.grid;
    if (states.size() != grid.count())
      throw Error(ErrorCode::InvalidArgument, "state grid does not match occupancy grid");

    ConflictField field;
    field.grid = grid;
    field.states.assign(states.begin(), states.end());
    field.p_confirmed.assign(grid.count(), 0.0);
    field.p_conflicted.assign(grid.count(), 0.0);
    std::vector<double> claimed_distance(grid.count(), kInf);

    // Neighbour offsets within 3 sigma_point, nearest first.
    const double search_radius = 3.0 * params.sigma_point;
    const int reach = static_cast<int>(std::ceil(search_radius / grid.voxel_size));
    struct Offset {
      int dx, dy, dz;
      double dist;
    };
    std::vector<Offset> offsets;
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const double dist = grid.voxel_size * std::sqrt(double(dx * dx + dy * dy + dz * dz));
          if (dist <= search_radius) offsets.push_back({dx, dy, dz, dist});
        }
    std::stable_sort(offsets.begin(), offsets.end(),
                     [](const Offset& a, const Offset& b) { return a.dist < b.dist; });

    auto nearest_occupied = [&](const VoxelIndex& v) {
      for (const Offset& o : offsets) {
        const VoxelIndex n{v.x + o.dx, v.y + o.dy, v.z + o.dz};
        if (!grid.in_range(n)) continue;
        if (states[grid.linear(n)] == VoxelState::Occupied) return o.dist;
      }
      return kInf;
    };

    for (const WallTarget& wall : walls) {
      WallConflicts wc;
      wc.wall_id = wall.wall_id;
      const Vec3& n = wall.frame.normal;
      const double reach_plane =
          options.plane_test == PlaneTest::BoxExact
              ? 0.5 * grid.voxel_size * (std::abs(n.x) + std::abs(n.y) + std::abs(n.z))
              : 0.5 * std::sqrt(3.0) * grid.voxel_size;

      Bounds wb;
      for (const Point3& p : wall.polygon.exterior) wb.add(p);
      const Vec3 pad{reach_plane, reach_plane, reach_plane};
      const VoxelIndex lo = grid.index_of(wb.lo - pad);
      const VoxelIndex hi = grid.index_of(wb.hi + pad);

      for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
          for (int x = lo.x; x <= hi.x; ++x) {
            const VoxelIndex vi{x, y, z};
            const std::size_t l = grid.linear(vi);
            const VoxelState s = states[l];
            if (s != VoxelState::Occupied && s != VoxelState::Empty) continue;
            const FrameCoords c = to_frame(grid.center(vi), wall.frame);
            const double d_plane = std::abs(c.w);
            if (d_plane > reach_plane) continue;
            if (!point_in_polygon(c.u, c.v, wall.rings)) continue;

            const double p_a = positional_probability(d_plane, params.sigma_model, params.mu_model);
            double p_b = 0.0;
            if (s == VoxelState::Occupied) {
              p_b = positional_probability(occ.nearest_hit[l], params.sigma_point, params.mu_point);
            } else {
              const double d = nearest_occupied(vi);
              if (std::isfinite(d)) p_b = positional_probability(d, params.sigma_point, params.mu_point);
            }
            const JointProbability jp = joint_probability(p_a, p_b);
            const VoxelState cls = s == VoxelState::Occupied ? VoxelState::Confirmed : VoxelState::Conflicted;
            wc.voxels.push_back({l, c, cls, jp.p_confirmed, jp.p_conflicted});
            if (d_plane < claimed_distance[l]) {
              claimed_distance[l] = d_plane;
              field.states[l] = cls;
              field.p_confirmed[l] = jp.p_confirmed;
              field.p_conflicted[l] = jp.p_conflicted;
            }
          }
      field.walls.push_back(std::move(wc));
    }
    return field;
  }

  std::string dump_voxels(const ConflictField& field) {
    std::string out;
    char buf[96];
    std::snprintf(buf, sizeof buf, "# dims %d %d %d voxel_size %.9g\n", field.grid.dims[0], field.grid.dims[1],
                  field.grid.dims[2], field.grid.voxel_size);
    out += buf;
    for (std::size_t l = 0; l < field.states.size(); ++l) {
      const VoxelState s = field.states[l];
      if (s == VoxelState::Unknown) continue;
      const VoxelIndex v = field.grid.unlinear(l);
      std::snprintf(buf, sizeof buf, "%d %d %d %s %.9g\n", v.x, v.y, v.z, std::string(to_string(s)).c_str(),
                    field.p_confirmed[l]);
      out += buf;
    }
    return out;
  }

}  // namespace lodrefine::visibility
