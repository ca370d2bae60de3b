// Point containers and a uniform-grid index for exact nearest-point queries.
//
// Example:
//   segfit::PointSet cloud = segfit::load_xyz("scan.xyz");
//   segfit::GridIndex index(cloud, 0.05);
//   double d = index.nearest_distance({0.0, 1.0, 0.0});

#ifndef SEGFIT_GEOM_HPP
#define SEGFIT_GEOM_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace segfit {

using Point = Eigen::Vector3d;

struct Box {
  Point min;
  Point max;
};

inline bool is_finite(const Point& p) noexcept {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

/// Ordered list of finite 3-D points with a tight axis-aligned bounding box.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(std::vector<Point> points) {
    points_.reserve(points.size());
    for (const auto& p : points) push_back(p);
  }

  void push_back(const Point& p) {
    if (!is_finite(p)) throw std::invalid_argument("point has non-finite coordinate");
    if (points_.empty()) {
      box_ = {p, p};
    } else {
      box_.min = box_.min.cwiseMin(p);
      box_.max = box_.max.cwiseMax(p);
    }
    points_.push_back(p);
  }

  void append(const PointSet& other) {
    points_.reserve(points_.size() + other.size());
    for (const auto& p : other.points_) push_back(p);
  }

  void reserve(std::size_t n) { points_.reserve(n); }

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
  [[nodiscard]] const Point& operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] auto begin() const noexcept { return points_.begin(); }
  [[nodiscard]] auto end() const noexcept { return points_.end(); }
  [[nodiscard]] const std::vector<Point>& points() const noexcept { return points_; }

  /// Empty sets have no box.
  [[nodiscard]] std::optional<Box> bbox() const {
    if (points_.empty()) return std::nullopt;
    return box_;
  }

  friend bool operator==(const PointSet& a, const PointSet& b) {
    return a.points_ == b.points_;
  }

 private:
  std::vector<Point> points_;
  Box box_{Point::Zero(), Point::Zero()};
};

inline std::pair<Point, Point> bounding_box(const PointSet& points) {
  auto box = points.bbox();
  if (!box) throw std::invalid_argument("bounding box of empty set");
  return {box->min, box->max};
}

inline double distance(const Point& a, const Point& b) noexcept {
  return std::sqrt((a - b).squaredNorm());
}

/// Uniform grid over an immutable copy of a point set.
///
/// Cell of p is floor((p - origin) / cell_size) per axis, with origin at the
/// bounding-box minimum. Queries walk Chebyshev rings of cells outward from
/// the query cell and stop once the best distance found is no larger than the
/// distance to the nearest face beyond which occupied cells remain unvisited,
/// which makes them exact.
class GridIndex {
 public:
  struct Cell {
    std::int64_t x, y, z;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  GridIndex(const PointSet& points, double cell_size) : cell_size_(cell_size) {
    if (points.empty()) throw std::invalid_argument("cannot index empty set");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
      throw std::invalid_argument("cell_size must be positive");
    points_ = points.points();
    origin_ = points.bbox()->min;
    lo_ = cell_of(points.bbox()->min);
    hi_ = cell_of(points.bbox()->max);
    for (int k = 0; k < 3; ++k) extent_[k] = at(hi_, k) - at(lo_, k) + 1;

    // Counting sort of point indices by cell id (CSR layout).
    std::vector<std::uint64_t> ids(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) ids[i] = cell_id(cell_of(points_[i]));
    const double cells = static_cast<double>(extent_[0]) * static_cast<double>(extent_[1]) *
                         static_cast<double>(extent_[2]);
    dense_ = cells <= std::max(16.0 * static_cast<double>(points_.size()), 65536.0);
    order_.resize(points_.size());
    if (dense_) {
      starts_.assign(static_cast<std::size_t>(cells) + 1, 0);
      for (auto id : ids) ++starts_[id + 1];
      for (std::size_t c = 1; c < starts_.size(); ++c) starts_[c] += starts_[c - 1];
      std::vector<std::uint32_t> fill(starts_.begin(), starts_.end() - 1);
      for (std::size_t i = 0; i < ids.size(); ++i) order_[fill[ids[i]]++] = static_cast<std::uint32_t>(i);
    } else {
      std::vector<std::uint32_t> idx(points_.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
      for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e < idx.size() && ids[idx[e]] == ids[idx[k]]) ++e;
        sparse_.emplace(ids[idx[k]], std::pair<std::uint32_t, std::uint32_t>(
                                         static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(e)));
        k = e;
      }
      order_ = std::move(idx);
    }
  }

  [[nodiscard]] double cell_size() const noexcept { return cell_size_; }
  [[nodiscard]] const Point& origin() const noexcept { return origin_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] const std::vector<Point>& points() const noexcept { return points_; }

  [[nodiscard]] Cell cell_of(const Point& p) const noexcept {
    const Point c = ((p - origin_) / cell_size_).array().floor();
    return {static_cast<std::int64_t>(c.x()), static_cast<std::int64_t>(c.y()),
            static_cast<std::int64_t>(c.z())};
  }

  [[nodiscard]] std::size_t occupied_cells() const {
    std::size_t n = 0;
    for_each_cell([&](const Cell&, std::span<const std::uint32_t>) { ++n; });
    return n;
  }

  /// Visits (cell, point indices) for every occupied cell.
  template <typename F>
  void for_each_cell(F&& f) const {
    if (dense_) {
      for (std::size_t id = 0; id + 1 < starts_.size(); ++id)
        if (starts_[id] != starts_[id + 1]) f(cell_from_id(id), slice(starts_[id], starts_[id + 1]));
    } else {
      for (const auto& [id, range] : sparse_) f(cell_from_id(id), slice(range.first, range.second));
    }
  }

  [[nodiscard]] double nearest_distance(const Point& query) const {
    return std::sqrt(nearest_squared(query, std::numeric_limits<double>::infinity()));
  }

  /// Distance from indexed point i to its nearest other indexed point
  /// (infinity for a singleton).
  [[nodiscard]] double nearest_other(std::size_t i) const {
    return std::sqrt(nearest_squared(points_.at(i), std::numeric_limits<double>::infinity(),
                                     static_cast<std::uint32_t>(i)));
  }

  /// Exact nearest distance if it is below `cutoff`, otherwise nullopt.
  [[nodiscard]] std::optional<double> nearest_within(const Point& query, double cutoff) const {
    const double sq = nearest_squared(query, cutoff * cutoff);
    if (!(sq < cutoff * cutoff)) return std::nullopt;
    return std::sqrt(sq);
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  static std::int64_t at(const Cell& c, int k) noexcept { return k == 0 ? c.x : k == 1 ? c.y : c.z; }

  [[nodiscard]] std::uint64_t cell_id(const Cell& c) const noexcept {
    return static_cast<std::uint64_t>(((c.z - lo_.z) * extent_[1] + (c.y - lo_.y)) * extent_[0] +
                                      (c.x - lo_.x));
  }

  [[nodiscard]] Cell cell_from_id(std::uint64_t id) const noexcept {
    const auto i = static_cast<std::int64_t>(id);
    return {lo_.x + i % extent_[0], lo_.y + (i / extent_[0]) % extent_[1],
            lo_.z + i / (extent_[0] * extent_[1])};
  }

  [[nodiscard]] std::span<const std::uint32_t> slice(std::uint32_t b, std::uint32_t e) const {
    return {order_.data() + b, order_.data() + e};
  }

  // Caller guarantees the cell lies inside the occupied block.
  void scan_cell(std::int64_t x, std::int64_t y, std::int64_t z, const Point& q,
                 std::uint32_t exclude, double& best) const {
    const std::uint64_t id = cell_id({x, y, z});
    std::uint32_t b, e;
    if (dense_) {
      b = starts_[id];
      e = starts_[id + 1];
    } else {
      auto it = sparse_.find(id);
      if (it == sparse_.end()) return;
      b = it->second.first;
      e = it->second.second;
    }
    for (; b < e; ++b) {
      const auto i = order_[b];
      if (i != exclude) best = std::min(best, (points_[i] - q).squaredNorm());
    }
  }

  // Squared distance to the nearest point, or a value >= limit_sq when no
  // point is closer than sqrt(limit_sq).
  double nearest_squared(const Point& q, double limit_sq, std::uint32_t exclude = kNone) const {
    const Cell c = cell_of(q);
    const std::int64_t qc[3] = {c.x, c.y, c.z};
    const std::int64_t lo[3] = {lo_.x, lo_.y, lo_.z};
    const std::int64_t hi[3] = {hi_.x, hi_.y, hi_.z};

    // Rings closer than the occupied block are empty; start at the block.
    std::int64_t r = 0;
    for (int k = 0; k < 3; ++k) r = std::max({r, lo[k] - qc[k], qc[k] - hi[k]});

    double best = std::numeric_limits<double>::infinity();
    for (;; ++r) {
      std::int64_t from[3], to[3];
      for (int k = 0; k < 3; ++k) {
        from[k] = std::max(qc[k] - r, lo[k]);
        to[k] = std::min(qc[k] + r, hi[k]);
      }
      // Shell cells: Chebyshev distance exactly r, clipped to the block.
      const bool z_lo = qc[2] - r >= lo[2];
      const bool z_hi = r > 0 && qc[2] + r <= hi[2];
      for (std::int64_t x = from[0]; x <= to[0]; ++x) {
        if (x == qc[0] - r || x == qc[0] + r) {
          for (std::int64_t y = from[1]; y <= to[1]; ++y)
            for (std::int64_t z = from[2]; z <= to[2]; ++z) scan_cell(x, y, z, q, exclude, best);
          continue;
        }
        for (std::int64_t y : {qc[1] - r, qc[1] + r}) {
          if (y < from[1] || y > to[1] || (r == 0 && y != qc[1] - r)) continue;
          for (std::int64_t z = from[2]; z <= to[2]; ++z) scan_cell(x, y, z, q, exclude, best);
        }
        if (z_lo || z_hi) {
          for (std::int64_t y = std::max(from[1], qc[1] - r + 1); y <= std::min(to[1], qc[1] + r - 1); ++y) {
            if (z_lo) scan_cell(x, y, qc[2] - r, q, exclude, best);
            if (z_hi) scan_cell(x, y, qc[2] + r, q, exclude, best);
          }
        }
      }

      // Lower bound on the distance to any occupied cell outside ring r.
      double shell = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 3; ++k) {
        if (qc[k] - r > lo[k])
          shell = std::min(shell, q[k] - (origin_[k] + static_cast<double>(qc[k] - r) * cell_size_));
        if (qc[k] + r < hi[k])
          shell = std::min(shell, origin_[k] + static_cast<double>(qc[k] + r + 1) * cell_size_ - q[k]);
      }
      if (!std::isfinite(shell)) break;  // every occupied cell visited
      // Slack absorbs rounding in cell_of so the bound never overestimates.
      shell = std::max(shell - 1e-9 * cell_size_, 0.0);
      if (best <= shell * shell) break;
      if (shell * shell >= limit_sq) break;
    }
    return best;
  }

  double cell_size_;
  Point origin_;
  Cell lo_{}, hi_{};
  std::int64_t extent_[3]{};
  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
  bool dense_ = true;
  std::vector<std::uint32_t> starts_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> sparse_;
};

inline GridIndex build_index(const PointSet& points, double cell_size) {
  return GridIndex(points, cell_size);
}

inline double nearest_distance(const GridIndex& index, const Point& query) {
  return index.nearest_distance(query);
}

// "x y z" per line; '#' starts a comment line; blank lines ignored.
inline PointSet read_xyz(std::istream& in) {
  PointSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z))
      throw std::runtime_error("malformed point on line " + std::to_string(lineno));
    std::string rest;
    if (ss >> rest)
      throw std::runtime_error("trailing data on line " + std::to_string(lineno));
    out.push_back({x, y, z});
  }
  return out;
}

inline void write_xyz(std::ostream& out, const PointSet& points) {
  out << std::setprecision(17);
  for (const auto& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

inline PointSet load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_xyz(in);
}

inline void save_xyz(const std::string& path, const PointSet& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_xyz(out, points);
}

}  // namespace segfit

#endif  // SEGFIT_GEOM_HPP
