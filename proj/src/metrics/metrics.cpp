#include "adaseg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>

#include "adaseg/core/error.hpp"

namespace adaseg::metrics {

namespace {

void check_volumes(const LabelVolume& a, const LabelVolume& b) {
  if (a.rank() != 3 || b.rank() != 3)
    throw DimensionError("label volumes must be rank 3");
  if (!a.same_shape(b))
    throw DimensionError("label volume shape mismatch: " + a.shape_str() +
                         " vs " + b.shape_str());
}

struct Voxel {
  int z, y, x;
};

// Foreground voxels with at least one 6-neighbor outside the mask; the
// volume border counts as outside.
std::vector<Voxel> surface_voxels(const LabelVolume& v, int cls) {
  const int S = (int)v.dim(0), H = (int)v.dim(1), W = (int)v.dim(2);
  auto at = [&](int z, int y, int x) -> bool {
    return v[(static_cast<std::size_t>(z) * H + y) * W + x] == cls;
  };
  std::vector<Voxel> out;
  for (int z = 0; z < S; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!at(z, y, x)) continue;
        const bool border = z == 0 || z == S - 1 || y == 0 || y == H - 1 ||
                            x == 0 || x == W - 1;
        if (border || !at(z - 1, y, x) || !at(z + 1, y, x) ||
            !at(z, y - 1, x) || !at(z, y + 1, x) || !at(z, y, x - 1) ||
            !at(z, y, x + 1))
          out.push_back({z, y, x});
      }
  return out;
}

// Mean over source surface voxels of the distance to the nearest target
// surface voxel. Exact; prunes by the z term against a z-sorted target list.
double directed_mean_surface_distance(const std::vector<Voxel>& from,
                                      const std::vector<Voxel>& to,
                                      const std::array<double, 3>& sp) {
  std::vector<Voxel> sorted = to;
  std::sort(sorted.begin(), sorted.end(),
            [](const Voxel& a, const Voxel& b) { return a.z < b.z; });
  double total = 0.0;
  for (const auto& q : from) {
    // Locate the window of candidate z values around q.z.
    auto it = std::lower_bound(
        sorted.begin(), sorted.end(), q,
        [](const Voxel& a, const Voxel& b) { return a.z < b.z; });
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const Voxel& p) {
      const double dz = (p.z - q.z) * sp[0];
      const double dy = (p.y - q.y) * sp[1];
      const double dx = (p.x - q.x) * sp[2];
      best = std::min(best, dz * dz + dy * dy + dx * dx);
    };
    // Expand outward in both z directions until the z distance alone
    // exceeds the best squared distance found.
    std::ptrdiff_t lo = it - sorted.begin() - 1;
    std::ptrdiff_t hi = it - sorted.begin();
    while (true) {
      bool advanced = false;
      if (hi < static_cast<std::ptrdiff_t>(sorted.size())) {
        const double dz = (sorted[hi].z - q.z) * sp[0];
        if (dz * dz <= best) {
          consider(sorted[hi]);
          ++hi;
          advanced = true;
        } else {
          hi = static_cast<std::ptrdiff_t>(sorted.size());
        }
      }
      if (lo >= 0) {
        const double dz = (sorted[lo].z - q.z) * sp[0];
        if (dz * dz <= best) {
          consider(sorted[lo]);
          --lo;
          advanced = true;
        } else {
          lo = -1;
        }
      }
      if (!advanced) break;
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

std::optional<double> dice(const LabelVolume& pred, const LabelVolume& gt,
                           int cls) {
  check_volumes(pred, gt);
  std::int64_t np = 0, ng = 0, ni = 0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] == cls;
    const bool g = gt[i] == cls;
    np += p;
    ng += g;
    ni += p && g;
  }
  if (np + ng == 0) return std::nullopt;
  return 100.0 * 2.0 * static_cast<double>(ni) /
         static_cast<double>(np + ng);
}

std::optional<double> asd(const LabelVolume& pred, const LabelVolume& gt,
                          int cls, const std::array<double, 3>& spacing) {
  check_volumes(pred, gt);
  const auto sp = surface_voxels(pred, cls);
  const auto sg = surface_voxels(gt, cls);
  if (sp.empty() || sg.empty()) return std::nullopt;
  const double pg = directed_mean_surface_distance(sp, sg, spacing);
  const double gp = directed_mean_surface_distance(sg, sp, spacing);
  return 0.5 * (pg + gp);
}

LabelVolume largest_cc(const LabelVolume& pred) {
  if (pred.rank() != 3) throw DimensionError("label volume must be rank 3");
  const int S = (int)pred.dim(0), H = (int)pred.dim(1), W = (int)pred.dim(2);
  const std::int64_t n = pred.numel();
  LabelVolume out(pred.shape());
  std::vector<std::int32_t> comp(static_cast<std::size_t>(n), -1);

  int max_cls = 0;
  for (std::int64_t i = 0; i < n; ++i) max_cls = std::max<int>(max_cls, pred[i]);

  for (int cls = 1; cls <= max_cls; ++cls) {
    std::fill(comp.begin(), comp.end(), -1);
    std::int32_t next_id = 0;
    std::int64_t best_size = 0;
    std::int32_t best_id = -1;
    std::deque<std::int64_t> queue;
    for (std::int64_t seed = 0; seed < n; ++seed) {
      if (pred[seed] != cls || comp[seed] != -1) continue;
      const std::int32_t id = next_id++;
      std::int64_t size = 0;
      comp[seed] = id;
      queue.push_back(seed);
      while (!queue.empty()) {
        const std::int64_t cur = queue.front();
        queue.pop_front();
        ++size;
        const int z = static_cast<int>(cur / (H * W));
        const int y = static_cast<int>((cur / W) % H);
        const int x = static_cast<int>(cur % W);
        const int dz[6] = {-1, 1, 0, 0, 0, 0};
        const int dy[6] = {0, 0, -1, 1, 0, 0};
        const int dx[6] = {0, 0, 0, 0, -1, 1};
        for (int k = 0; k < 6; ++k) {
          const int nz = z + dz[k], ny = y + dy[k], nx = x + dx[k];
          if (nz < 0 || nz >= S || ny < 0 || ny >= H || nx < 0 || nx >= W)
            continue;
          const std::int64_t ni = (static_cast<std::int64_t>(nz) * H + ny) * W + nx;
          if (pred[ni] == cls && comp[ni] == -1) {
            comp[ni] = id;
            queue.push_back(ni);
          }
        }
      }
      // Strictly larger wins; equal sizes keep the earlier (lower) id.
      if (size > best_size) {
        best_size = size;
        best_id = id;
      }
    }
    if (best_id < 0) continue;
    for (std::int64_t i = 0; i < n; ++i)
      if (pred[i] == cls && comp[i] == best_id)
        out[i] = static_cast<std::uint8_t>(cls);
  }
  return out;
}

MeanStd aggregate(const std::vector<std::optional<double>>& values) {
  if (values.empty()) throw ArgumentError("aggregate requires >= 1 value");
  MeanStd out;
  for (const auto& v : values)
    if (!v.has_value()) {
      out.na = true;
      return out;
    }
  double mean = 0.0;
  for (const auto& v : values) mean += *v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto& v : values) {
    const double d = *v - mean;
    var += d * d;
  }
  var /= static_cast<double>(values.size());
  out.mean = mean;
  out.stddev = std::sqrt(var);
  return out;
}

std::string format_mean_std(const MeanStd& ms, int precision) {
  if (ms.na) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f±%.*f", precision, ms.mean, precision,
                ms.stddev);
  return buf;
}

std::string metrics_to_csv(const std::vector<SubjectMetric>& rows) {
  std::ostringstream os;
  os << "subject,class,dice,asd\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.subject << "," << r.cls << ",";
    if (r.dice) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.dice);
      os << buf;
    }
    os << ",";
    if (r.asd) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.asd);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::vector<SubjectMetric> metrics_from_csv(const std::string& text) {
  std::vector<SubjectMetric> rows;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (first) {
      first = false;
      if (line.rfind("subject,", 0) == 0) continue;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string subject, cls, d, a;
    std::getline(ls, subject, ',');
    std::getline(ls, cls, ',');
    std::getline(ls, d, ',');
    std::getline(ls, a, ',');
    SubjectMetric m;
    m.subject = subject;
    m.cls = std::stoi(cls);
    if (!d.empty()) m.dice = std::stod(d);
    if (!a.empty()) m.asd = std::stod(a);
    rows.push_back(m);
  }
  return rows;
}

}  // namespace adaseg::metrics
