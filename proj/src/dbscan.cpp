#include "disac/error.hpp"
#include "disac/pipeline.hpp"

#include <limits>
#include <tuple>

namespace disac {

namespace {

bool lexicographically_less(const Vec3& a, const Vec3& b) {
  return std::tie(a[0], a[1], a[2]) < std::tie(b[0], b[1], b[2]);
}

}  // namespace

ClusterLabeling dbscan(const std::vector<Vec3>& points, double eps, int min_points) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "DBSCAN eps must be positive");
  if (min_points < 1) throw Error(ErrorKind::InvalidArgument, "DBSCAN min_points must be >= 1");
  const int n = static_cast<int>(points.size());
  const double eps2 = eps * eps;

  std::vector<std::vector<int>> neighbours(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((points[i] - points[j]).squaredNorm() <= eps2) neighbours[i].push_back(j);
  std::vector<char> core(n);
  for (int i = 0; i < n; ++i) core[i] = static_cast<int>(neighbours[i].size()) >= min_points;

  // Connected components of the core graph.
  std::vector<int> raw(n, -1);
  int count = 0;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || raw[i] >= 0) continue;
    raw[i] = count;
    stack.assign(1, i);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for (int q : neighbours[p]) {
        if (core[q] && raw[q] < 0) {
          raw[q] = count;
          stack.push_back(q);
        }
      }
    }
    ++count;
  }

  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int q : neighbours[i]) {
      if (!core[q]) continue;
      const double d2 = (points[i] - points[q]).squaredNorm();
      if (best < 0 || d2 < best_d2 ||
          (d2 == best_d2 && lexicographically_less(points[q], points[best]))) {
        best = q;
        best_d2 = d2;
      }
    }
    if (best >= 0) raw[i] = raw[best];
  }

  // Renumber by first appearance in input order.
  std::vector<int> remap(count, -1);
  ClusterLabeling out;
  out.labels.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (raw[i] < 0) continue;
    if (remap[raw[i]] < 0) remap[raw[i]] = out.cluster_count++;
    out.labels[i] = remap[raw[i]];
  }
  return out;
}

ClusterLabeling dbscan(const std::vector<LocalizedPoint>& points, double eps, int min_points) {
  std::vector<Vec3> xyz;
  xyz.reserve(points.size());
  for (const auto& p : points) xyz.push_back(p.position);
  return dbscan(xyz, eps, min_points);
}

}  // namespace disac
