#include "disac/geometry.hpp"

#include "disac/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace disac {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::RankDeficient: return "rank-deficient";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::Unidentifiable: return "unidentifiable";
    case ErrorKind::Underdetermined: return "underdetermined";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

Vec3 direction_from_angles(const AnglePair& a) {
  const double ce = std::cos(a.elevation);
  return {ce * std::cos(a.azimuth), ce * std::sin(a.azimuth), std::sin(a.elevation)};
}

AnglePair angles_from_direction(const Vec3& d) {
  const Vec3 u = d.normalized();
  AnglePair out;
  out.elevation = std::asin(std::clamp(u.z(), -1.0, 1.0));
  out.azimuth = wrap_angle(std::atan2(u.y(), u.x()));
  return out;
}

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(radians, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

bool is_finite(const Vec3& v) { return v.allFinite(); }

bool is_rotation(const Rotation& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Rotation::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

Rotation orientation_from_yaw_downtilt(double yaw, double downtilt) {
  const Eigen::AngleAxisd yaw_rot(yaw, Vec3::UnitZ());
  // Positive rotation about +y tilts +x towards -z.
  const Eigen::AngleAxisd pitch_rot(downtilt, Vec3::UnitY());
  return (yaw_rot * pitch_rot).toRotationMatrix();
}

double UpaGeometry::wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

void UpaGeometry::validate() const {
  if (n_x < 1 || n_y < 1) throw Error(ErrorKind::InvalidArgument, "UPA element counts must be >= 1");
  if (!(spacing > 0.0) || !(wavelength > 0.0))
    throw Error(ErrorKind::InvalidArgument, "UPA spacing and wavelength must be positive");
}

SpatialFrequencies spatial_frequencies(const AnglePair& angles, const UpaGeometry& geom) {
  const Vec3 d = direction_from_angles(angles);
  const double scale = geom.phase_scale();
  return {scale * d.y(), scale * d.z()};
}

CVector axis_response(int count, double omega) {
  CVector v(count);
  for (int n = 0; n < count; ++n) v[n] = std::polar(1.0, omega * n);
  return v;
}

CVector steering_vector(const AnglePair& angles, const UpaGeometry& geom) {
  const auto f = spatial_frequencies(angles, geom);
  const CVector ax = axis_response(geom.n_x, f.horizontal);
  const CVector ay = axis_response(geom.n_y, f.vertical);
  CVector a(geom.num_elements());
  for (int n = 0; n < geom.n_x; ++n)
    for (int m = 0; m < geom.n_y; ++m) a[n * geom.n_y + m] = ax[n] * ay[m];
  return a;
}

}  // namespace disac
