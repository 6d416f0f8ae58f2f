#pragma once

#include <Eigen/Dense>

#include <complex>

namespace disac {

using Vec3 = Eigen::Vector3d;
using Rotation = Eigen::Matrix3d;
using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kSpeedOfLight = 299'792'458.0;

// Angles in a node's local frame. The local frame has x along boresight
// (forward), y to the left and z up; azimuth is measured in the x-y plane
// from +x towards +y, elevation from that plane towards +z.
struct AnglePair {
  double azimuth = 0.0;
  double elevation = 0.0;
};

Vec3 direction_from_angles(const AnglePair& angles);
AnglePair angles_from_direction(const Vec3& direction);

// Wraps into (-pi, pi].
double wrap_angle(double radians);

bool is_finite(const Vec3& v);
bool is_rotation(const Rotation& r, double tol = 1e-9);

// Boresight along global +x yawed by `yaw` (about +z), then pitched down by
// `downtilt` radians.
Rotation orientation_from_yaw_downtilt(double yaw, double downtilt);

// Uniform planar array. The array lies in the node's local y-z plane facing
// +x: the n_x elements run along local y (horizontal axis) and the n_y
// elements along local z (vertical axis).
struct UpaGeometry {
  int n_x = 1;
  int n_y = 1;
  double spacing = 0.0;
  double wavelength = 0.0;

  int num_elements() const { return n_x * n_y; }
  double wavenumber() const;
  // Electrical phase step k*d per unit direction cosine.
  double phase_scale() const { return wavenumber() * spacing; }
  void validate() const;
};

// Per-axis spatial frequencies (electrical phase increments between adjacent
// elements) of a local-frame direction.
struct SpatialFrequencies {
  double horizontal = 0.0;
  double vertical = 0.0;
};

SpatialFrequencies spatial_frequencies(const AnglePair& angles, const UpaGeometry& geom);

// Phase progression [e^{j n omega}]_{n=0}^{count-1}.
CVector axis_response(int count, double omega);

// a_UPA = a_x (x) a_y, element (n, m) at index n * n_y + m.
CVector steering_vector(const AnglePair& angles, const UpaGeometry& geom);

}  // namespace disac
