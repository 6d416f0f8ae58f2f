#pragma once

#include "disac/geometry.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace disac {

// Dense order-5 complex tensor, row-major (last index varies fastest).
class Tensor5 {
 public:
  using Shape = std::array<int, 5>;

  Tensor5() = default;
  explicit Tensor5(const Shape& shape);

  const Shape& shape() const { return shape_; }
  int dim(int mode) const { return shape_[mode]; }
  std::size_t size() const { return data_.size(); }
  // Distance in the flat array between consecutive indices of `mode`.
  std::size_t stride(int mode) const { return strides_[mode]; }

  cplx& operator()(int i0, int i1, int i2, int i3, int i4) { return data_[offset(i0, i1, i2, i3, i4)]; }
  const cplx& operator()(int i0, int i1, int i2, int i3, int i4) const { return data_[offset(i0, i1, i2, i3, i4)]; }

  std::size_t offset(int i0, int i1, int i2, int i3, int i4) const {
    return i0 * strides_[0] + i1 * strides_[1] + i2 * strides_[2] + i3 * strides_[3] + static_cast<std::size_t>(i4);
  }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  double norm() const;
  double squared_norm() const;

  Tensor5& operator+=(const Tensor5& other);
  Tensor5& operator*=(cplx scale);

  // Mode-n unfolding: rows index `mode`, columns the remaining modes in order.
  CMatrix unfold(int mode) const;

  // Multiplies `mode` by `matrix` (new_dim x old_dim): T x_n M.
  Tensor5 mode_product(int mode, const CMatrix& matrix) const;

  // Sum over r of weights[r] * a0(:,r) o a1(:,r) o ... o a4(:,r).
  static Tensor5 from_factors(const std::array<CMatrix, 5>& factors, const CVector& weights);

 private:
  Shape shape_{0, 0, 0, 0, 0};
  std::array<std::size_t, 5> strides_{0, 0, 0, 0, 1};
  std::vector<cplx> data_;
};

}  // namespace disac
