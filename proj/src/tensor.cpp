#include "disac/tensor.hpp"

#include "disac/error.hpp"

#include <cmath>
#include <string>

namespace disac {

Tensor5::Tensor5(const Shape& shape) : shape_(shape) {
  std::size_t stride = 1;
  for (int m = 4; m >= 0; --m) {
    if (shape[m] < 0) throw Error(ErrorKind::InvalidArgument, "negative tensor dimension");
    strides_[m] = stride;
    stride *= static_cast<std::size_t>(shape[m]);
  }
  data_.assign(stride, cplx(0.0, 0.0));
}

double Tensor5::squared_norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return s;
}

double Tensor5::norm() const { return std::sqrt(squared_norm()); }

Tensor5& Tensor5::operator+=(const Tensor5& other) {
  if (other.shape_ != shape_) throw Error(ErrorKind::DimensionMismatch, "tensor shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor5& Tensor5::operator*=(cplx scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

CMatrix Tensor5::unfold(int mode) const {
  const int rows = shape_[mode];
  const std::size_t cols = rows == 0 ? 0 : data_.size() / rows;
  CMatrix out(rows, static_cast<Eigen::Index>(cols));
  // Remaining modes keep their relative order; the column index is their
  // row-major offset with `mode` removed.
  const std::size_t outer = mode == 0 ? 1 : data_.size() / (strides_[mode - 1]);
  const std::size_t inner = strides_[mode];
  std::size_t col = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in, ++col) {
      const std::size_t base = (mode == 0 ? 0 : o * strides_[mode - 1]) + in;
      for (int r = 0; r < rows; ++r) out(r, static_cast<Eigen::Index>(col)) = data_[base + r * inner];
    }
  }
  return out;
}

Tensor5 Tensor5::mode_product(int mode, const CMatrix& matrix) const {
  if (matrix.cols() != shape_[mode])
    throw Error(ErrorKind::DimensionMismatch, "mode product dimension mismatch on mode " + std::to_string(mode));
  Shape new_shape = shape_;
  new_shape[mode] = static_cast<int>(matrix.rows());
  Tensor5 out(new_shape);
  const std::size_t inner = strides_[mode];
  const std::size_t outer = mode == 0 ? 1 : data_.size() / strides_[mode - 1];
  const std::size_t old_block = mode == 0 ? data_.size() : strides_[mode - 1];
  const std::size_t new_block = mode == 0 ? out.size() : out.strides_[mode - 1];
  for (std::size_t o = 0; o < outer; ++o) {
    const cplx* src = data_.data() + o * old_block;
    cplx* dst = out.data_.data() + o * new_block;
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      for (int c = 0; c < shape_[mode]; ++c) {
        const cplx m = matrix(r, c);
        if (m == cplx(0.0, 0.0)) continue;
        const cplx* s = src + c * inner;
        cplx* d = dst + r * inner;
        for (std::size_t i = 0; i < inner; ++i) d[i] += m * s[i];
      }
    }
  }
  return out;
}

Tensor5 Tensor5::from_factors(const std::array<CMatrix, 5>& f, const CVector& w) {
  Shape shape;
  for (int m = 0; m < 5; ++m) {
    shape[m] = static_cast<int>(f[m].rows());
    if (f[m].cols() != w.size()) throw Error(ErrorKind::DimensionMismatch, "factor rank mismatch");
  }
  Tensor5 out(shape);
  for (Eigen::Index r = 0; r < w.size(); ++r) {
    std::size_t idx = 0;
    for (int a = 0; a < shape[0]; ++a) {
      const cplx va = w[r] * f[0](a, r);
      for (int b = 0; b < shape[1]; ++b) {
        const cplx vb = va * f[1](b, r);
        for (int c = 0; c < shape[2]; ++c) {
          const cplx vc = vb * f[2](c, r);
          for (int d = 0; d < shape[3]; ++d) {
            const cplx vd = vc * f[3](d, r);
            for (int e = 0; e < shape[4]; ++e) out.data_[idx++] += vd * f[4](e, r);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace disac
