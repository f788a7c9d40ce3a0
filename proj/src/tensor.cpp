#include "sigld/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace sigld {

namespace {
std::atomic<bool> g_limit_override{false};
}

void set_tensor_limit_override(bool enabled) { g_limit_override.store(enabled); }
bool tensor_limit_override() { return g_limit_override.load(); }

std::size_t level_size(int dim, int level) {
  std::size_t n = 1;
  for (int i = 0; i < level; ++i) {
    if (n > (static_cast<std::size_t>(1) << 40) / static_cast<std::size_t>(dim))
      throw std::invalid_argument("tensor size overflow: dim=" + std::to_string(dim) +
                                  " level=" + std::to_string(level));
    n *= static_cast<std::size_t>(dim);
  }
  return n;
}

std::size_t flat_index(int dim, std::span<const int> index) {
  std::size_t flat = 0;
  for (int i : index) {
    if (i < 0 || i >= dim)
      throw std::out_of_range("tensor index " + std::to_string(i) + " out of range for dim " +
                              std::to_string(dim));
    flat = flat * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i);
  }
  return flat;
}

std::vector<int> multi_index(int dim, int level, std::size_t flat) {
  std::vector<int> idx(static_cast<std::size_t>(level));
  for (int j = level - 1; j >= 0; --j) {
    idx[static_cast<std::size_t>(j)] = static_cast<int>(flat % static_cast<std::size_t>(dim));
    flat /= static_cast<std::size_t>(dim);
  }
  if (flat != 0) throw std::out_of_range("flat index out of range");
  return idx;
}

LevelTensor::LevelTensor(int dim, int level) : dim_(dim), level_(level) {
  if (dim < 1) throw std::invalid_argument("tensor dim must be >= 1, got " + std::to_string(dim));
  if (level < 0) throw std::invalid_argument("tensor level must be >= 0, got " + std::to_string(level));
  if (!tensor_limit_override() && (dim > kMaxTensorDim || level > kMaxTensorLevel))
    throw std::invalid_argument("tensor shape (dim=" + std::to_string(dim) + ", level=" +
                                std::to_string(level) + ") exceeds desk-scale limits (dim<=" +
                                std::to_string(kMaxTensorDim) + ", level<=" +
                                std::to_string(kMaxTensorLevel) + "); set the override to proceed");
  data_.assign(level_size(dim, level), 0.0);
}

LevelTensor LevelTensor::scalar(int dim, double value) {
  LevelTensor t(dim, 0);
  t.data_[0] = value;
  return t;
}

LevelTensor LevelTensor::from_vector(int dim, std::span<const double> v) {
  if (static_cast<std::size_t>(dim) != v.size())
    throw std::invalid_argument("vector length " + std::to_string(v.size()) +
                                " does not match dim " + std::to_string(dim));
  LevelTensor t(dim, 1);
  for (std::size_t i = 0; i < v.size(); ++i) t.data_[i] = v[i];
  return t;
}

double LevelTensor::at(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != level_)
    throw std::invalid_argument("multi-index length " + std::to_string(index.size()) +
                                " does not match level " + std::to_string(level_));
  return data_[flat_index(dim_, index)];
}

void LevelTensor::fill(double v) {
  for (double& x : data_) x = v;
}

void LevelTensor::scale(double c) {
  for (double& x : data_) x *= c;
}

LevelTensor tensor_product(const LevelTensor& a, const LevelTensor& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("tensor_product dim mismatch: " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
  LevelTensor out(a.dim(), a.level() + b.level());
  const std::size_t nb = b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    double* dst = out.data().data() + i * nb;
    for (std::size_t j = 0; j < nb; ++j) dst[j] += ai * b[j];
  }
  return out;
}

void add_scaled(LevelTensor& acc, const LevelTensor& x, double c) {
  if (acc.dim() != x.dim() || acc.level() != x.level())
    throw std::invalid_argument("add_scaled shape mismatch: (dim " + std::to_string(acc.dim()) +
                                ", level " + std::to_string(acc.level()) + ") vs (dim " +
                                std::to_string(x.dim()) + ", level " + std::to_string(x.level()) + ")");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * x[i];
}

double sup_norm(const LevelTensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const LevelTensor& a, const LevelTensor& b) {
  if (a.dim() != b.dim() || a.level() != b.level())
    throw std::invalid_argument("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

LevelTensor tensor_power(const LevelTensor& v, int k) {
  if (v.level() != 1) throw std::invalid_argument("tensor_power expects a level-1 input");
  LevelTensor out = LevelTensor::scalar(v.dim(), 1.0);
  for (int i = 0; i < k; ++i) out = tensor_product(out, v);
  return out;
}

}  // namespace sigld
