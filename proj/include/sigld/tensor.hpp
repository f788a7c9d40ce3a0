#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sigld {

// Desk-scale guard on dense d^k storage; larger shapes need the override.
inline constexpr int kMaxTensorDim = 4;
inline constexpr int kMaxTensorLevel = 6;
void set_tensor_limit_override(bool enabled);
bool tensor_limit_override();

std::size_t level_size(int dim, int level);  // dim^level

// Flat index of (i_1,...,i_k): sum_j i_j * dim^(k-j). Row-major, first
// index slowest.
std::size_t flat_index(int dim, std::span<const int> index);
std::vector<int> multi_index(int dim, int level, std::size_t flat);

// Dense level-k element of (R^d)^{tensor k}, flat row-major storage.
// Level 0 is a single scalar.
class LevelTensor {
 public:
  LevelTensor(int dim, int level);  // zero tensor
  static LevelTensor scalar(int dim, double value);
  static LevelTensor from_vector(int dim, std::span<const double> v);  // level 1

  int dim() const { return dim_; }
  int level() const { return level_; }
  std::size_t size() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::span<const int> index) const;
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  void fill(double v);
  void scale(double c);

 private:
  int dim_;
  int level_;
  std::vector<double> data_;
};

// Outer product: result[(I,J)] = a[I] * b[J], level j+k.
LevelTensor tensor_product(const LevelTensor& a, const LevelTensor& b);

// acc += c * x, elementwise; shapes must match.
void add_scaled(LevelTensor& acc, const LevelTensor& x, double c);

double sup_norm(const LevelTensor& a);
double max_abs_diff(const LevelTensor& a, const LevelTensor& b);

// v^{tensor k} for a level-1 input.
LevelTensor tensor_power(const LevelTensor& v, int k);

}  // namespace sigld
