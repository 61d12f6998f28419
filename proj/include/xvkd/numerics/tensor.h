// Copyright (c) 2026 xvkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVKD_NUMERICS_TENSOR_H_
#define XVKD_NUMERICS_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace xvkd {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

// Backward callback of a recorded op: receives the op output's data and
// gradient, and accumulates into the gradients of its inputs.
using BackwardFn = std::function<void(std::span<const double> out,
                                      std::span<const double> grad_out)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty when no gradient is held
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;  // empty for leaves
};

}  // namespace internal

// Shape-tagged row-major array of doubles with an optional gradient.
//
// Tensor is a handle: copies share storage. Use Clone() for a deep copy.
// Tensors produced by differentiable ops remember their inputs so that
// Backward() can propagate gradients to every reachable leaf that has
// requires_grad set.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);
  static Tensor Vector(std::vector<double> values, bool requires_grad = false);
  static Tensor Matrix(const std::vector<std::vector<double>>& rows,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(node_->data.size()); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double operator[](int64_t i) const { return node_->data[i]; }
  // Element (row, col) of a rank-2 tensor.
  double at(int64_t row, int64_t col) const {
    return node_->data[row * node_->shape[1] + col];
  }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool is_leaf() const { return !node_->backward; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();  // allocates zeros when absent
  void ZeroGrad();
  void ClearGrad() { node_->grad.clear(); }

  // New leaf sharing nothing with this tensor.
  Tensor Clone() const;
  // New leaf holding a copy of the data, with no history.
  Tensor Detach() const;
  // Copy of row `row` of a rank-2 tensor as a rank-1 leaf.
  Tensor Row(int64_t row) const;

  bool SharesStorageWith(const Tensor& other) const {
    return node_ == other.node_;
  }

  const std::shared_ptr<internal::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<internal::Node> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<internal::Node> node_;
};

// Runs reverse-mode differentiation from a scalar loss. Gradients of leaf
// tensors accumulate across calls until cleared; gradients of intermediate
// results are recomputed on each call.
void Backward(const Tensor& loss);

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Records an op result. When recording is disabled, or none of the inputs
// requires a gradient, the result is a plain leaf and `backward` is dropped.
Tensor MakeResult(Shape shape, std::vector<double> data,
                  std::initializer_list<Tensor> inputs,
                  internal::BackwardFn backward);
Tensor MakeResult(Shape shape, std::vector<double> data,
                  const std::vector<Tensor>& inputs,
                  internal::BackwardFn backward);

namespace internal {

// Gradient buffer of an op input, allocated as zeros on first use. Only
// valid inside backward callbacks for inputs with requires_grad set.
std::span<double> GradOf(const Tensor& t);

}  // namespace internal

}  // namespace xvkd

#endif  // XVKD_NUMERICS_TENSOR_H_
