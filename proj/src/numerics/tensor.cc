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

#include "xvkd/numerics/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "xvkd/base/error.h"

namespace xvkd {

namespace {

thread_local bool g_grad_enabled = true;

}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0)
      throw ShapeError("negative dimension in " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<internal::Node>()) {
  if (NumElements(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("shape " + ShapeToString(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  const int64_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  const int64_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::Vector(std::vector<double> values, bool requires_grad) {
  const auto n = static_cast<int64_t>(values.size());
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::Matrix(const std::vector<std::vector<double>>& rows,
                      bool requires_grad) {
  const auto r = static_cast<int64_t>(rows.size());
  const auto c = r == 0 ? int64_t{0} : static_cast<int64_t>(rows[0].size());
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (static_cast<int64_t>(row.size()) != c) {
      throw ShapeError("ragged rows in Tensor::Matrix");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data), requires_grad);
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis out of range for shape " + ShapeToString(shape()));
  }
  return node_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->data[0];
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::ZeroGrad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::Clone() const {
  Tensor out(node_->shape, node_->data, node_->requires_grad);
  out.node_->grad = node_->grad;
  return out;
}

Tensor Tensor::Detach() const {
  return Tensor(node_->shape, node_->data, false);
}

Tensor Tensor::Row(int64_t row) const {
  if (rank() != 2 || row < 0 || row >= node_->shape[0]) {
    throw ShapeError("Row(" + std::to_string(row) + ") of shape " +
                     ShapeToString(shape()));
  }
  const int64_t c = node_->shape[1];
  auto first = node_->data.begin() + row * c;
  return Tensor({c}, std::vector<double>(first, first + c), false);
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("Backward() needs a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw InvalidArgumentError("loss does not depend on any parameter");
  }

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<internal::Node*> order;
  std::unordered_set<internal::Node*> visited;
  std::vector<std::pair<internal::Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      internal::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (internal::Node* node : order) {
    if (node->backward) {
      node->grad.assign(node->data.size(), 0.0);
    } else if (node->grad.empty()) {
      node->grad.assign(node->data.size(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node* node = *it;
    if (node->backward) node->backward(node->data, node->grad);
  }
  // Intermediate gradients are only needed during the sweep.
  for (internal::Node* node : order) {
    if (node->backward) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool GradEnabled() { return g_grad_enabled; }

namespace {

template <typename Range>
Tensor MakeResultImpl(Shape shape, std::vector<double> data,
                      const Range& inputs, internal::BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const Tensor& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) node.parents.push_back(t.node());
  }
  node.backward = std::move(backward);
  return out;
}

}  // namespace

std::span<double> internal::GradOf(const Tensor& t) {
  auto& grad = t.node()->grad;
  if (grad.empty()) grad.assign(t.node()->data.size(), 0.0);
  return grad;
}

Tensor MakeResult(Shape shape, std::vector<double> data,
                  std::initializer_list<Tensor> inputs,
                  internal::BackwardFn backward) {
  return MakeResultImpl(std::move(shape), std::move(data), inputs,
                        std::move(backward));
}

Tensor MakeResult(Shape shape, std::vector<double> data,
                  const std::vector<Tensor>& inputs,
                  internal::BackwardFn backward) {
  return MakeResultImpl(std::move(shape), std::move(data), inputs,
                        std::move(backward));
}

}  // namespace xvkd
