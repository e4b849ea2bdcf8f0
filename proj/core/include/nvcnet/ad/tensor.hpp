/**
 * Copyright 2026 The nvcnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nvcnet/errors.hpp"

namespace nvc::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Storage behind a Tensor handle. Values are immutable once an op has
// produced them; only the gradient buffer is written after construction
// (leaf parameters are the exception: the optimizer updates them in place).
template <class T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  // In-place access for leaf tensors (parameters, optimizer updates, tests).
  std::span<T> mutable_values() { return node_->value; }
  T item() const;
  T operator[](std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  // New leaf sharing no history with this tensor.
  Tensor detach() const;
  // Deep copy preserving requires_grad; used for parameter snapshots.
  Tensor clone() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Ordered record of executed primitives. Backward replays the record in
// reverse, calling each entry once; a tape can be consumed only once.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const T> out_grad)>;

  void record(std::shared_ptr<Node<T>> output, BackwardFn fn);
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }
  void clear();

 private:
  struct Entry {
    std::shared_ptr<Node<T>> output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// The tape ops record onto, or nullptr when recording is off.
template <class T>
Tape<T>* active_tape();

// RAII guard making `tape` the active one for the current thread.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// RAII guard disabling recording (inference, detached computations).
template <class T>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

namespace detail {
template <class T>
void set_active_tape(Tape<T>* tape);
}  // namespace detail

// Convenience for op implementations: builds the output tensor and records
// `fn` on the active tape when any input requires a gradient.
template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values,
                      std::initializer_list<const Tensor<T>*> inputs,
                      typename Tape<T>::BackwardFn fn);

template <class T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> inputs);

}  // namespace nvc::ad
