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

#include "nvcnet/ad/tensor.hpp"

#include <sstream>

namespace nvc::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  if (ad::numel(shape) != values.size()) {
    throw DimensionError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const auto n = ad::numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = ad::numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <class T>
std::size_t Tensor<T>::dim(std::size_t i) const {
  if (i >= node_->shape.size()) {
    throw DimensionError("dimension index " + std::to_string(i) + " out of range for shape " +
                         to_string(node_->shape));
  }
  return node_->shape[i];
}

template <class T>
T Tensor<T>::item() const {
  if (node_->value.size() != 1) {
    throw DimensionError("item() on non-scalar tensor of shape " + to_string(node_->shape));
  }
  return node_->value[0];
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(node_->shape, node_->value, node_->requires_grad);
}

template <class T>
void Tape<T>::record(std::shared_ptr<Node<T>> output, BackwardFn fn) {
  if (consumed_) throw ContractError("recording onto a tape that was already consumed");
  entries_.push_back({std::move(output), std::move(fn)});
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss");
  }
  if (consumed_) {
    throw ContractError("backward called twice on the same tape; re-run the forward pass");
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward on a loss that was not recorded under an active tape");
  }
  consumed_ = true;
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->fn(it->output->grad);
  }
  // Drop saved activations as soon as the pass is done.
  entries_.clear();
}

template <class T>
void Tape<T>::clear() {
  entries_.clear();
  consumed_ = false;
}

namespace {
template <class T>
Tape<T>*& tape_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}
}  // namespace

template <class T>
Tape<T>* active_tape() {
  return tape_slot<T>();
}

namespace detail {
template <class T>
void set_active_tape(Tape<T>* tape) {
  tape_slot<T>() = tape;
}
}  // namespace detail

template <class T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(active_tape<T>()) {
  detail::set_active_tape<T>(&tape);
}

template <class T>
TapeScope<T>::~TapeScope() {
  detail::set_active_tape<T>(previous_);
}

template <class T>
NoGradScope<T>::NoGradScope() : previous_(active_tape<T>()) {
  detail::set_active_tape<T>(nullptr);
}

template <class T>
NoGradScope<T>::~NoGradScope() {
  detail::set_active_tape<T>(previous_);
}

template <class T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> inputs) {
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values,
                      std::initializer_list<const Tensor<T>*> inputs,
                      typename Tape<T>::BackwardFn fn) {
  Tape<T>* tape = active_tape<T>();
  const bool track = tape != nullptr && any_requires_grad<T>(inputs);
  Tensor<T> out(std::move(shape), std::move(values), track);
  if (track) tape->record(out.node_ptr(), std::move(fn));
  return out;
}

#define NVC_INSTANTIATE(T)                                                                  \
  template class Tensor<T>;                                                                 \
  template class Tape<T>;                                                                   \
  template class TapeScope<T>;                                                              \
  template class NoGradScope<T>;                                                            \
  template Tape<T>* active_tape<T>();                                                       \
  template void detail::set_active_tape<T>(Tape<T>*);                                       \
  template bool any_requires_grad<T>(std::initializer_list<const Tensor<T>*>);              \
  template Tensor<T> make_result<T>(Shape, std::vector<T>,                                  \
                                    std::initializer_list<const Tensor<T>*>,                \
                                    typename Tape<T>::BackwardFn);

NVC_INSTANTIATE(float)
NVC_INSTANTIATE(double)

#undef NVC_INSTANTIATE

}  // namespace nvc::ad
