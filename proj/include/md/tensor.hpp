#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace md {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Thrown when tensor shapes are incompatible with an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a caller violates an API precondition that is not about shapes.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown for invalid or inconsistent configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a masked reduction has no valid element to reduce over.
class EmptyMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Process-wide switch for recording the autodiff graph on the current thread.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

/// RAII guard that disables graph recording (inference, frozen encoders).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // sized iff requires_grad
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;
};

std::uint64_t next_node_id();

/// Handle to a node of the reverse-mode graph. Copies share storage.
///
/// Data is immutable once an op has produced it; only leaves (parameters,
/// inputs) are written in place, and only between forward passes.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }

  bool requires_grad() const { return node_->requires_grad; }
  /// Turns a leaf into (or out of) a gradient-receiving tensor.
  void set_requires_grad(bool on);
  void zero_grad();

  T item() const;

  /// Reverse sweep from this scalar. Nodes run in descending creation order,
  /// which is a topological order of the graph and fixed for a given program.
  void backward() const;

  /// Same data, cut from the graph.
  Tensor detach() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

/// Builds the result of a primitive. The backward closure is stored only when
/// grad mode is on and at least one input requires grad.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> data,
                  std::initializer_list<const Tensor<T>*> inputs,
                  std::function<void(Node<T>&)> backward);

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> data,
                  const std::vector<Tensor<T>>& inputs,
                  std::function<void(Node<T>&)> backward);

template <typename T>
inline void accumulate(Node<T>& target, std::span<const T> delta) {
  for (std::size_t i = 0; i < delta.size(); ++i) target.grad[i] += delta[i];
}

}  // namespace detail

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace md
