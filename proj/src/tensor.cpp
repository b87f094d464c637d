#include "md/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

namespace md {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool grad_enabled = true;
std::atomic<std::uint64_t> node_counter{1};

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  }
}
}  // namespace

bool GradMode::enabled() { return grad_enabled; }
void GradMode::set_enabled(bool on) { grad_enabled = on; }

std::uint64_t next_node_id() { return node_counter.fetch_add(1, std::memory_order_relaxed); }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  check_shape(shape);
  std::vector<T> data(numel(shape), value);
  return from(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  check_shape(shape);
  if (numel(shape) != data.size()) {
    throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                         to_string(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->id = next_node_id();
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->data.size(), T(0));
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank()) throw DimensionError("axis out of range for shape " + to_string(shape()));
  return node_->shape[axis];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!node_->parents.empty()) throw ContractError("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = on;
  if (on) {
    node_->grad.assign(node_->data.size(), T(0));
  } else {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
  }
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

template <typename T>
void Tensor<T>::backward() const {
  if (size() != 1) throw ContractError("backward() requires a scalar root, got " + to_string(shape()));
  if (!node_->requires_grad) throw ContractError("backward() on a tensor that does not require grad");

  std::vector<Node<T>*> order;
  std::unordered_set<const Node<T>*> seen;
  std::vector<Node<T>*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });

  node_->grad[0] += T(1);
  for (Node<T>* n : order) {
    if (n->backward) n->backward(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->data, false);
}

namespace detail {

template <typename T>
static Tensor<T> finish_op(Shape shape, std::vector<T> data, std::vector<std::shared_ptr<Node<T>>> parents,
                           std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->id = next_node_id();
  bool needs = false;
  if (GradMode::enabled()) {
    for (auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->grad.assign(node->data.size(), T(0));
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> data, std::initializer_list<const Tensor<T>*> inputs,
                  std::function<void(Node<T>&)> backward) {
  std::vector<std::shared_ptr<Node<T>>> parents;
  parents.reserve(inputs.size());
  for (const Tensor<T>* t : inputs) {
    if (t && t->defined()) parents.push_back(t->node());
  }
  return finish_op<T>(std::move(shape), std::move(data), std::move(parents), std::move(backward));
}

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& inputs,
                  std::function<void(Node<T>&)> backward) {
  std::vector<std::shared_ptr<Node<T>>> parents;
  parents.reserve(inputs.size());
  for (const auto& t : inputs) parents.push_back(t.node());
  return finish_op<T>(std::move(shape), std::move(data), std::move(parents), std::move(backward));
}

template Tensor<float> make_op(Shape, std::vector<float>, std::initializer_list<const Tensor<float>*>,
                               std::function<void(Node<float>&)>);
template Tensor<double> make_op(Shape, std::vector<double>, std::initializer_list<const Tensor<double>*>,
                                std::function<void(Node<double>&)>);
template Tensor<float> make_op(Shape, std::vector<float>, const std::vector<Tensor<float>>&,
                               std::function<void(Node<float>&)>);
template Tensor<double> make_op(Shape, std::vector<double>, const std::vector<Tensor<double>>&,
                                std::function<void(Node<double>&)>);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;

}  // namespace md
