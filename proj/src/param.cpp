#include "md/param.hpp"

#include <algorithm>

namespace md {

template <typename T>
Tensor<T> ParamStore<T>::add(std::string name, Shape shape, const std::vector<double>& values, bool frozen) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name: " + name);
  std::vector<T> data(values.size());
  std::transform(values.begin(), values.end(), data.begin(), [](double v) { return static_cast<T>(v); });
  auto tensor = Tensor<T>::from(std::move(shape), std::move(data), !frozen);
  params_.push_back({std::move(name), tensor, frozen});
  return tensor;
}

template <typename T>
const Parameter<T>* ParamStore<T>::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
Parameter<T>* ParamStore<T>::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
const Parameter<T>& ParamStore<T>::at(std::string_view name) const {
  const auto* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + std::string(name));
  return *p;
}

template <typename T>
Parameter<T>& ParamStore<T>::at(std::string_view name) {
  auto* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + std::string(name));
  return *p;
}

template <typename T>
void ParamStore<T>::set_frozen(std::string_view name, bool frozen) {
  auto& p = at(name);
  p.frozen = frozen;
  p.tensor.set_requires_grad(!frozen);
}

template <typename T>
void ParamStore<T>::freeze_all() {
  for (auto& p : params_) {
    p.frozen = true;
    p.tensor.set_requires_grad(false);
  }
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_)
    if (!p.frozen) p.tensor.zero_grad();
}

template <typename T>
std::size_t ParamStore<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (!p.frozen) n += p.tensor.size();
  return n;
}

template <typename T>
std::size_t ParamStore<T>::total_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

template <typename T>
template <typename U>
void ParamStore<T>::copy_values_from(const ParamStore<U>& other) {
  for (auto& p : params_) {
    const auto* src = other.find(p.name);
    if (!src) continue;
    if (src->tensor.shape() != p.tensor.shape()) {
      throw DimensionError("parameter " + p.name + ": shape " + to_string(src->tensor.shape()) + " vs " +
                           to_string(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    auto s = src->tensor.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(s[i]);
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void ParamStore<float>::copy_values_from(const ParamStore<float>&);
template void ParamStore<float>::copy_values_from(const ParamStore<double>&);
template void ParamStore<double>::copy_values_from(const ParamStore<float>&);
template void ParamStore<double>::copy_values_from(const ParamStore<double>&);

}  // namespace md
