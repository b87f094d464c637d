#pragma once

#include <string>
#include <vector>

#include "md/tensor.hpp"

namespace md {

/// A named model tensor. Frozen parameters never require grad, so backward
/// leaves their grad absent and the optimizer never sees them.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  bool frozen = false;
};

/// Ordered, name-unique collection of every tensor a model owns.
template <typename T>
class ParamStore {
 public:
  Tensor<T> add(std::string name, Shape shape, const std::vector<double>& values, bool frozen);

  const std::vector<Parameter<T>>& all() const { return params_; }
  std::vector<Parameter<T>>& all() { return params_; }

  const Parameter<T>* find(std::string_view name) const;
  Parameter<T>* find(std::string_view name);
  const Parameter<T>& at(std::string_view name) const;
  Parameter<T>& at(std::string_view name);

  void set_frozen(std::string_view name, bool frozen);
  void freeze_all();
  void zero_grad();

  /// Scalars over non-frozen parameters.
  std::size_t trainable_count() const;
  std::size_t total_count() const;

  /// Copies values (cast to T) for every parameter name present in both stores.
  /// Shapes must match; names only in `other` are ignored.
  template <typename U>
  void copy_values_from(const ParamStore<U>& other);

 private:
  std::vector<Parameter<T>> params_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace md
