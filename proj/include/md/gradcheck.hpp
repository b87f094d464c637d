#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "md/tensor.hpp"

namespace md {

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  /// Entries per leaf to probe; 0 probes all of them.
  std::size_t max_entries_per_leaf = 0;
  /// Errors are taken relative to max(|analytic|, |numeric|, abs_floor).
  double abs_floor = 1e-6;
  std::uint64_t seed = 7;
};

struct LeafCheck {
  std::string name;
  std::size_t probed = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<LeafCheck> leaves;
  double max_rel_error = 0.0;
  bool passed = true;
};

template <typename T>
struct NamedLeaf {
  std::string name;
  Tensor<T> tensor;
};

/// Compares backward() against central differences of `f` for each leaf.
/// `f` must rebuild its graph from the leaves on every call. Throws
/// ContractError if two evaluations at the same point disagree.
template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>()>& f, std::vector<NamedLeaf<T>> leaves,
                           const GradCheckOptions& options = {});

std::string format_report(const GradCheckReport& report);

}  // namespace md
