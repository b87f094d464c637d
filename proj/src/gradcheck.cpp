#include "md/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace md {

template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>()>& f, std::vector<NamedLeaf<T>> leaves,
                           const GradCheckOptions& options) {
  for (const auto& leaf : leaves) {
    if (!leaf.tensor.requires_grad()) throw ContractError("grad_check: leaf " + leaf.name + " does not require grad");
  }

  auto evaluate = [&]() {
    NoGradGuard guard;
    return static_cast<double>(f().item());
  };
  const double first = evaluate();
  const double second = evaluate();
  if (first != second && !(std::isnan(first) && std::isnan(second))) {
    throw ContractError("grad_check: function is not deterministic");
  }

  for (auto& leaf : leaves) leaf.tensor.zero_grad();
  {
    Tensor<T> root = f();
    root.backward();
  }

  GradCheckReport report;
  std::mt19937_64 gen(options.seed);
  for (auto& leaf : leaves) {
    LeafCheck check;
    check.name = leaf.name;
    const std::size_t n = leaf.tensor.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries_per_leaf != 0 && options.max_entries_per_leaf < n) {
      std::shuffle(idx.begin(), idx.end(), gen);
      idx.resize(options.max_entries_per_leaf);
      std::sort(idx.begin(), idx.end());
    }
    const std::vector<T> analytic(leaf.tensor.grad().begin(), leaf.tensor.grad().end());
    auto data = leaf.tensor.mutable_data();
    for (std::size_t i : idx) {
      const T original = data[i];
      data[i] = static_cast<T>(original + options.step);
      const double plus = evaluate();
      data[i] = static_cast<T>(original - options.step);
      const double minus = evaluate();
      data[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      check.max_rel_error = std::max(check.max_rel_error, std::isnan(rel) ? INFINITY : rel);
    }
    check.probed = idx.size();
    check.passed = check.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && check.passed;
    report.leaves.push_back(std::move(check));
  }
  return report;
}

std::string format_report(const GradCheckReport& report) {
  std::ostringstream os;
  for (const auto& leaf : report.leaves) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-40s probed=%-6zu max_rel_err=%.3e\n", leaf.passed ? "ok" : "FAIL",
                  leaf.name.c_str(), leaf.probed, leaf.max_rel_error);
    os << line;
  }
  char tail[128];
  std::snprintf(tail, sizeof tail, "%s (max_rel_err=%.3e)\n", report.passed ? "PASS" : "FAIL", report.max_rel_error);
  os << tail;
  return os.str();
}

template GradCheckReport grad_check(const std::function<Tensor<float>()>&, std::vector<NamedLeaf<float>>,
                                    const GradCheckOptions&);
template GradCheckReport grad_check(const std::function<Tensor<double>()>&, std::vector<NamedLeaf<double>>,
                                    const GradCheckOptions&);

}  // namespace md
