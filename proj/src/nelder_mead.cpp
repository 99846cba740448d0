#include "mixedboot/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mixedboot {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const Eigen::Index n = start.size();
  NelderMeadResult result;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> value(static_cast<std::size_t>(n + 1));
  for (Eigen::Index k = 0; k < n; ++k) vertex[static_cast<std::size_t>(k + 1)](k) += options.initial_step;
  for (std::size_t k = 0; k < vertex.size(); ++k) value[k] = eval(vertex[k]);

  std::vector<std::size_t> order(vertex.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    std::vector<Eigen::VectorXd> v2;
    std::vector<double> f2;
    for (std::size_t k : order) {
      v2.push_back(vertex[k]);
      f2.push_back(value[k]);
    }
    vertex.swap(v2);
    value.swap(f2);
  };

  const std::size_t worst = static_cast<std::size_t>(n);
  for (;;) {
    sort_vertices();
    const double spread = value[worst] - value[0];
    double size = 0.0;
    for (std::size_t k = 1; k < vertex.size(); ++k) {
      size = std::max(size, (vertex[k] - vertex[0]).cwiseAbs().maxCoeff());
    }
    const double scale = std::max(std::abs(value[0]), std::numeric_limits<double>::min());
    if (std::isfinite(spread) && spread <= options.ftol_rel * scale && size <= options.xtol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < worst; ++k) centroid += vertex[k];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + kReflect * (centroid - vertex[worst]);
    const double f_reflected = eval(reflected);

    if (f_reflected < value[0]) {
      const Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[worst - 1]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }

    // Outside contraction when the reflection beat the worst vertex, inside otherwise.
    const bool outside = f_reflected < value[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + kContract * (vertex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }

    for (std::size_t k = 1; k < vertex.size(); ++k) {
      vertex[k] = vertex[0] + kShrink * (vertex[k] - vertex[0]);
      value[k] = eval(vertex[k]);
    }
  }

  result.x = vertex[0];
  result.value = value[0];
  return result;
}

}  // namespace mixedboot
