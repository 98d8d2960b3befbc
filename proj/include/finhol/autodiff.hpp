#pragma once

#include <span>
#include <vector>

#include "finhol/dual.hpp"
#include "finhol/errors.hpp"
#include "finhol/linalg.hpp"

namespace finhol {

template <int K>
struct carrier {
  using type = Dual<typename carrier<K - 1>::type>;
};
template <>
struct carrier<0> {
  using type = double;
};
template <int K>
using carrier_t = typename carrier<K>::type;

// Variable i lifted to depth K: level L (1 = innermost) is seeded with
// component i of dirs[L-1].
template <int K>
carrier_t<K> seeded(double x, int i, const std::vector<Vec<double>>& dirs) {
  if constexpr (K == 0) {
    return x;
  } else {
    return carrier_t<K>(seeded<K - 1>(x, i, dirs),
                        carrier_t<K - 1>(dirs[K - 1][static_cast<std::size_t>(i)]));
  }
}

// The fully mixed derivative part: take .dot once per level.
template <int K>
double mixed_part(const carrier_t<K>& x) {
  if constexpr (K == 0) {
    return x;
  } else {
    return mixed_part<K - 1>(x.dot);
  }
}

namespace detail {

template <int K, class F>
double directional_impl(F& f, std::span<const double> p,
                        const std::vector<Vec<double>>& dirs) {
  std::vector<carrier_t<K>> xs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    xs[i] = seeded<K>(p[i], static_cast<int>(i), dirs);
  carrier_t<K> r = f(std::span<const carrier_t<K>>(xs));
  return mixed_part<K>(r);
}

}  // namespace detail

// Mixed directional derivative D_{dirs[k-1]} ... D_{dirs[0]} f at p.
// f must be callable as T f(std::span<const T>) for any nesting of Dual.
// With no directions this is a plain evaluation.
template <class F>
double directional_derivative(F&& f, std::span<const double> p,
                              const std::vector<Vec<double>>& dirs,
                              int depth_cap = 6) {
  const int k = static_cast<int>(dirs.size());
  if (k > depth_cap)
    throw ConfigError("derivative order " + std::to_string(k) +
                      " exceeds depth cap " + std::to_string(depth_cap));
  for (const auto& d : dirs)
    if (d.size() != p.size())
      throw ConfigError("seed direction dimension does not match point dimension");
  switch (k) {
    case 0: return detail::directional_impl<0>(f, p, dirs);
    case 1: return detail::directional_impl<1>(f, p, dirs);
    case 2: return detail::directional_impl<2>(f, p, dirs);
    case 3: return detail::directional_impl<3>(f, p, dirs);
    case 4: return detail::directional_impl<4>(f, p, dirs);
    case 5: return detail::directional_impl<5>(f, p, dirs);
    case 6: return detail::directional_impl<6>(f, p, dirs);
    default:
      throw ConfigError("derivative order " + std::to_string(k) +
                        " not supported by this entry point");
  }
}

// Dense Jacobian of a vector-valued map, one forward pass per column.
// f must be callable as std::vector<T> f(std::span<const T>).
template <class F>
Mat<double> jacobian(F&& f, std::span<const double> p) {
  const int n = static_cast<int>(p.size());
  Mat<double> J;
  for (int j = 0; j < n; ++j) {
    std::vector<Dual<double>> xs(p.size());
    for (int i = 0; i < n; ++i)
      xs[static_cast<std::size_t>(i)] = Dual<double>(p[static_cast<std::size_t>(i)], i == j ? 1.0 : 0.0);
    std::vector<Dual<double>> fx = f(std::span<const Dual<double>>(xs));
    if (J.rows == 0) J = Mat<double>(static_cast<int>(fx.size()), n);
    for (int i = 0; i < J.rows; ++i) J(i, j) = fx[static_cast<std::size_t>(i)].dot;
  }
  return J;
}

}  // namespace finhol
