#pragma once

#include <array>
#include <vector>

#include "levyhomog/grid.hpp"

namespace levyhomog {

/// One term amp * cos(2*pi*(kx.x + kxi.xi + phase)). Phases are in turns, so
/// phase = -0.25 turns cos into sin.
struct TrigTerm {
  double amp = 0.0;
  std::array<int, 2> kx{0, 0};
  std::array<int, 2> kxi{0, 0};
  double phase = 0.0;
};

/// Trigonometric polynomial in a slow and a fast torus variable. Used for the
/// drift/cost tables and kernel spatial factors so that sup norms and Holder
/// constants are computable in closed form.
class TrigPoly2 {
 public:
  TrigPoly2() = default;
  explicit TrigPoly2(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}
  static TrigPoly2 constant(double c);

  double eval(const Point& x, const Point& xi) const;
  double eval_x(const Point& x) const { return eval(x, {0.0, 0.0}); }

  /// Sum of |amp|; upper bound for the sup norm.
  double sup_bound() const;
  /// Lipschitz constant with respect to the slow variable.
  double lip_x() const;
  double lip_xi() const;

  TrigPoly2 scaled(double s) const;
  TrigPoly2 plus_constant(double c) const;

  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<TrigTerm> terms_;
};

}  // namespace levyhomog
