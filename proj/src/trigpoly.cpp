#include "levyhomog/trigpoly.hpp"

#include <cmath>

namespace levyhomog {

TrigPoly2 TrigPoly2::constant(double c) {
  if (c == 0.0) return TrigPoly2{};
  return TrigPoly2({TrigTerm{c, {0, 0}, {0, 0}, 0.0}});
}

double TrigPoly2::eval(const Point& x, const Point& xi) const {
  double s = 0.0;
  for (const TrigTerm& t : terms_) {
    const double arg = t.kx[0] * x[0] + t.kx[1] * x[1] + t.kxi[0] * xi[0] +
                       t.kxi[1] * xi[1] + t.phase;
    s += t.amp * std::cos(2.0 * M_PI * arg);
  }
  return s;
}

double TrigPoly2::sup_bound() const {
  double s = 0.0;
  for (const TrigTerm& t : terms_) s += std::abs(t.amp);
  return s;
}

double TrigPoly2::lip_x() const {
  double s = 0.0;
  for (const TrigTerm& t : terms_)
    s += std::abs(t.amp) * 2.0 * M_PI *
         std::hypot(double(t.kx[0]), double(t.kx[1]));
  return s;
}

double TrigPoly2::lip_xi() const {
  double s = 0.0;
  for (const TrigTerm& t : terms_)
    s += std::abs(t.amp) * 2.0 * M_PI *
         std::hypot(double(t.kxi[0]), double(t.kxi[1]));
  return s;
}

TrigPoly2 TrigPoly2::scaled(double s) const {
  std::vector<TrigTerm> out = terms_;
  for (TrigTerm& t : out) t.amp *= s;
  return TrigPoly2(std::move(out));
}

TrigPoly2 TrigPoly2::plus_constant(double c) const {
  std::vector<TrigTerm> out = terms_;
  if (c != 0.0) out.push_back(TrigTerm{c, {0, 0}, {0, 0}, 0.0});
  return TrigPoly2(std::move(out));
}

}  // namespace levyhomog
