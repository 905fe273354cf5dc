#include "levyhomog/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyhomog/errors.hpp"
#include "levyhomog/quadrature.hpp"

namespace levyhomog {

std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::MatrixAnisotropic: return "matrix_anisotropic";
    case KernelFamily::Angular: return "angular";
    case KernelFamily::Separable: return "separable";
    case KernelFamily::HalfSpace: return "half_space";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "matrix_anisotropic") return KernelFamily::MatrixAnisotropic;
  if (name == "angular") return KernelFamily::Angular;
  if (name == "separable") return KernelFamily::Separable;
  if (name == "half_space") return KernelFamily::HalfSpace;
  throw ValidationError("unknown kernel family: " + name);
}

double ZProfile::eval(const Point& z, int dim) const {
  const double r = dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
  switch (type) {
    case Type::None:
      return 0.0;
    case Type::LinearBall:
      return r <= 1.0 ? c * z[axis] : 0.0;
    case Type::Abs:
      return c * std::min(r, 1.0);
    case Type::EvenBall:
      return c * std::min(r * r, 1.0);
    case Type::LogSingular:
      return c / std::max(std::abs(std::log(r)), 1e-12);
  }
  return 0.0;
}

LevyKernel::LevyKernel(KernelFamily family, int dim, TorusGrid fast_grid,
                       std::vector<KernelControlParams> controls, bool symmetric,
                       double C_K, double gamma, ZProfile zprofile,
                       int halfspace_axis)
    : family_(family),
      dim_(dim),
      fast_grid_(fast_grid),
      controls_(std::move(controls)),
      symmetric_(symmetric),
      C_K_(C_K),
      gamma_(gamma),
      zprofile_(zprofile),
      halfspace_axis_(halfspace_axis) {
  if (dim_ != 1 && dim_ != 2) throw ValidationError("kernel: dim must be 1 or 2");
  if (controls_.empty()) throw ValidationError("kernel: empty control list");
  if (!(C_K_ > 0.0)) throw ValidationError("kernel: C_K must be positive");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0))
    throw ValidationError("kernel: gamma must lie in (0,1]");
  if (fast_grid_.dim != dim_) throw ValidationError("kernel: fast grid dim mismatch");

  switch (family_) {
    case KernelFamily::MatrixAnisotropic:
    case KernelFamily::Angular:
      if (!symmetric_)
        throw ValidationError("kernel: " + family_name(family_) +
                              " family is symmetric by construction");
      break;
    case KernelFamily::Separable:
      if (symmetric_ && zprofile_.type != ZProfile::Type::None)
        throw ValidationError(
            "kernel: separable family with a z-profile is not homogeneous; "
            "declare it nonsymmetric");
      break;
    case KernelFamily::HalfSpace:
      if (symmetric_)
        throw ValidationError("kernel: half_space family is nonsymmetric");
      if (halfspace_axis_ < 0 || halfspace_axis_ >= dim_)
        throw ValidationError("kernel: half_space axis out of range");
      break;
  }

  // nonnegativity / ellipticity spot checks on the fast grid
  for (int a = 0; a < num_controls(); ++a) {
    for (std::size_t i = 0; i < fast_grid_.size(); ++i) {
      const Point xi = fast_grid_.point(i);
      if (family_ == KernelFamily::MatrixAnisotropic) {
        const double m00 = controls_[a].matrix[0].eval_x(xi);
        if (dim_ == 1) {
          if (!(m00 > 0.0))
            throw ValidationError("kernel: matrix entry must be positive");
        } else {
          const double m11 = controls_[a].matrix[1].eval_x(xi);
          const double m01 = controls_[a].matrix[2].eval_x(xi);
          const double tr = m00 + m11, det = m00 * m11 - m01 * m01;
          if (!(det > 0.0 && tr > 0.0))
            throw ValidationError("kernel: matrix must be positive definite");
        }
      } else {
        for (int s = 0; s < 8; ++s) {
          const double th = 2.0 * M_PI * s / 8.0;
          const Point z{std::cos(th), dim_ == 2 ? std::sin(th) : 0.0};
          if (zfactor(a, xi, z) < -1e-12)
            throw ValidationError("kernel: density must be nonnegative");
          if (dim_ == 1) break;
        }
      }
    }
  }
}

double LevyKernel::zfactor(int a, const Point& xi, const Point& z) const {
  const KernelControlParams& cp = controls_.at(a);
  switch (family_) {
    case KernelFamily::Separable:
      return cp.spatial.eval_x(xi) + zprofile_.eval(z, dim_);
    case KernelFamily::HalfSpace:
      return z[halfspace_axis_] > 0.0 ? cp.spatial.eval_x(xi) : 0.0;
    case KernelFamily::Angular: {
      if (dim_ == 1) return cp.spatial.eval_x(xi);
      const double th = std::atan2(z[1], z[0]);
      double dens = 1.0;
      for (const AngularHarmonic& hh : cp.angular)
        dens += hh.c * std::cos(2.0 * hh.j * th + 2.0 * M_PI * hh.phase);
      return cp.spatial.eval_x(xi) * dens;
    }
    case KernelFamily::MatrixAnisotropic: {
      const double r = dim_ == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
      return evaluate(a, xi, z) * std::pow(r, dim_ + 1);
    }
  }
  return 0.0;
}

double LevyKernel::zfactor_at_zero(int a, const Point& xi) const {
  switch (family_) {
    case KernelFamily::Separable:
    case KernelFamily::HalfSpace:
      // profiles vanish at 0; for half_space this is the interior limit
      return controls_.at(a).spatial.eval_x(xi);
    default:
      throw ValidationError("kernel: no z-factor at zero for family " +
                            family_name(family_));
  }
}

bool LevyKernel::homogeneous() const {
  return family_ != KernelFamily::Separable ||
         zprofile_.type == ZProfile::Type::None;
}

double LevyKernel::evaluate(int a, const Point& xi, const Point& z) const {
  if (z[0] == 0.0 && (dim_ == 1 || z[1] == 0.0))
    throw ValidationError("kernel: evaluate at z = 0");
  const double r = dim_ == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
  switch (family_) {
    case KernelFamily::MatrixAnisotropic: {
      const KernelControlParams& cp = controls_.at(a);
      double q;
      if (dim_ == 1) {
        q = cp.matrix[0].eval_x(xi) * z[0] * z[0];
      } else {
        const double m00 = cp.matrix[0].eval_x(xi);
        const double m11 = cp.matrix[1].eval_x(xi);
        const double m01 = cp.matrix[2].eval_x(xi);
        q = m00 * z[0] * z[0] + 2.0 * m01 * z[0] * z[1] + m11 * z[1] * z[1];
      }
      return 1.0 / std::pow(std::abs(q), 0.5 * (dim_ + 1));
    }
    default: {
      const double f = zfactor(a, xi, z);
      return f <= 0.0 ? 0.0 : f / std::pow(r, dim_ + 1);
    }
  }
}

double LevyKernel::unit_sphere_density(int a, const Point& xi,
                                       const Point& zhat) const {
  return evaluate(a, xi, zhat);
}

// ---------------------------------------------------------------- checks

namespace {

std::vector<std::size_t> sample_indices(const TorusGrid& g, std::size_t cap) {
  std::vector<std::size_t> idx;
  const std::size_t n = g.size();
  const std::size_t stride = n > cap ? (n + cap - 1) / cap : 1;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  return idx;
}

/// Integral over {0 < |z| < r_hi} of f, refining shells toward zero until the
/// per-octave contribution drops below rtol of the running total; the
/// remainder below the last octave is extrapolated geometrically.
template <class F>
double integrate_ball_refining(int dim, double r_hi, int sectors, F&& f,
                               double rtol = 1e-4) {
  double total = 0.0;
  double r_out = r_hi;
  double last = 0.0, prev = 0.0;
  int oct = 0;
  for (; oct < 48; ++oct) {
    const double r_in = r_out / 2.0;
    prev = last;
    last = quad::integrate_annulus(dim, r_in, r_out, 4, sectors, f);
    total += last;
    r_out = r_in;
    if (oct >= 4 && std::abs(last) < rtol * std::max(1e-300, std::abs(total)))
      break;
  }
  if (oct >= 48) {
    const bool decaying = std::abs(last) < 0.9 * std::abs(prev);
    if (!decaying)
      throw QuadratureError("inner-shell refinement exceeded",
                            "ball integral not converging near 0");
  }
  // geometric remainder: contributions halve per octave for order-(d+1) kernels
  if (prev != 0.0 && std::abs(last) < std::abs(prev)) {
    const double q = std::abs(last / prev);
    total += last * q / (1.0 - q);
  } else {
    total += last;
  }
  return total;
}

double tail_mass_beyond(const LevyKernel& k, int a, const Point& xi, double R,
                        int dim, double* err) {
  if (k.homogeneous()) {
    const double ang = quad::integrate_unit_sphere(
        dim, [&](const Point& zh) { return k.unit_sphere_density(a, xi, zh); });
    if (err) *err = 0.0;
    return ang / R;
  }
  auto at_radius = [&](double r) {
    return quad::integrate_unit_sphere(dim, [&](const Point& zh) {
      return k.evaluate(a, xi, Point{r * zh[0], r * zh[1]}) *
             std::pow(r, dim + 1);
    });
  };
  const double aR = at_radius(R), a2R = at_radius(2 * R), a4R = at_radius(4 * R);
  if (err) *err = std::max(std::abs(aR - a2R), std::abs(aR - a4R)) / R;
  return aR / R;
}

}  // namespace

AssumptionReport check_levy_bound(const LevyKernel& k) {
  AssumptionReport rep;
  rep.assumption = "K1";
  rep.declared = k.C_K();
  const int dim = k.dim();
  const int sectors = dim == 1 ? 2 : 64;
  const auto xi_idx = sample_indices(k.fast_grid(), 256);
  double worst = 0.0;
  for (int a = 0; a < k.num_controls(); ++a) {
    for (std::size_t i : xi_idx) {
      const Point xi = k.fast_grid().point(i);
      auto z2K = [&](const Point& z) {
        const double r2 = dim == 1 ? z[0] * z[0] : z[0] * z[0] + z[1] * z[1];
        return r2 * k.evaluate(a, xi, z);
      };
      auto Kv = [&](const Point& z) { return k.evaluate(a, xi, z); };
      const double inner = integrate_ball_refining(dim, 1.0, sectors, z2K);
      double terr = 0.0;
      const double outer =
          quad::integrate_annulus(dim, 1.0, 8.0, 6, sectors, Kv) +
          tail_mass_beyond(k, a, xi, 8.0, dim, &terr);
      worst = std::max(worst, inner + outer);
    }
  }
  rep.measured = worst;
  rep.pass = rep.measured <= rep.declared * (1.0 + rep.tol);
  std::ostringstream note;
  note << "sup over " << k.num_controls() << " controls x " << xi_idx.size()
       << " fast nodes";
  rep.sample_note = note.str();
  return rep;
}

AssumptionReport check_cone_ellipticity(const LevyKernel& k, const Point& p,
                                        double eta, double rho) {
  const int dim = k.dim();
  const double pn = dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
  if (!(pn > 0.0)) throw ValidationError("check_cone_ellipticity: |p| = 0");
  if (!(eta > 0.0 && eta < 1.0))
    throw ValidationError("check_cone_ellipticity: eta must lie in (0,1)");
  if (!(rho > 0.0)) throw ValidationError("check_cone_ellipticity: rho <= 0");

  AssumptionReport rep;
  rep.assumption = "K2";
  rep.lower_bound = true;
  rep.declared = k.C_K() * std::pow(eta, 0.5 * (dim - 1)) * rho;
  const int sectors = dim == 1 ? 2 : 256;
  const Point phat{p[0] / pn, dim == 2 ? p[1] / pn : 0.0};
  const auto xi_idx = sample_indices(k.fast_grid(), 128);
  double worst = std::numeric_limits<double>::infinity();
  for (int a = 0; a < k.num_controls(); ++a) {
    for (std::size_t i : xi_idx) {
      const Point xi = k.fast_grid().point(i);
      auto f = [&](const Point& z) {
        const double rz = dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
        const double dot = std::abs(phat[0] * z[0] + phat[1] * z[1]);
        if (dot < (1.0 - eta) * rz) return 0.0;
        return rz * rz * k.evaluate(a, xi, z);
      };
      worst = std::min(worst, integrate_ball_refining(dim, rho, sectors, f));
    }
  }
  rep.measured = worst;
  rep.pass = rep.measured >= rep.declared * (1.0 - rep.tol);
  rep.sample_note = "min over controls x fast nodes";
  return rep;
}

AssumptionReport check_holder_in_xi(const LevyKernel& k, const Point& xi1,
                                    const Point& xi2, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("check_holder_in_xi: rho must lie in (0,1)");
  AssumptionReport rep;
  rep.assumption = "K3";
  const int dim = k.dim();
  const int sectors = dim == 1 ? 2 : 64;
  double dxi = dim == 1 ? std::abs(xi1[0] - xi2[0])
                        : std::hypot(xi1[0] - xi2[0], xi1[1] - xi2[1]);
  const double fac = k.C_K() * std::pow(dxi, k.gamma());
  double worst_ratio = 0.0;
  rep.details = {0.0, 0.0, 0.0};
  for (int a = 0; a < k.num_controls(); ++a) {
    auto dK = [&](const Point& z) {
      return std::abs(k.evaluate(a, xi1, z) - k.evaluate(a, xi2, z));
    };
    const double i1 = integrate_ball_refining(dim, rho, sectors, [&](const Point& z) {
      const double r2 = dim == 1 ? z[0] * z[0] : z[0] * z[0] + z[1] * z[1];
      return r2 * dK(z);
    });
    const double i2 =
        quad::integrate_annulus(dim, rho, 1.0, 8, sectors, [&](const Point& z) {
          const double r = dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
          return r * dK(z);
        });
    double i3 = quad::integrate_annulus(dim, rho, 8.0, 6, sectors, dK);
    if (k.homogeneous()) {
      const double ang = quad::integrate_unit_sphere(dim, [&](const Point& zh) {
        return std::abs(k.unit_sphere_density(a, xi1, zh) -
                        k.unit_sphere_density(a, xi2, zh));
      });
      i3 += ang / 8.0;
    }
    rep.details[0] = std::max(rep.details[0], i1);
    rep.details[1] = std::max(rep.details[1], i2);
    rep.details[2] = std::max(rep.details[2], i3);
    const double b1 = fac * rho;
    const double b2 = fac * std::abs(std::log(rho));
    const double b3 = fac / rho;
    worst_ratio = std::max({worst_ratio, b1 > 0.0 ? i1 / b1 : (i1 > 1e-14 ? 1e30 : 0.0),
                            b2 > 0.0 ? i2 / b2 : (i2 > 1e-14 ? 1e30 : 0.0),
                            b3 > 0.0 ? i3 / b3 : (i3 > 1e-14 ? 1e30 : 0.0)});
  }
  rep.measured = worst_ratio;  // ratio against the declared bound
  rep.declared = 1.0;
  rep.pass = worst_ratio <= 1.0 + rep.tol;
  rep.sample_note = "three weighted integrals; measured is the worst ratio";
  return rep;
}

AssumptionReport check_modulus_integrability(const LevyKernel& k) {
  if (k.symmetric())
    throw ValidationError(
        "check_modulus_integrability: symmetric-family kernel");
  AssumptionReport rep;
  rep.assumption = "Kns";
  rep.declared = k.C_K();
  const int dim = k.dim();
  const auto xi_idx = sample_indices(k.fast_grid(), 64);

  // omega on a log-spaced grid, accumulated from the smallest radius up
  const int J = 44;  // quarter octaves down to 2^-11
  std::vector<double> r(J), omega(J, 0.0);
  for (int j = 0; j < J; ++j) r[j] = std::pow(2.0, -0.25 * (J - 1 - j));
  double running = 0.0;
  for (int j = 0; j < J; ++j) {
    for (int a = 0; a < k.num_controls(); ++a) {
      for (std::size_t i : xi_idx) {
        const Point xi = k.fast_grid().point(i);
        const double k0 = k.zfactor_at_zero(a, xi);
        const int nang = dim == 1 ? 2 : 16;
        for (int s = 0; s < nang; ++s) {
          Point z;
          if (dim == 1)
            z = {s == 0 ? r[j] : -r[j], 0.0};
          else {
            const double th = 2.0 * M_PI * s / nang;
            z = {r[j] * std::cos(th), r[j] * std::sin(th)};
          }
          running = std::max(running, std::abs(k.zfactor(a, xi, z) - k0));
        }
      }
    }
    omega[j] = running;
  }
  // trapezoid of omega d(ln r) over [r_min, 1]
  double integral = 0.0;
  for (int j = 0; j + 1 < J; ++j) {
    const double dln = std::log(r[j + 1] / r[j]);
    integral += 0.5 * (omega[j] + omega[j + 1]) * dln;
  }
  // remainder below r_min by geometric decay when present
  if (omega[1] > 0.0 && omega[0] < omega[1]) {
    const double q = omega[0] / omega[1];
    const double last = 0.5 * (omega[0] + omega[1]) * std::log(r[1] / r[0]);
    integral += q < 0.95 ? last * q / (1.0 - q) : last * 20.0;
  }
  rep.measured = integral;
  rep.pass = rep.measured <= rep.declared * (1.0 + rep.tol);
  rep.details = omega;
  rep.sample_note = "log-spaced radii 2^-11..1, quarter octaves";
  return rep;
}

DriftCorrection drift_correction(const LevyKernel& k, int a, const Point& xi) {
  if (!k.kns_form())
    throw ValidationError(
        "drift_correction: kernel has no continuous z-factor (requires the "
        "nonsymmetric separable family)");
  const int dim = k.dim();
  const double h = k.fast_grid().h();
  const double r_inner = h / 4.0;
  const double k0 = k.zfactor_at_zero(a, xi);
  DriftCorrection out;
  for (int c = 0; c < dim; ++c) {
    out.value[c] = quad::integrate_annulus(
        dim, r_inner, 1.0, 8, dim == 1 ? 2 : 64, [&](const Point& z) {
          const double r = dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
          return (k.zfactor(a, xi, z) - k0) * z[c] / std::pow(r, dim + 1);
        });
  }
  // inner shells bounded through the modulus of continuity
  double omega_in = 0.0;
  for (double r = r_inner; r > r_inner / 64.0; r /= 2.0) {
    const int nang = dim == 1 ? 2 : 8;
    for (int s = 0; s < nang; ++s) {
      Point z;
      if (dim == 1)
        z = {s == 0 ? r : -r, 0.0};
      else {
        const double th = 2.0 * M_PI * s / nang;
        z = {r * std::cos(th), r * std::sin(th)};
      }
      omega_in = std::max(omega_in, std::abs(k.zfactor(a, xi, z) - k0));
    }
  }
  const double surface = dim == 1 ? 2.0 : 2.0 * M_PI;
  out.error_bound = omega_in * surface * std::log(64.0) / std::log(2.0) * 0.25;
  return out;
}

}  // namespace levyhomog
