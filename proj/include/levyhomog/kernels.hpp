#pragma once

#include <optional>
#include <string>
#include <vector>

#include "levyhomog/grid.hpp"
#include "levyhomog/trigpoly.hpp"

namespace levyhomog {

enum class KernelFamily { MatrixAnisotropic, Angular, Separable, HalfSpace };

std::string family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

/// Even angular perturbation c * cos(2*j*theta + 2*pi*phase) of the d=2
/// directional density.
struct AngularHarmonic {
  int j = 1;
  double c = 0.0;
  double phase = 0.0;
};

/// Named z-dependence of the separable factor k(xi, z) = spatial(xi) + g(z).
/// Profiles are constant beyond the unit ball so that the tail stays integrable
/// (LogSingular decays on its own).
struct ZProfile {
  enum class Type { None, LinearBall, Abs, EvenBall, LogSingular };
  Type type = Type::None;
  double c = 0.0;
  int axis = 0;

  double eval(const Point& z, int dim) const;
  bool even_in_z() const {
    return type == Type::None || type == Type::Abs || type == Type::EvenBall ||
           type == Type::LogSingular;
  }
};

struct KernelControlParams {
  TrigPoly2 spatial;                    // factor k^a(xi) where the family has one
  std::array<TrigPoly2, 3> matrix;      // m00, m11, m01 entries for MatrixAnisotropic
  std::vector<AngularHarmonic> angular;
};

/// A family of jump kernels K^a(xi, z), one per control, with the symmetry and
/// regularity metadata the assumption checks compare against.
class LevyKernel {
 public:
  LevyKernel(KernelFamily family, int dim, TorusGrid fast_grid,
             std::vector<KernelControlParams> controls, bool symmetric,
             double C_K, double gamma, ZProfile zprofile = {},
             int halfspace_axis = 0);

  KernelFamily family() const { return family_; }
  int dim() const { return dim_; }
  int num_controls() const { return static_cast<int>(controls_.size()); }
  bool symmetric() const { return symmetric_; }
  double C_K() const { return C_K_; }
  double gamma() const { return gamma_; }
  const TorusGrid& fast_grid() const { return fast_grid_; }
  const ZProfile& zprofile() const { return zprofile_; }
  const KernelControlParams& control(int a) const { return controls_.at(a); }

  /// Kernel density at jump z; domain error at z = 0.
  double evaluate(int a, const Point& xi, const Point& z) const;

  /// The factor k^a(xi, z) with K = k / |z|^{d+1} (Separable and HalfSpace).
  double zfactor(int a, const Point& xi, const Point& z) const;
  double zfactor_at_zero(int a, const Point& xi) const;

  /// Exactly (d+1)-homogeneous in z (everything except z-dependent factors).
  bool homogeneous() const;
  /// Separable family with a continuous z-factor; the branch that owns b_K and
  /// the spectral cell operator.
  bool kns_form() const { return family_ == KernelFamily::Separable && !symmetric_; }

  /// Directional density at |z| = 1, used for analytic tails.
  double unit_sphere_density(int a, const Point& xi, const Point& zhat) const;

 private:
  KernelFamily family_;
  int dim_;
  TorusGrid fast_grid_;
  std::vector<KernelControlParams> controls_;
  bool symmetric_;
  double C_K_;
  double gamma_;
  ZProfile zprofile_;
  int halfspace_axis_;
};

struct AssumptionReport {
  std::string assumption;
  double measured = 0.0;
  double declared = 0.0;
  bool pass = false;
  bool lower_bound = false;  // K2 wants measured >= declared
  double tol = 0.01;
  std::string sample_note;
  std::vector<double> details;
};

/// (K1): sup over sampled (a, xi) of integral of min(1,|z|^2) K dz.
AssumptionReport check_levy_bound(const LevyKernel& k);

/// (K2): min over sampled (a, xi) of the second moment over the ellipticity
/// cone C_{eta,rho}(p), compared against C_K eta^{(d-1)/2} rho.
AssumptionReport check_cone_ellipticity(const LevyKernel& k, const Point& p,
                                        double eta, double rho);

/// (K3): the three weighted integrals of |K(xi1,.) - K(xi2,.)| against
/// C_K |xi1-xi2|^gamma {rho, |ln rho|, 1/rho}.
AssumptionReport check_holder_in_xi(const LevyKernel& k, const Point& xi1,
                                    const Point& xi2, double rho);

/// (Kns): integral over (0,1] of sup_{|z|<=r} |k(xi,z)-k(xi,0)| dr/r.
AssumptionReport check_modulus_integrability(const LevyKernel& k);

struct DriftCorrection {
  Point value{0.0, 0.0};
  double error_bound = 0.0;
};

/// b_K^a(xi): the extra cell drift produced by non-symmetric factors meeting
/// the compensator. Domain error outside the separable non-symmetric family.
DriftCorrection drift_correction(const LevyKernel& k, int a, const Point& xi);

}  // namespace levyhomog
