#pragma once

#include <functional>

#include <Eigen/Dense>

#include "contactflow/errors.hpp"

namespace cflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Darboux coordinates (x, p, z) with contact form dz - p.dx.
struct CanonicalPoint {
  Vec x;
  Vec p;
  double z = 0.0;

  CanonicalPoint() = default;
  CanonicalPoint(Vec x, Vec p, double z);
  int dim() const { return static_cast<int>(x.size()); }
};

struct TangentVector {
  Vec dx;
  Vec dp;
  double dz = 0.0;

  TangentVector() = default;
  TangentVector(Vec dx, Vec dp, double dz);
  int dim() const { return static_cast<int>(dx.size()); }
};

TangentVector operator+(const TangentVector& a, const TangentVector& b);
TangentVector operator-(const TangentVector& a, const TangentVector& b);
TangentVector operator*(double s, const TangentVector& v);
double max_abs_diff(const TangentVector& a, const TangentVector& b);

// pt + s*v in coordinates.
CanonicalPoint shifted(const CanonicalPoint& pt, const TangentVector& v, double s);

// Packing order: x[0..n), p[0..n), z.
Vec flatten(const CanonicalPoint& pt);
Vec flatten(const TangentVector& v);
CanonicalPoint unflatten_point(const Vec& y, int n);
TangentVector unflatten_tangent(const Vec& y, int n);

// cbrt(machine eps) * max(1, |c|).
double default_fd_step(double coordinate);

enum class DerivativeMode { closed_form, central_difference };

struct Partials {
  Vec hx;
  Vec hp;
  double hz = 0.0;
};

class ContactHamiltonian {
 public:
  using Scalar = std::function<double(const Vec&, const Vec&, double)>;
  using Gradient = std::function<Vec(const Vec&, const Vec&, double)>;

  static ContactHamiltonian closed_form(int n, Scalar eval, Gradient grad_x, Gradient grad_p,
                                        Scalar dz_partial);
  // Partials by central differences; step <= 0 selects the default per coordinate.
  static ContactHamiltonian numeric(int n, Scalar eval, double step = 0.0);

  int dim() const { return n_; }
  DerivativeMode mode() const { return mode_; }

  double operator()(const CanonicalPoint& pt) const;
  // step overrides the differencing step for numeric mode; ignored in closed form.
  Partials partials(const CanonicalPoint& pt, double step = 0.0) const;

  ContactHamiltonian operator+(const ContactHamiltonian& other) const;

 private:
  ContactHamiltonian() = default;
  int n_ = 0;
  DerivativeMode mode_ = DerivativeMode::closed_form;
  double step_ = 0.0;
  Scalar eval_;
  Gradient grad_x_;
  Gradient grad_p_;
  Scalar dz_;
};

// Simple Hamiltonians used throughout the tests.
ContactHamiltonian constant_hamiltonian(int n, double c);
ContactHamiltonian minus_z_hamiltonian(int n);

double contact_form_pairing(const CanonicalPoint& pt, const TangentVector& v);

TangentVector reeb_field(int n);

// d(lambda)(u, v) from central differences of the pairing along constant fields.
double dlambda_numeric(const CanonicalPoint& pt, const TangentVector& u, const TangentVector& v,
                       double step = 1e-5);

TangentVector hamiltonian_vector_field(const ContactHamiltonian& h, const CanonicalPoint& pt,
                                       double step = 0.0);

struct IdentityReport {
  double pairing_residual = 0.0;  // |lambda(X_h) - h|
  double reeb_residual = 0.0;     // |X_h h - (R h) h|
};

IdentityReport verify_contact_identities(const ContactHamiltonian& h, const CanonicalPoint& pt,
                                         double step);

// Euclidean divergence of the component field. step <= 0 picks a default that
// suits the derivative mode of h.
double numeric_divergence(const ContactHamiltonian& h, const CanonicalPoint& pt,
                          double step = 0.0);

// Returns (n+1) dh/dz after checking it against numeric_divergence.
double phase_compressibility(const ContactHamiltonian& h, const CanonicalPoint& pt,
                             double tol = 1e-5);

}  // namespace cflow
