#include "contactflow/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cflow {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw MalformedInput(std::string(what) + " has non-finite entries");
}

std::string describe(const CanonicalPoint& pt) {
  std::ostringstream os;
  os.precision(17);
  os << "x=[" << pt.x.transpose() << "] p=[" << pt.p.transpose() << "] z=" << pt.z;
  return os.str();
}

void check_dims(const CanonicalPoint& pt, int n) {
  if (pt.dim() != n || pt.p.size() != n)
    throw MalformedInput("point dimension " + std::to_string(pt.dim()) + " does not match n=" +
                         std::to_string(n));
}

}  // namespace

CanonicalPoint::CanonicalPoint(Vec x_, Vec p_, double z_) : x(std::move(x_)), p(std::move(p_)), z(z_) {
  if (x.size() < 1) throw MalformedInput("canonical point needs n >= 1");
  if (x.size() != p.size()) throw MalformedInput("x and p lengths differ");
  require_finite(x, "x");
  require_finite(p, "p");
  if (!std::isfinite(z)) throw MalformedInput("z is not finite");
}

TangentVector::TangentVector(Vec dx_, Vec dp_, double dz_)
    : dx(std::move(dx_)), dp(std::move(dp_)), dz(dz_) {
  if (dx.size() < 1) throw MalformedInput("tangent vector needs n >= 1");
  if (dx.size() != dp.size()) throw MalformedInput("dx and dp lengths differ");
}

TangentVector operator+(const TangentVector& a, const TangentVector& b) {
  if (a.dim() != b.dim()) throw MalformedInput("tangent dimension mismatch");
  return {a.dx + b.dx, a.dp + b.dp, a.dz + b.dz};
}

TangentVector operator-(const TangentVector& a, const TangentVector& b) {
  return a + (-1.0) * b;
}

TangentVector operator*(double s, const TangentVector& v) { return {s * v.dx, s * v.dp, s * v.dz}; }

double max_abs_diff(const TangentVector& a, const TangentVector& b) {
  if (a.dim() != b.dim()) throw MalformedInput("tangent dimension mismatch");
  double m = std::abs(a.dz - b.dz);
  m = std::max(m, (a.dx - b.dx).cwiseAbs().maxCoeff());
  m = std::max(m, (a.dp - b.dp).cwiseAbs().maxCoeff());
  return m;
}

CanonicalPoint shifted(const CanonicalPoint& pt, const TangentVector& v, double s) {
  CanonicalPoint q;
  q.x = pt.x + s * v.dx;
  q.p = pt.p + s * v.dp;
  q.z = pt.z + s * v.dz;
  return q;
}

Vec flatten(const CanonicalPoint& pt) {
  const int n = pt.dim();
  Vec y(2 * n + 1);
  y << pt.x, pt.p, pt.z;
  return y;
}

Vec flatten(const TangentVector& v) {
  const int n = v.dim();
  Vec y(2 * n + 1);
  y << v.dx, v.dp, v.dz;
  return y;
}

CanonicalPoint unflatten_point(const Vec& y, int n) {
  if (y.size() != 2 * n + 1) throw MalformedInput("flat state has the wrong length");
  CanonicalPoint pt;
  pt.x = y.head(n);
  pt.p = y.segment(n, n);
  pt.z = y(2 * n);
  return pt;
}

TangentVector unflatten_tangent(const Vec& y, int n) {
  if (y.size() != 2 * n + 1) throw MalformedInput("flat tangent has the wrong length");
  TangentVector v;
  v.dx = y.head(n);
  v.dp = y.segment(n, n);
  v.dz = y(2 * n);
  return v;
}

double default_fd_step(double coordinate) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(coordinate));
}

ContactHamiltonian ContactHamiltonian::closed_form(int n, Scalar eval, Gradient grad_x,
                                                   Gradient grad_p, Scalar dz_partial) {
  if (n < 1) throw MalformedInput("contact Hamiltonian needs n >= 1");
  if (!eval || !grad_x || !grad_p || !dz_partial)
    throw MalformedInput("closed-form Hamiltonian needs all partials");
  ContactHamiltonian h;
  h.n_ = n;
  h.mode_ = DerivativeMode::closed_form;
  h.eval_ = std::move(eval);
  h.grad_x_ = std::move(grad_x);
  h.grad_p_ = std::move(grad_p);
  h.dz_ = std::move(dz_partial);
  return h;
}

ContactHamiltonian ContactHamiltonian::numeric(int n, Scalar eval, double step) {
  if (n < 1) throw MalformedInput("contact Hamiltonian needs n >= 1");
  if (!eval) throw MalformedInput("Hamiltonian needs an evaluation callable");
  ContactHamiltonian h;
  h.n_ = n;
  h.mode_ = DerivativeMode::central_difference;
  h.step_ = step;
  h.eval_ = std::move(eval);
  return h;
}

double ContactHamiltonian::operator()(const CanonicalPoint& pt) const {
  check_dims(pt, n_);
  return eval_(pt.x, pt.p, pt.z);
}

Partials ContactHamiltonian::partials(const CanonicalPoint& pt, double step) const {
  check_dims(pt, n_);
  Partials d;
  if (mode_ == DerivativeMode::closed_form) {
    d.hx = grad_x_(pt.x, pt.p, pt.z);
    d.hp = grad_p_(pt.x, pt.p, pt.z);
    d.hz = dz_(pt.x, pt.p, pt.z);
  } else {
    const double fixed = step > 0.0 ? step : step_;
    auto h_of = [&](double c) { return fixed > 0.0 ? fixed : default_fd_step(c); };
    d.hx.resize(n_);
    d.hp.resize(n_);
    Vec x = pt.x, p = pt.p;
    for (int a = 0; a < n_; ++a) {
      const double s = h_of(x(a));
      const double keep = x(a);
      x(a) = keep + s;
      const double fp = eval_(x, p, pt.z);
      x(a) = keep - s;
      const double fm = eval_(x, p, pt.z);
      x(a) = keep;
      d.hx(a) = (fp - fm) / (2.0 * s);
    }
    for (int a = 0; a < n_; ++a) {
      const double s = h_of(p(a));
      const double keep = p(a);
      p(a) = keep + s;
      const double fp = eval_(x, p, pt.z);
      p(a) = keep - s;
      const double fm = eval_(x, p, pt.z);
      p(a) = keep;
      d.hp(a) = (fp - fm) / (2.0 * s);
    }
    const double s = h_of(pt.z);
    d.hz = (eval_(x, p, pt.z + s) - eval_(x, p, pt.z - s)) / (2.0 * s);
  }
  if (d.hx.size() != n_ || d.hp.size() != n_)
    throw MalformedInput("Hamiltonian partials have the wrong length");
  return d;
}

ContactHamiltonian ContactHamiltonian::operator+(const ContactHamiltonian& o) const {
  if (n_ != o.n_) throw MalformedInput("cannot add Hamiltonians of different dimension");
  auto f = eval_, g = o.eval_;
  Scalar sum = [f, g](const Vec& x, const Vec& p, double z) { return f(x, p, z) + g(x, p, z); };
  if (mode_ == DerivativeMode::closed_form && o.mode_ == DerivativeMode::closed_form) {
    auto ax = grad_x_, bx = o.grad_x_, ap = grad_p_, bp = o.grad_p_;
    auto az = dz_, bz = o.dz_;
    return closed_form(
        n_, sum, [ax, bx](const Vec& x, const Vec& p, double z) -> Vec { return ax(x, p, z) + bx(x, p, z); },
        [ap, bp](const Vec& x, const Vec& p, double z) -> Vec { return ap(x, p, z) + bp(x, p, z); },
        [az, bz](const Vec& x, const Vec& p, double z) { return az(x, p, z) + bz(x, p, z); });
  }
  return numeric(n_, sum, std::max(step_, o.step_));
}

ContactHamiltonian constant_hamiltonian(int n, double c) {
  return ContactHamiltonian::closed_form(
      n, [c](const Vec&, const Vec&, double) { return c; },
      [n](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(n); },
      [n](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(n); },
      [](const Vec&, const Vec&, double) { return 0.0; });
}

ContactHamiltonian minus_z_hamiltonian(int n) {
  return ContactHamiltonian::closed_form(
      n, [](const Vec&, const Vec&, double z) { return -z; },
      [n](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(n); },
      [n](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(n); },
      [](const Vec&, const Vec&, double) { return -1.0; });
}

double contact_form_pairing(const CanonicalPoint& pt, const TangentVector& v) {
  if (pt.dim() != v.dim() || pt.p.size() != v.dp.size())
    throw MalformedInput("pairing: point and tangent dimensions differ");
  return v.dz - pt.p.dot(v.dx);
}

TangentVector reeb_field(int n) {
  if (n < 1) throw MalformedInput("Reeb field needs n >= 1");
  return {Vec::Zero(n), Vec::Zero(n), 1.0};
}

double dlambda_numeric(const CanonicalPoint& pt, const TangentVector& u, const TangentVector& v,
                       double step) {
  // For constant coefficient fields [u, v] = 0, so d(lambda)(u,v) = u(lambda(v)) - v(lambda(u)).
  auto lam = [](const CanonicalPoint& q, const TangentVector& w) { return contact_form_pairing(q, w); };
  const double uv = (lam(shifted(pt, u, step), v) - lam(shifted(pt, u, -step), v)) / (2.0 * step);
  const double vu = (lam(shifted(pt, v, step), u) - lam(shifted(pt, v, -step), u)) / (2.0 * step);
  return uv - vu;
}

TangentVector hamiltonian_vector_field(const ContactHamiltonian& h, const CanonicalPoint& pt,
                                       double step) {
  const Partials d = h.partials(pt, step);
  const double hv = h(pt);
  if (!d.hx.allFinite() || !d.hp.allFinite() || !std::isfinite(d.hz) || !std::isfinite(hv))
    throw EvaluationError("non-finite Hamiltonian data at " + describe(pt));
  TangentVector v;
  v.dx = -d.hp;
  v.dp = d.hx + d.hz * pt.p;
  v.dz = hv - pt.p.dot(d.hp);
  return v;
}

IdentityReport verify_contact_identities(const ContactHamiltonian& h, const CanonicalPoint& pt,
                                         double step) {
  if (!(step > 0.0)) throw MalformedInput("verify_contact_identities needs step > 0");
  IdentityReport r;
  const double hv = h(pt);
  const TangentVector X = hamiltonian_vector_field(h, pt, step);
  r.pairing_residual = std::abs(contact_form_pairing(pt, X) - hv);

  // Directional derivative along X with a unit-length probe, so the step
  // is the distance travelled regardless of |X|.
  const double norm = std::sqrt(flatten(X).squaredNorm());
  double xh = 0.0;
  if (norm > 0.0) {
    const double s = step / std::max(1.0, norm);
    xh = (h(shifted(pt, X, s)) - h(shifted(pt, X, -s))) / (2.0 * s);
  }
  const TangentVector R = reeb_field(pt.dim());
  const double rh = (h(shifted(pt, R, step)) - h(shifted(pt, R, -step))) / (2.0 * step);
  r.reeb_residual = std::abs(xh - rh * hv);
  return r;
}

double numeric_divergence(const ContactHamiltonian& h, const CanonicalPoint& pt, double step) {
  const int n = pt.dim();
  Vec y = flatten(pt);
  double div = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double s = step;
    if (!(s > 0.0)) {
      s = h.mode() == DerivativeMode::closed_form ? default_fd_step(y(i))
                                                  : 1e-4 * std::max(1.0, std::abs(y(i)));
    }
    const double keep = y(i);
    y(i) = keep + s;
    const double fp = flatten(hamiltonian_vector_field(h, unflatten_point(y, n)))(i);
    y(i) = keep - s;
    const double fm = flatten(hamiltonian_vector_field(h, unflatten_point(y, n)))(i);
    y(i) = keep;
    div += (fp - fm) / (2.0 * s);
  }
  return div;
}

double phase_compressibility(const ContactHamiltonian& h, const CanonicalPoint& pt, double tol) {
  const double analytic = (pt.dim() + 1) * h.partials(pt).hz;
  const double numeric = numeric_divergence(h, pt);
  if (std::abs(analytic - numeric) > tol * std::max(1.0, std::abs(analytic))) {
    std::ostringstream os;
    os.precision(17);
    os << "compressibility mismatch: (n+1) dh/dz = " << analytic << " but divergence = " << numeric
       << " at " << describe(pt);
    throw DiagnosticError(os.str());
  }
  return analytic;
}

}  // namespace cflow
