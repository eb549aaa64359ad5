#include "contactflow/flows.hpp"

namespace cflow {

System lifted_system(const LiftSpec& spec) {
  const ContactHamiltonian h = build_hamiltonian(spec);
  const int n = spec.dim();
  return [h, n](const Vec& y) -> Vec { return flatten(hamiltonian_vector_field(h, unflatten_point(y, n))); };
}

System restricted_system(const LiftSpec& spec) {
  spec.validate();
  const int n = spec.dim();
  return [spec, n](const Vec& y) -> Vec {
    const CanonicalPoint pt = unflatten_point(y, n);
    return flatten(restricted_field(spec, spec.side == Side::psi ? pt.x : pt.p));
  };
}

System extended_system(const ExtendedLiftSpec& spec) {
  const ContactHamiltonian h = extended_hamiltonian(spec);
  const int m = spec.dim() + 1;
  return [h, m](const Vec& y) -> Vec { return flatten(hamiltonian_vector_field(h, unflatten_point(y, m))); };
}

System restricted_extended_system(const ExtendedLiftSpec& spec) {
  spec.validate();
  const int n = spec.dim();
  return [spec, n](const Vec& y) -> Vec {
    const ExtendedPoint pt = unflatten_state(y, n);
    return flatten_state(restricted_extended_field(spec, spec.base.side == Side::psi ? pt.x : pt.p));
  };
}

DiagnosticSet lift_diagnostics(const LiftSpec& spec) {
  const ContactHamiltonian h = build_hamiltonian(spec);
  const int n = spec.dim();
  DiagnosticSet d;
  d.names = {"h", "delta0", "delta_norm", "kappa"};
  d.fn = [h, spec, n](double, const Vec& y) {
    const CanonicalPoint pt = unflatten_point(y, n);
    const Deltas dl = lift_deltas(spec, pt);
    return std::vector<double>{h(pt), dl.d0, dl.d.norm(), (n + 1) * h.partials(pt).hz};
  };
  return d;
}

DiagnosticSet extended_diagnostics(const ExtendedLiftSpec& spec, bool thermal) {
  const ContactHamiltonian h = extended_hamiltonian(spec);
  const int n = spec.dim();
  DiagnosticSet d;
  d.names = {"h", "delta0", "delta_norm", "kappa", spec.base.side == Side::psi ? "psi_tilde" : "phi_tilde"};
  if (thermal) {
    d.names.push_back("H_tot");
    d.names.push_back("S");
  }
  d.fn = [h, spec, n, thermal](double, const Vec& y) {
    const ExtendedPoint pt = unflatten_state(y, n);
    const CanonicalPoint q = flatten_extended(pt);
    const Deltas dl = tilde_deltas(spec, pt);
    const double g = generating_value(spec, pt);
    std::vector<double> row{h(q), dl.d0, dl.d.norm(), (n + 2) * h.partials(q).hz, g};
    if (thermal) {
      row.push_back(g);
      row.push_back(pt.x_extra);
    }
    return row;
  };
  return d;
}

CanonicalPoint restricted_exp(const LiftSpec& spec, const Vec& chart, double t, const IntegratorConfig& cfg) {
  const CanonicalPoint start = lift_embed(spec, chart);
  return unflatten_point(flow(restricted_system(spec), flatten(start), t, cfg), spec.dim());
}

}  // namespace cflow
