#include "ksm/spectral.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace ksm {

Domain::Domain(double length, int modes) : length_(length), modes_(modes) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("domain length must be positive and finite");
  if (modes < 1) throw std::invalid_argument("mode cutoff N must be >= 1");
}

double linear_growth_rate(int k, const Domain& dom) {
  if (std::abs(k) > dom.modes())
    throw std::invalid_argument("mode index " + std::to_string(k) + " exceeds cutoff");
  return linear_growth_rate(k, dom.wavenumber());
}

Eigen::VectorXd linear_spectrum(const Domain& dom) {
  Eigen::VectorXd lambda(dom.modes() + 1);
  for (int k = 0; k <= dom.modes(); ++k) lambda[k] = linear_growth_rate(k, dom.wavenumber());
  return lambda;
}

ModalState zero_state(const Domain& dom) { return ModalState::Zero(dom.modes() + 1); }

void check_state(const ModalState& state, const Domain& dom) {
  if (state.size() != dom.modes() + 1)
    throw std::invalid_argument("modal state has " + std::to_string(state.size()) +
                                " entries, expected N+1 = " + std::to_string(dom.modes() + 1));
  if (!state.allFinite()) throw std::invalid_argument("modal state has non-finite entries");
  if (state[0] != std::complex<double>(0.0))
    throw std::invalid_argument("modal state has nonzero mean a_0");
}

ModalState ks_rhs(const ModalState& state, const Domain& dom) {
  return ks_rhs(state, dom.wavenumber());
}

Eigen::MatrixXd subspace_basis(Subspace subspace, int modes) {
  if (subspace == Subspace::Full) return Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(2 * modes, modes);
  for (int k = 1; k <= modes; ++k) basis(im_slot(k), k - 1) = 1.0;
  return basis;
}

double subspace_defect(const Eigen::VectorXd& x, Subspace subspace) {
  if (subspace == Subspace::Full) return 0.0;
  double off = 0.0;
  for (Eigen::Index i = 0; i < x.size(); i += 2) off += x[i] * x[i];
  const double norm = x.norm();
  return norm > 0.0 ? std::sqrt(off) / norm : 0.0;
}

namespace {

struct Twiddles {
  std::vector<double> c, s;
  explicit Twiddles(int m) : c(m), s(m) {
    for (int j = 0; j < m; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / m;
      c[j] = std::cos(theta);
      s[j] = std::sin(theta);
    }
  }
};

}  // namespace

RealField to_physical(const ModalState& state, int grid_size) {
  const int n = static_cast<int>(state.size()) - 1;
  if (grid_size < 2 * n + 2)
    throw std::invalid_argument("grid size M=" + std::to_string(grid_size) +
                                " below 2N+2; reconstruction would alias");
  const Twiddles tw(grid_size);
  RealField u(grid_size);
  for (int j = 0; j < grid_size; ++j) {
    double sum = state[0].real();
    for (int k = 1; k <= n; ++k) {
      const int idx = static_cast<int>((static_cast<long long>(k) * j) % grid_size);
      sum += 2.0 * (state[k].real() * tw.c[idx] - state[k].imag() * tw.s[idx]);
    }
    u[j] = sum;
  }
  return u;
}

ModalState from_physical(const RealField& field, const Domain& dom) {
  const int m = static_cast<int>(field.size());
  const int n = dom.modes();
  if (m < 2 * n + 1)
    throw std::invalid_argument("grid size M=" + std::to_string(m) +
                                " below 2N+1 loses modal information");
  if (!field.allFinite()) throw std::invalid_argument("field has non-finite samples");
  const Twiddles tw(m);
  ModalState a(n + 1);
  for (int k = 0; k <= n; ++k) {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < m; ++j) {
      const int idx = static_cast<int>((static_cast<long long>(k) * j) % m);
      re += field[j] * tw.c[idx];
      im -= field[j] * tw.s[idx];
    }
    a[k] = {re / m, im / m};
  }
  return a;
}

ModePair project_modes(const ModalState& state) {
  ModePair p{0.0, 0.0};
  if (state.size() > 1) p.mode1 = -2.0 * state[1].imag();
  if (state.size() > 2) p.mode2 = -2.0 * state[2].imag();
  return p;
}

}  // namespace ksm
