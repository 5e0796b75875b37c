#pragma once

// Fourier-Galerkin representation of the Kuramoto-Sivashinsky field
//
//   u_t = -u_xx - u_xxxx - u u_x,   x in [0, L) periodic,
//   u(x, t) = sum_{k=-N..N} a_k(t) exp(i k q x),   q = 2 pi / L.
//
// Only a_0..a_N are stored; a_{-k} = conj(a_k) is implied so that u is real.
// The mean a_0 is conserved by the flow and pinned to zero throughout.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace ksm {

template <typename Scalar>
using ModalStateT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
using ModalState = ModalStateT<double>;

/// Grid samples of u(x) on [0, L), x_j = j L / M.
using RealField = Eigen::VectorXd;

class Domain {
 public:
  Domain(double length, int modes);

  double length() const noexcept { return length_; }
  int modes() const noexcept { return modes_; }
  /// Fundamental wavenumber q = 2 pi / L; always derived from the length.
  double wavenumber() const noexcept { return 2.0 * std::numbers::pi / length_; }
  /// Dimension of the real coordinate vector (Re a_k, Im a_k), k = 1..N.
  int real_dim() const noexcept { return 2 * modes_; }

  bool operator==(const Domain&) const = default;

 private:
  double length_;
  int modes_;
};

/// Invariant subspaces the Galerkin flow is restricted to.
/// Odd: u(-x) = -u(x), i.e. purely imaginary a_k (sine series).
enum class Subspace { Full, Odd };

template <typename Scalar>
Scalar linear_growth_rate(int k, Scalar q) {
  const Scalar kq2 = Scalar(k) * Scalar(k) * q * q;
  return kq2 - kq2 * kq2;
}

/// k^2 q^2 - k^4 q^4; requires |k| <= N.
double linear_growth_rate(int k, const Domain& dom);

/// Growth rates for k = 0..N, the diagonal of the linear part.
Eigen::VectorXd linear_spectrum(const Domain& dom);

ModalState zero_state(const Domain& dom);

/// Throws std::invalid_argument unless the state has N+1 finite entries and a_0 = 0.
void check_state(const ModalState& state, const Domain& dom);

namespace detail {

template <typename Scalar>
std::complex<Scalar> mode(const ModalStateT<Scalar>& a, int m) {
  return m >= 0 ? a[m] : std::conj(a[-m]);
}

}  // namespace detail

/// Truncated quadratic term -(i k q / 2) sum_{|m|,|k-m| <= N} a_m a_{k-m}, k = 0..N.
/// Evaluated as a direct convolution, pairing m with k - m.
template <typename Scalar>
ModalStateT<Scalar> ks_nonlinear(const ModalStateT<Scalar>& a, Scalar q) {
  using C = std::complex<Scalar>;
  const int n = static_cast<int>(a.size()) - 1;
  ModalStateT<Scalar> out(a.size());
  out[0] = C(0);
  for (int k = 1; k <= n; ++k) {
    C acc(0);
    for (int m = k / 2 + 1; m <= n; ++m) acc += a[m] * detail::mode(a, k - m);
    C sum = Scalar(2) * acc;
    if (k % 2 == 0) sum += a[k / 2] * a[k / 2];
    out[k] = C(0, -Scalar(k) * q / Scalar(2)) * sum;
  }
  return out;
}

template <typename Scalar>
ModalStateT<Scalar> ks_rhs(const ModalStateT<Scalar>& a, Scalar q) {
  ModalStateT<Scalar> out = ks_nonlinear(a, q);
  for (Eigen::Index k = 1; k < a.size(); ++k)
    out[k] += linear_growth_rate(static_cast<int>(k), q) * a[k];
  return out;
}

ModalState ks_rhs(const ModalState& state, const Domain& dom);

/// Right-hand side of the adjoint equation psi_t = psi_xx + psi_xxxx - u psi_x,
/// projected onto |k| <= N. In real coordinates this is exactly -J(u)^T psi,
/// since the Euclidean product on (Re a_k, Im a_k) is a fixed multiple of L^2.
template <typename Scalar>
ModalStateT<Scalar> ks_adjoint_rhs(const ModalStateT<Scalar>& u, const ModalStateT<Scalar>& psi,
                                   Scalar q) {
  using C = std::complex<Scalar>;
  const int n = static_cast<int>(u.size()) - 1;
  ModalStateT<Scalar> out(u.size());
  out[0] = C(0);
  for (int k = 1; k <= n; ++k) {
    // (u psi_x)_k = sum_m u_{k-m} (i m q) psi_m
    C acc(0);
    for (int m = std::max(-n, k - n); m <= n; ++m) {
      if (m == 0 || m == k) continue;
      acc += Scalar(m) * detail::mode(u, k - m) * detail::mode(psi, m);
    }
    out[k] = -linear_growth_rate(k, q) * psi[k] - C(0, q) * acc;
  }
  return out;
}

/// Interleaved real coordinates [Re a_1, Im a_1, ..., Re a_N, Im a_N].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> to_real(const ModalStateT<Scalar>& a) {
  const Eigen::Index n = a.size() - 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(2 * n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    x[2 * (k - 1)] = a[k].real();
    x[2 * (k - 1) + 1] = a[k].imag();
  }
  return x;
}

template <typename Derived>
ModalStateT<typename Derived::Scalar> from_real(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size() / 2;
  ModalStateT<Scalar> a(n + 1);
  a[0] = std::complex<Scalar>(0);
  for (Eigen::Index k = 1; k <= n; ++k) a[k] = {x[2 * (k - 1)], x[2 * (k - 1) + 1]};
  return a;
}

inline Eigen::Index re_slot(int k) { return 2 * (k - 1); }
inline Eigen::Index im_slot(int k) { return 2 * (k - 1) + 1; }

/// Orthonormal basis (columns) of the subspace in real coordinates.
Eigen::MatrixXd subspace_basis(Subspace subspace, int modes);

/// Distance of x from the subspace, relative to |x|.
double subspace_defect(const Eigen::VectorXd& x, Subspace subspace);

/// Evaluates u on M equispaced points; requires M >= 2N + 2.
RealField to_physical(const ModalState& state, int grid_size);

/// Discrete Fourier coefficients k = 0..N of a real grid function; rejects M < 2N + 1.
/// a_0 carries the grid mean, it is not forced to zero.
ModalState from_physical(const RealField& field, const Domain& dom);

struct ModePair {
  double mode1;
  double mode2;
};

/// Sine coefficients (-2 Im a_1, -2 Im a_2): with a_1 = -i/2, u = sin(q x) and mode1 = 1.
ModePair project_modes(const ModalState& state);

}  // namespace ksm
