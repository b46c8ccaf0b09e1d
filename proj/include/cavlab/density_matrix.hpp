#pragma once

#include <complex>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "cavlab/core.hpp"

namespace cavlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

enum class Level { ground = 0, excited = 1 };

/// Position of |n, level> in the interleaved basis |0,g>, |0,e>, |1,g>, |1,e>, ...
constexpr Eigen::Index basis_index(std::size_t n, Level level) {
  return static_cast<Eigen::Index>(2 * n + static_cast<std::size_t>(level));
}

constexpr std::size_t photon_number_of(Eigen::Index i) { return static_cast<std::size_t>(i) / 2; }
constexpr bool is_excited(Eigen::Index i) { return (i % 2) == 1; }

/// Invariant report for a density matrix.
struct DensityDiagnostics {
  double trace_error = 0.0;          ///< |tr(rho) - expected trace|
  double trace_imag = 0.0;           ///< |Im tr(rho)|
  double hermiticity_error = 0.0;    ///< max |rho - rho^dagger|
  double min_eigenvalue = 0.0;
};

/// Atom (x) truncated field density operator.
///
/// `expected_trace` carries the probability mass the state started with; it
/// is 1 minus the declared truncation deficit of the generating distribution.
class DensityMatrix {
 public:
  static constexpr double kHermiticityTol = 1e-12;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kEigenFloor = -1e-9;

  DensityMatrix(std::size_t nmax, ComplexMatrix entries, double expected_trace = 1.0)
      : nmax_(nmax), entries_(std::move(entries)), expected_trace_(expected_trace) {
    if (entries_.rows() != dimension() || entries_.cols() != dimension())
      throw ValidationError("density matrix must be " + std::to_string(dimension()) + " x " +
                            std::to_string(dimension()));
  }

  /// Atom in |e> (or |g>), field diagonal with weights p_n, on a truncation of
  /// at least dist.nmax() + 1 so the top populated excitation manifold is closed.
  static DensityMatrix product_state(const PhotonDistribution& dist, std::size_t nmax, Level atom = Level::excited) {
    if (nmax < dist.nmax()) throw ValidationError("truncation below the distribution support");
    ComplexMatrix rho = ComplexMatrix::Zero(dim_for(nmax), dim_for(nmax));
    for (std::size_t n = 0; n <= dist.nmax(); ++n) {
      const auto i = basis_index(n, atom);
      rho(i, i) = dist.probs()[n];
    }
    return DensityMatrix(nmax, std::move(rho), dist.sum());
  }

  static constexpr Eigen::Index dim_for(std::size_t nmax) { return static_cast<Eigen::Index>(2 * (nmax + 1)); }

  [[nodiscard]] std::size_t nmax() const { return nmax_; }
  [[nodiscard]] Eigen::Index dimension() const { return dim_for(nmax_); }
  [[nodiscard]] const ComplexMatrix& entries() const { return entries_; }
  [[nodiscard]] ComplexMatrix& entries() { return entries_; }
  [[nodiscard]] double expected_trace() const { return expected_trace_; }

  [[nodiscard]] Complex operator()(std::size_t n, Level a, std::size_t m, Level b) const {
    return entries_(basis_index(n, a), basis_index(m, b));
  }

  [[nodiscard]] Complex trace() const { return entries_.trace(); }

  [[nodiscard]] double population(std::size_t n, Level level) const {
    return entries_(basis_index(n, level), basis_index(n, level)).real();
  }

  [[nodiscard]] DensityDiagnostics diagnose() const {
    DensityDiagnostics d;
    const Complex tr = trace();
    d.trace_error = std::abs(tr.real() - expected_trace_);
    d.trace_imag = std::abs(tr.imag());
    d.hermiticity_error = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    const ComplexMatrix herm = 0.5 * (entries_ + entries_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
  }

  /// Throws ValidationError naming the first violated invariant.
  void check_invariants() const {
    const auto d = diagnose();
    if (d.hermiticity_error > kHermiticityTol)
      throw ValidationError("density matrix not Hermitian: " + std::to_string(d.hermiticity_error));
    if (d.trace_error > kTraceTol || d.trace_imag > kTraceTol)
      throw ValidationError("density matrix trace drifted by " + std::to_string(d.trace_error));
    if (d.min_eigenvalue < kEigenFloor)
      throw ValidationError("density matrix has eigenvalue " + std::to_string(d.min_eigenvalue));
  }

 private:
  std::size_t nmax_;
  ComplexMatrix entries_;
  double expected_trace_;
};

}  // namespace cavlab
