#ifndef JUMPSIM_HAMILTONIAN_HPP
#define JUMPSIM_HAMILTONIAN_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jumpsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Entries with |H_nm| below this are structural zeros (no edge).
inline constexpr double kStructuralZero = 1e-12;
/// Entrywise tolerance for the Hermiticity check.
inline constexpr double kHermitianTolerance = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HamiltonianSlice {
  double t_start = 0.0;
  Matrix matrix;
};

/**
 * Piecewise-constant Hermitian Hamiltonian.
 *
 * Slice k is in force on [t_start_k, t_start_{k+1}); the last slice extends
 * forever. When a baseline floor is configured, every entry that is active
 * (|H_nm| >= kStructuralZero) in any slice is raised to at least the floor
 * in every slice, keeping the phase of its first active occurrence. This
 * guarantees finite ratios H_nm(t)/H_nm(t') for the time-dependent rule.
 */
class HamiltonianModel {
 public:
  HamiltonianModel() = default;
  explicit HamiltonianModel(Matrix h);
  HamiltonianModel(std::vector<HamiltonianSlice> slices, double baseline_floor);

  int dimension() const { return dimension_; }
  std::span<const HamiltonianSlice> slices() const { return slices_; }
  double baseline_floor() const { return baseline_floor_; }
  bool time_dependent() const { return slices_.size() > 1; }

  std::size_t slice_index(double t) const;
  const Matrix& at(double t) const { return slices_[slice_index(t)].matrix; }
  Complex entry(int n, int m, double t) const { return at(t)(n, m); }

  // Active in at least one slice.
  bool structurally_active(int n, int m) const;

 private:
  void validate() const;
  void apply_floor();

  int dimension_ = 0;
  double baseline_floor_ = 0.0;
  std::vector<HamiltonianSlice> slices_;
};

// Throws Error naming the first offending entry.
void require_hermitian(const Matrix& h, double tolerance = kHermitianTolerance,
                       const std::string& context = "");

}  // namespace jumpsim

#endif  // JUMPSIM_HAMILTONIAN_HPP
