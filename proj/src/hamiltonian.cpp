#include "jumpsim/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jumpsim {

void require_hermitian(const Matrix& h, double tolerance, const std::string& context) {
  if (h.rows() != h.cols()) {
    std::ostringstream os;
    os << "Hamiltonian" << context << " is not square (" << h.rows() << "x" << h.cols() << ")";
    throw Error(os.str());
  }
  for (Eigen::Index n = 0; n < h.rows(); ++n) {
    for (Eigen::Index m = n; m < h.cols(); ++m) {
      const Complex a = h(n, m);
      const Complex b = std::conj(h(m, n));
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()) || std::abs(a - b) > tolerance) {
        std::ostringstream os;
        os << "Hamiltonian" << context << " is not Hermitian at entry (" << n << "," << m
           << "): H_nm = " << a << ", conj(H_mn) = " << b;
        throw Error(os.str());
      }
    }
  }
}

HamiltonianModel::HamiltonianModel(Matrix h)
    : HamiltonianModel(std::vector<HamiltonianSlice>{{0.0, std::move(h)}}, 0.0) {}

HamiltonianModel::HamiltonianModel(std::vector<HamiltonianSlice> slices, double baseline_floor)
    : baseline_floor_(baseline_floor), slices_(std::move(slices)) {
  if (slices_.empty()) throw Error("HamiltonianModel needs at least one slice");
  dimension_ = static_cast<int>(slices_.front().matrix.rows());
  validate();
  if (baseline_floor_ > 0.0) apply_floor();
}

void HamiltonianModel::validate() const {
  if (dimension_ < 1) throw Error("HamiltonianModel dimension must be >= 1");
  if (!(baseline_floor_ >= 0.0)) throw Error("baseline floor must be >= 0");
  if (slices_.front().t_start != 0.0) throw Error("first Hamiltonian slice must start at t = 0");
  for (std::size_t k = 0; k < slices_.size(); ++k) {
    const auto& s = slices_[k];
    if (s.matrix.rows() != dimension_ || s.matrix.cols() != dimension_) {
      throw Error("Hamiltonian slice " + std::to_string(k) + " has inconsistent dimension");
    }
    if (k > 0 && !(s.t_start > slices_[k - 1].t_start)) {
      throw Error("Hamiltonian slice times must be strictly increasing (slice " +
                  std::to_string(k) + ")");
    }
    require_hermitian(s.matrix, kHermitianTolerance, " slice " + std::to_string(k));
  }
}

void HamiltonianModel::apply_floor() {
  for (int n = 0; n < dimension_; ++n) {
    for (int m = 0; m < dimension_; ++m) {
      Complex phase{0.0, 0.0};
      for (const auto& s : slices_) {
        const Complex v = s.matrix(n, m);
        if (std::abs(v) >= kStructuralZero) {
          phase = v / std::abs(v);
          break;
        }
      }
      if (phase == Complex{0.0, 0.0}) continue;
      for (auto& s : slices_) {
        if (std::abs(s.matrix(n, m)) < baseline_floor_) s.matrix(n, m) = baseline_floor_ * phase;
      }
    }
  }
}

std::size_t HamiltonianModel::slice_index(double t) const {
  auto it = std::upper_bound(slices_.begin(), slices_.end(), t,
                             [](double v, const HamiltonianSlice& s) { return v < s.t_start; });
  return it == slices_.begin() ? 0 : static_cast<std::size_t>(it - slices_.begin()) - 1;
}

bool HamiltonianModel::structurally_active(int n, int m) const {
  return std::any_of(slices_.begin(), slices_.end(),
                     [&](const HamiltonianSlice& s) { return std::abs(s.matrix(n, m)) >= kStructuralZero; });
}

}  // namespace jumpsim
