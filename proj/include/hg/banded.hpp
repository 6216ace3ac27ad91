#pragma once

// Complex tridiagonal LU with partial pivoting (the LAPACK gttrf/gttrs
// scheme). Pivoting adds a second superdiagonal.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "hg/core.hpp"

namespace hg {

class TridiagonalLU {
 public:
  // lower[i] = A(i+1, i), diag[i] = A(i, i), upper[i] = A(i, i+1).
  TridiagonalLU(std::vector<cplx> lower, std::vector<cplx> diag, std::vector<cplx> upper)
      : dl_(std::move(lower)), d_(std::move(diag)), du_(std::move(upper)) {
    const std::size_t n = d_.size();
    if (n == 0 || dl_.size() + 1 != n || du_.size() + 1 != n)
      throw DomainError("tridiagonal bands have inconsistent sizes");
    du2_.assign(n > 2 ? n - 2 : 0, cplx{});
    pivot_.assign(n > 1 ? n - 1 : 0, false);
    factor();
  }

  std::size_t size() const noexcept { return d_.size(); }

  void solve_in_place(std::span<cplx> b) const {
    const std::size_t n = d_.size();
    if (b.size() != n) throw DomainError("right-hand side has wrong length");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!pivot_[i]) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const cplx temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t i = n >= 2 ? n - 2 : 0; i-- > 0;)
      b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
  }

  std::vector<cplx> solve(std::span<const cplx> b) const {
    std::vector<cplx> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
  }

 private:
  void eliminate(std::size_t i, bool with_second) {
    if (std::abs(d_[i]) >= std::abs(dl_[i])) {
      if (d_[i] == cplx{}) throw SingularMatrixError("tridiagonal matrix is singular");
      const cplx fact = dl_[i] / d_[i];
      dl_[i] = fact;
      d_[i + 1] -= fact * du_[i];
    } else {
      const cplx fact = d_[i] / dl_[i];
      d_[i] = dl_[i];
      dl_[i] = fact;
      const cplx temp = du_[i];
      du_[i] = d_[i + 1];
      d_[i + 1] = temp - fact * d_[i + 1];
      if (with_second) {
        du2_[i] = du_[i + 1];
        du_[i + 1] = -fact * du_[i + 1];
      }
      pivot_[i] = true;
    }
  }

  void factor() {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 2 < n; ++i) eliminate(i, true);
    if (n > 1) eliminate(n - 2, false);
    for (const auto& v : d_)
      if (v == cplx{}) throw SingularMatrixError("tridiagonal matrix is singular");
  }

  std::vector<cplx> dl_, d_, du_, du2_;
  std::vector<bool> pivot_;
};

}  // namespace hg
