#include "pascali/cauchy_green.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

// FFTW's planner is not thread-safe; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  cplx* as_cplx() { return reinterpret_cast<cplx*>(data); }

  fftw_complex* data;
  std::size_t size;
};

}  // namespace

struct CauchyGreenOperator::Impl {
  Impl(const Grid& g, const Mask& d) : grid(g), domain(d) {}
  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  Grid grid;
  Mask domain;
  int m = 0;                    // padded size 2N
  std::vector<cplx> kernel_hat;  // FFT of the padded kernel, scaled by 1/m^2
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  // In-place circular convolution of the padded buffer with the kernel, or
  // with its conjugate-reversed version when `adjoint` is set.
  void convolve(FftwBuffer& buf, bool adjoint) const {
    fftw_execute_dft(forward, buf.data, buf.data);
    cplx* v = buf.as_cplx();
    const std::size_t total = std::size_t(m) * std::size_t(m);
    if (adjoint) {
      for (std::size_t k = 0; k < total; ++k) v[k] *= std::conj(kernel_hat[k]);
    } else {
      for (std::size_t k = 0; k < total; ++k) v[k] *= kernel_hat[k];
    }
    fftw_execute_dft(backward, buf.data, buf.data);
  }

  GridFunction run(const GridFunction& g, bool adjoint) const {
    const Impl& op = *this;
    if (!(g.grid() == op.grid)) throw DimensionError("Cauchy-Green operand lives on a different grid");
    const int n = op.grid.size();
    const int m = op.m;
    const int dim = g.dim();
    GridFunction out(op.grid, dim);
    FftwBuffer buf(std::size_t(m) * std::size_t(m));
    cplx* v = buf.as_cplx();
    for (int c = 0; c < dim; ++c) {
      std::fill(v, v + buf.size, cplx(0.0, 0.0));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (!adjoint && !op.domain.at(i, j)) continue;
          v[std::size_t(i) * std::size_t(m) + std::size_t(j)] = g.at(i, j, c);
        }
      }
      op.convolve(buf, adjoint);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (adjoint && !op.domain.at(i, j)) continue;
          out.at(i, j, c) = v[std::size_t(i) * std::size_t(m) + std::size_t(j)];
        }
      }
    }
    return out;
  }
};

CauchyGreenOperator::CauchyGreenOperator(const Grid& grid, const Mask& domain) {
  if (!(domain.grid() == grid)) throw DimensionError("Cauchy-Green domain mask lives on a different grid");
  if (domain.empty()) throw DomainError("Cauchy-Green domain mask is empty");
  auto impl = std::make_shared<Impl>(grid, domain);
  const int n = grid.size();
  const int m = 2 * n;
  impl->m = m;
  const std::size_t total = std::size_t(m) * std::size_t(m);

  FftwBuffer buf(total);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    impl->forward = fftw_plan_dft_2d(m, m, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
    impl->backward = fftw_plan_dft_2d(m, m, buf.data, buf.data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!impl->forward || !impl->backward) throw Error("FFTW plan creation failed");

  cplx* k = buf.as_cplx();
  std::fill(k, k + total, cplx(0.0, 0.0));
  const double h = grid.spacing();
  for (int p = -(n - 1); p <= n - 1; ++p) {
    for (int q = -(n - 1); q <= n - 1; ++q) {
      if (p == 0 && q == 0) continue;
      const std::size_t idx = std::size_t((p + m) % m) * std::size_t(m) + std::size_t((q + m) % m);
      k[idx] = h / (std::numbers::pi * cplx(p, q));
    }
  }
  fftw_execute_dft(impl->forward, buf.data, buf.data);
  impl->kernel_hat.assign(k, k + total);
  const double scale = 1.0 / double(total);
  for (auto& v : impl->kernel_hat) v *= scale;
  impl_ = std::move(impl);
}

const Grid& CauchyGreenOperator::grid() const { return impl_->grid; }
const Mask& CauchyGreenOperator::domain() const { return impl_->domain; }

cplx CauchyGreenOperator::kernel(int p, int q) const {
  if (p == 0 && q == 0) return {0.0, 0.0};
  return impl_->grid.spacing() / (std::numbers::pi * cplx(p, q));
}

GridFunction CauchyGreenOperator::apply(const GridFunction& g) const { return impl_->run(g, false); }

GridFunction CauchyGreenOperator::apply_adjoint(const GridFunction& v) const { return impl_->run(v, true); }

double cg_residual(const CauchyGreenOperator& op, const GridFunction& g) {
  const Mask inner = op.domain().eroded(2);
  GridFunction r = dbar_fd(op.apply(g));
  r -= g;
  return sup_norm(r, inner);
}

}  // namespace pascali
