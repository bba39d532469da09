#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "amplab/errors.hpp"

namespace amplab::fft {

// FFTW's planner is not reentrant; execution of an existing plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Owning wrapper around an fftw_plan.
class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {
    if (!plan_) throw NumericalError("fftw: plan creation failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = o.plan_;
      o.plan_ = nullptr;
    }
    return *this;
  }
  ~Plan() { reset(); }

  void execute() const { fftw_execute(plan_); }

 private:
  void reset() {
    if (plan_) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

inline fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}

/// Real <-> half-complex 1D transform pair on a fixed length. Buffers are
/// owned so the plans stay valid; FFTW's backward transform is unnormalized.
class RealTransform {
 public:
  explicit RealTransform(std::size_t n) : n_(n), real_(n), spectrum_(n / 2 + 1) {
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = Plan(fftw_plan_dft_r2c_1d(len, real_.data(), as_fftw(spectrum_.data()),
                                         FFTW_ESTIMATE));
    backward_ = Plan(fftw_plan_dft_c2r_1d(len, as_fftw(spectrum_.data()), real_.data(),
                                          FFTW_ESTIMATE));
  }

  std::size_t size() const { return n_; }
  std::span<double> real() { return real_; }
  std::span<std::complex<double>> spectrum() { return spectrum_; }
  void forward() { forward_.execute(); }
  void backward() { backward_.execute(); }

 private:
  std::size_t n_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spectrum_;
  Plan forward_;
  Plan backward_;
};

/// In-place 2D complex transform on a row-major (rows x cols) buffer.
class ComplexTransform2D {
 public:
  ComplexTransform2D(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {
    std::lock_guard lock(planner_mutex());
    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    forward_ = Plan(fftw_plan_dft_2d(r, c, as_fftw(data_.data()), as_fftw(data_.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE));
    backward_ = Plan(fftw_plan_dft_2d(r, c, as_fftw(data_.data()), as_fftw(data_.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<std::complex<double>> data() { return data_; }
  void forward() { forward_.execute(); }
  void backward() { backward_.execute(); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::complex<double>> data_;
  Plan forward_;
  Plan backward_;
};

}  // namespace amplab::fft
