#pragma once

#include <cstddef>
#include <exception>
#include <limits>

namespace posemo {

// Collects exceptions thrown inside an OpenMP loop body. The exception from the
// lowest index wins, so the error reported does not depend on thread timing.
class LoopErrors {
 public:
  template <class F>
  void run(std::size_t index, F&& body) noexcept {
    try {
      body();
    } catch (...) {
#pragma omp critical(posemo_loop_errors)
      if (index < index_) {
        index_ = index;
        error_ = std::current_exception();
      }
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::size_t index_ = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error_;
};

}  // namespace posemo
