#pragma once

#include <cstdlib>
#include <string>

#include <omp.h>

namespace horolab {

// Caps OpenMP workers at HOROLAB_THREADS when set. Returns the cap in effect.
inline int apply_thread_cap() {
  if (const char* s = std::getenv("HOROLAB_THREADS")) {
    try {
      const int n = std::stoi(s);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

}  // namespace horolab
