#include "occgrid/threads.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "occgrid/errors.hpp"

namespace occgrid {

int thread_cap_from_env() {
  const char* raw = std::getenv("OCCGRID_THREADS");
  if (raw == nullptr || raw[0] == '\0') return 0;
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(raw, &pos);
  } catch (const std::exception&) {
    throw UsageError(std::string("OCCGRID_THREADS: not an integer: ") + raw);
  }
  if (pos != std::string(raw).size() || value < 0) {
    throw UsageError(std::string("OCCGRID_THREADS: expected a non-negative integer, got ") + raw);
  }
  return value;
}

void apply_thread_cap() {
  const int cap = thread_cap_from_env();
#ifdef _OPENMP
  if (cap > 0) omp_set_num_threads(cap);
#else
  (void)cap;
#endif
}

}  // namespace occgrid
