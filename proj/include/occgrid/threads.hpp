#pragma once

namespace occgrid {

// Worker cap from the OCCGRID_THREADS environment variable. 0 or unset
// means auto (hardware default). Malformed values throw UsageError.
int thread_cap_from_env();

// Applies the cap to the OpenMP runtime. Call once at process start.
void apply_thread_cap();

}  // namespace occgrid
