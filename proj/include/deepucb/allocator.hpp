#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace deepucb {

/// Full-batch training allocates and frees activation matrices of several MB
/// every epoch. By default glibc serves those with mmap and returns them to
/// the kernel immediately, which makes page faults dominate the run time.
/// Keeping them on the heap is a large speedup for the binaries.
inline void keep_large_allocations() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace deepucb
