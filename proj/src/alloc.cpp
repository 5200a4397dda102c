#include "ctlab/alloc.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ctlab {

void keep_heap_resident() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
}

}  // namespace ctlab
