#pragma once

namespace ctlab {

/// Keeps freed heap memory mapped for reuse. Large-batch steps allocate and drop
/// several N x M buffers each; with glibc's default these go through mmap and
/// every step pays fresh page faults. No-op on other C libraries.
void keep_heap_resident();

}  // namespace ctlab
