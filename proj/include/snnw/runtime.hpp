#pragma once

namespace snnw {

/// Keeps freed large blocks in the heap instead of returning them to the OS.
/// Training allocates many short-lived multi-megabyte tensors, and fresh
/// mappings cost a page fault per 4 KiB. No-op outside glibc.
void tune_allocator();

}  // namespace snnw
