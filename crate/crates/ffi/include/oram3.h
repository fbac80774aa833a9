#ifndef ORAM3_H
#define ORAM3_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Oram3Status {
  ORAM3_STATUS_OK = 0,
  ORAM3_STATUS_NULL_POINTER = 1,
  ORAM3_STATUS_INVALID_CONFIG = 2,
  ORAM3_STATUS_ADDRESS_OUT_OF_RANGE = 3,
  /*
   The caller's buffer is shorter than the payload length, or the
   data to write is longer.
   */
  ORAM3_STATUS_BAD_LENGTH = 4,
  /*
   A protocol invariant or guard tripped. The handle should be freed.
   */
  ORAM3_STATUS_INTERNAL = 5,
  ORAM3_STATUS_PANIC = 6,
} Oram3Status;

/*
 Opaque to C.
 */
typedef struct Oram3Handle Oram3Handle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates an all-zero memory of `capacity` blocks (a power of two).
 `data_width` of 0 picks the default. On success `*out` owns a handle
 that must be released with [`oram3_free`].

 # Safety
 `out` must be null or valid for a pointer write.
 */
enum Oram3Status oram3_new(uint64_t capacity,
                           size_t data_width,
                           uint64_t seed,
                           struct Oram3Handle **out);

/*
 # Safety
 `handle` must be null or come from [`oram3_new`] and not be freed yet.
 */
void oram3_free(struct Oram3Handle *handle);

/*
 Bytes of user data per block, or 0 for a null handle.

 # Safety
 `handle` must be null or live.
 */
size_t oram3_payload_len(const struct Oram3Handle *handle);

/*
 # Safety
 `handle` must be null or live.
 */
uint64_t oram3_capacity(const struct Oram3Handle *handle);

/*
 Blocks moved between all parties since creation, setup included.

 # Safety
 `handle` must be null or live.
 */
uint64_t oram3_blocks_moved(const struct Oram3Handle *handle);

/*
 Reads block `addr` into `buf`, which must hold at least
 [`oram3_payload_len`] bytes; exactly that many are written.

 # Safety
 `handle` must be live and `buf` valid for `buf_len` bytes.
 */
enum Oram3Status oram3_read(struct Oram3Handle *handle,
                            uint64_t addr,
                            uint8_t *buf,
                            size_t buf_len);

/*
 Writes `len` bytes to block `addr`, zero-padding to the payload length.
 `old`, if not null, receives the previous contents and must hold at
 least [`oram3_payload_len`] bytes.

 # Safety
 `handle` must be live, `data` valid for `len` bytes, and `old` null or
 valid for `old_len` bytes.
 */
enum Oram3Status oram3_write(struct Oram3Handle *handle,
                             uint64_t addr,
                             const uint8_t *data,
                             size_t len,
                             uint8_t *old,
                             size_t old_len);

/*
 Copies the calling thread's last error message into `buf` as a
 NUL-terminated string, truncating to fit. Returns the buffer size needed
 for the whole message, NUL included.

 # Safety
 `buf` must be null or valid for `buf_len` bytes.
 */
size_t oram3_last_error(char *buf, size_t buf_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORAM3_H */
