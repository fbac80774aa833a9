//! C ABI over [`oram3::OramSystem`]. Every call returns an [`Oram3Status`];
//! the text of the most recent failure on the calling thread is available
//! from [`oram3_last_error`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oram3::{OramConfig, OramError, OramSystem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oram3Status {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    AddressOutOfRange = 3,
    /// The caller's buffer is shorter than the payload length, or the
    /// data to write is longer.
    BadLength = 4,
    /// A protocol invariant or guard tripped. The handle should be freed.
    Internal = 5,
    Panic = 6,
}

/// Opaque to C.
pub struct Oram3Handle {
    inner: OramSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: Oram3Status, msg: impl Into<String>) -> Oram3Status {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn from_error(e: OramError) -> Oram3Status {
    let status = match e {
        OramError::InvalidConfig(_) => Oram3Status::InvalidConfig,
        OramError::AddressOutOfRange { .. } => Oram3Status::AddressOutOfRange,
        _ => Oram3Status::Internal,
    };
    fail(status, e.to_string())
}

fn guarded(f: impl FnOnce() -> Oram3Status) -> Oram3Status {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(Oram3Status::Panic, "panic inside oram3"))
}

/// Creates an all-zero memory of `capacity` blocks (a power of two).
/// `data_width` of 0 picks the default. On success `*out` owns a handle
/// that must be released with [`oram3_free`].
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn oram3_new(
    capacity: u64,
    data_width: usize,
    seed: u64,
    out: *mut *mut Oram3Handle,
) -> Oram3Status {
    guarded(|| {
        if out.is_null() {
            return fail(Oram3Status::NullPointer, "out is null");
        }
        let mut cfg = OramConfig::new(capacity);
        if data_width != 0 {
            cfg.data_width = data_width;
        }
        match OramSystem::new(cfg, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(Oram3Handle { inner }));
                Oram3Status::Ok
            }
            Err(e) => {
                *out = ptr::null_mut();
                from_error(e)
            }
        }
    })
}

/// # Safety
/// `handle` must be null or come from [`oram3_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn oram3_free(handle: *mut Oram3Handle) {
    if !handle.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(handle))));
    }
}

/// Bytes of user data per block, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn oram3_payload_len(handle: *const Oram3Handle) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.payload_len())
}

/// # Safety
/// `handle` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn oram3_capacity(handle: *const Oram3Handle) -> u64 {
    handle.as_ref().map_or(0, |h| h.inner.capacity())
}

/// Blocks moved between all parties since creation, setup included.
///
/// # Safety
/// `handle` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn oram3_blocks_moved(handle: *const Oram3Handle) -> u64 {
    handle
        .as_ref()
        .map_or(0, |h| h.inner.net().meter().total_blocks())
}

/// Reads block `addr` into `buf`, which must hold at least
/// [`oram3_payload_len`] bytes; exactly that many are written.
///
/// # Safety
/// `handle` must be live and `buf` valid for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn oram3_read(
    handle: *mut Oram3Handle,
    addr: u64,
    buf: *mut u8,
    buf_len: usize,
) -> Oram3Status {
    guarded(|| {
        let Some(h) = handle.as_mut() else {
            return fail(Oram3Status::NullPointer, "handle is null");
        };
        if buf.is_null() {
            return fail(Oram3Status::NullPointer, "buf is null");
        }
        let need = h.inner.payload_len();
        if buf_len < need {
            return fail(
                Oram3Status::BadLength,
                format!("buffer of {buf_len} bytes, need {need}"),
            );
        }
        match h.inner.read(addr) {
            Ok(data) => {
                ptr::copy_nonoverlapping(data.as_ptr(), buf, need);
                Oram3Status::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes `len` bytes to block `addr`, zero-padding to the payload length.
/// `old`, if not null, receives the previous contents and must hold at
/// least [`oram3_payload_len`] bytes.
///
/// # Safety
/// `handle` must be live, `data` valid for `len` bytes, and `old` null or
/// valid for `old_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn oram3_write(
    handle: *mut Oram3Handle,
    addr: u64,
    data: *const u8,
    len: usize,
    old: *mut u8,
    old_len: usize,
) -> Oram3Status {
    guarded(|| {
        let Some(h) = handle.as_mut() else {
            return fail(Oram3Status::NullPointer, "handle is null");
        };
        if data.is_null() && len > 0 {
            return fail(Oram3Status::NullPointer, "data is null");
        }
        let need = h.inner.payload_len();
        if len > need {
            return fail(
                Oram3Status::BadLength,
                format!("{len} bytes of data, room for {need}"),
            );
        }
        if !old.is_null() && old_len < need {
            return fail(
                Oram3Status::BadLength,
                format!("old buffer of {old_len} bytes, need {need}"),
            );
        }
        let bytes = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(data, len)
        };
        match h.inner.write(addr, bytes) {
            Ok(prev) => {
                if !old.is_null() {
                    ptr::copy_nonoverlapping(prev.as_ptr(), old, need);
                }
                Oram3Status::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to fit. Returns the buffer size needed
/// for the whole message, NUL included.
///
/// # Safety
/// `buf` must be null or valid for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn oram3_last_error(buf: *mut c_char, buf_len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && buf_len > 0 {
            let n = msg.len().min(buf_len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}
