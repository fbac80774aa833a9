use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use oram3_ffi::*;

fn open(capacity: u64, width: usize) -> *mut Oram3Handle {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { oram3_new(capacity, width, 1, &mut h) },
        Oram3Status::Ok
    );
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe { oram3_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn write_then_read_through_the_c_interface() {
    let h = open(16, 0);
    unsafe {
        let len = oram3_payload_len(h);
        assert_eq!(len, 7);
        assert_eq!(oram3_capacity(h), 16);
        let mut old = vec![0xffu8; len];
        let data = b"hello";
        let st = oram3_write(h, 3, data.as_ptr(), data.len(), old.as_mut_ptr(), old.len());
        assert_eq!(st, Oram3Status::Ok);
        assert_eq!(old, vec![0; len]);
        let mut buf = vec![0u8; len];
        assert_eq!(
            oram3_read(h, 3, buf.as_mut_ptr(), buf.len()),
            Oram3Status::Ok
        );
        assert_eq!(&buf, b"hello\0\0");
        assert!(oram3_blocks_moved(h) > 0);
        oram3_free(h);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { oram3_new(12, 0, 0, &mut h) },
        Oram3Status::InvalidConfig
    );
    assert!(h.is_null());
    assert!(last_error().contains("power of two"));
    assert_eq!(
        unsafe { oram3_new(4, 0, 0, ptr::null_mut()) },
        Oram3Status::NullPointer
    );

    let h = open(4, 0);
    let mut buf = [0u8; 7];
    unsafe {
        assert_eq!(
            oram3_read(h, 4, buf.as_mut_ptr(), 7),
            Oram3Status::AddressOutOfRange
        );
        assert_eq!(
            oram3_read(h, 0, buf.as_mut_ptr(), 6),
            Oram3Status::BadLength
        );
        assert_eq!(
            oram3_read(h, 0, ptr::null_mut(), 7),
            Oram3Status::NullPointer
        );
        assert_eq!(
            oram3_write(h, 0, [0u8; 8].as_ptr(), 8, ptr::null_mut(), 0),
            Oram3Status::BadLength
        );
        assert_eq!(
            oram3_read(ptr::null_mut(), 0, buf.as_mut_ptr(), 7),
            Oram3Status::NullPointer
        );
        assert_eq!(
            oram3_write(h, 1, ptr::null(), 0, ptr::null_mut(), 0),
            Oram3Status::Ok
        );
        oram3_free(h);
        oram3_free(ptr::null_mut());
    }
}

#[test]
fn last_error_reports_the_needed_size_and_truncates() {
    let mut h = ptr::null_mut();
    unsafe { oram3_new(3, 0, 0, &mut h) };
    let need = unsafe { oram3_last_error(ptr::null_mut(), 0) };
    assert_eq!(need, last_error().len() + 1);
    let mut small = [1 as std::ffi::c_char; 4];
    unsafe { oram3_last_error(small.as_mut_ptr(), small.len()) };
    assert_eq!(small[3], 0);
}

#[test]
fn header_declares_the_interface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/oram3.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "oram3_new",
        "oram3_free",
        "oram3_read",
        "oram3_write",
        "oram3_last_error",
        "typedef struct Oram3Handle Oram3Handle",
        "ORAM3_STATUS_BAD_LENGTH",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "oram3.h"
int run(void) {
    Oram3Handle *h = 0;
    uint8_t buf[64];
    if (oram3_new(8, 0, 1, &h) != ORAM3_STATUS_OK) return 1;
    Oram3Status st = oram3_read(h, 0, buf, sizeof buf);
    oram3_free(h);
    return st == ORAM3_STATUS_OK ? 0 : 2;
}
"#,
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.path().join("use.o"))
        .arg("-I")
        .arg(include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
