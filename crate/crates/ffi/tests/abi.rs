use std::ffi::{c_char, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cznd_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { cznd_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(511)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn example3() -> *mut CzndProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { cznd_problem_example3(&mut p) }, CzndStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn dims_and_exact_state() {
    let p = example3();
    let (mut m, mut n) = (0usize, 0usize);
    unsafe {
        assert_eq!(cznd_problem_dims(p, &mut m, &mut n), CzndStatus::Ok);
        assert_eq!((m, n), (2, 2));
        let mut x = [0.0; 8];
        assert_eq!(cznd_problem_exact_state(p, 0.0, x.as_mut_ptr(), 8), CzndStatus::Ok);
        assert_eq!(x, [0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0]);
        let mut small = [0.0; 4];
        assert_eq!(
            cznd_problem_exact_state(p, 0.0, small.as_mut_ptr(), 4),
            CzndStatus::BufferTooSmall
        );
        let mut r = -1.0;
        assert_eq!(cznd_problem_residual(p, 0.0, x.as_ptr(), 8, &mut r), CzndStatus::Ok);
        assert_eq!(r, 0.0);
        cznd_problem_free(p);
    }
}

#[test]
fn integration_through_the_abi_converges() {
    let p = example3();
    let x0 = [1.0, -2.0, 3.0, 0.5, -4.0, 2.0, 0.0, 1.5];
    let mut tr = ptr::null_mut();
    unsafe {
        let status = cznd_integrate(
            p,
            CZND_MODEL_CON_CZND1_CONJ,
            10.0,
            0.0,
            x0.as_ptr(),
            8,
            0.0,
            10.0,
            0.0,
            0.0,
            200,
            &mut tr,
        );
        assert_eq!(status, CzndStatus::Ok, "{}", last_error());
        assert_eq!(cznd_trajectory_len(tr), 200);
        assert_eq!(cznd_trajectory_dim(tr), 8);
        let (mut tau, mut res) = (0.0, 0.0);
        let mut state = [0.0; 8];
        assert_eq!(
            cznd_trajectory_sample(tr, 0, &mut tau, &mut res, state.as_mut_ptr(), 8),
            CzndStatus::Ok
        );
        assert_eq!((tau, state), (0.0, x0));
        assert_eq!(
            cznd_trajectory_sample(tr, 199, &mut tau, &mut res, ptr::null_mut(), 0),
            CzndStatus::Ok
        );
        assert_eq!(tau, 10.0);
        assert!(res < 1e-2, "{res}");
        assert_eq!(
            cznd_trajectory_sample(tr, 200, &mut tau, ptr::null_mut(), ptr::null_mut(), 0),
            CzndStatus::InvalidArgument
        );
        cznd_trajectory_free(tr);
        cznd_problem_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    let p = example3();
    let x = [0.0; 8];
    let mut out = [0.0; 8];
    unsafe {
        let s = cznd_vector_field(p, CZND_MODEL_CON_CZND2, 10.0, 20.0, 0.0, x.as_ptr(), out.as_mut_ptr(), 8);
        assert_eq!(s, CzndStatus::ComplexGainUnsupported);
        assert!(last_error().contains("real gains"), "{}", last_error());

        let s = cznd_vector_field(p, 7, 10.0, 0.0, 0.0, x.as_ptr(), out.as_mut_ptr(), 8);
        assert_eq!(s, CzndStatus::InvalidArgument);
        let s = cznd_vector_field(p, CZND_MODEL_CON_CZND1, -1.0, 0.0, 0.0, x.as_ptr(), out.as_mut_ptr(), 8);
        assert_eq!(s, CzndStatus::InvalidArgument);
        let s = cznd_vector_field(p, CZND_MODEL_CON_CZND1, 10.0, 0.0, 0.0, x.as_ptr(), out.as_mut_ptr(), 8);
        assert_eq!(s, CzndStatus::Ok);
        assert_eq!(last_error(), "");

        assert_eq!(cznd_problem_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()), CzndStatus::NullPointer);
        assert_eq!(cznd_problem_example3(ptr::null_mut()), CzndStatus::NullPointer);

        let bad = CString::new("dims 1 1\n[F]\nsin(\n[A]\n1\n[C]\n1\n").unwrap();
        let mut q = ptr::null_mut();
        assert_eq!(cznd_problem_parse(bad.as_ptr(), ptr::null(), &mut q), CzndStatus::ParseError);
        assert!(q.is_null());
        assert!(last_error().contains("[F] row 1 col 1"), "{}", last_error());

        let missing = CString::new("/nonexistent/problem.tvp").unwrap();
        assert_eq!(cznd_problem_load(missing.as_ptr(), &mut q), CzndStatus::IoError);

        let bare = CString::new("dims 1 1\n[F]\n2\n[A]\n1\n[C]\n3\n").unwrap();
        assert_eq!(cznd_problem_parse(bare.as_ptr(), ptr::null(), &mut q), CzndStatus::Ok);
        let mut buf = [0.0; 2];
        assert_eq!(cznd_problem_exact_state(q, 0.0, buf.as_mut_ptr(), 2), CzndStatus::NoExactSolution);
        cznd_problem_free(q);
        cznd_problem_free(p);
        cznd_problem_free(ptr::null_mut());
        cznd_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn truncated_error_buffer_is_terminated() {
    let p = example3();
    unsafe {
        let x = [0.0; 8];
        let mut out = [0.0; 8];
        cznd_vector_field(p, CZND_MODEL_CON_CZND2, 10.0, 1.0, 0.0, x.as_ptr(), out.as_mut_ptr(), 8);
        let mut buf = [1 as c_char; 8];
        let full = cznd_last_error(buf.as_mut_ptr(), buf.len());
        assert!(full > 7);
        assert_eq!(buf[7], 0);
        assert_eq!(cznd_last_error(ptr::null_mut(), 0), full);
        cznd_problem_free(p);
    }
}

#[test]
fn uniqueness_through_the_abi() {
    let p = example3();
    let (mut unique, mut gap, mut det) = (false, 0.0, 0.0);
    unsafe {
        assert_eq!(cznd_check_uniqueness(p, 0.0, 10.0, 101, &mut unique, &mut gap, &mut det), CzndStatus::Ok);
        cznd_problem_free(p);
    }
    assert!(unique);
    assert!(gap > 1.0);
    assert!(det > 0.0);
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("cznd.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for symbol in [
        "cznd_problem_example3",
        "cznd_integrate",
        "cznd_trajectory_sample",
        "CZND_STATUS_COMPLEX_GAIN_UNSUPPORTED",
        "typedef struct CzndProblem CzndProblem",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found, skipping header compilation");
        return;
    };
    assert!(status.success(), "cznd.h does not compile as C");
}
