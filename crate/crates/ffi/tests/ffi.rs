use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use cggm_ffi::*;

fn new_matrix(p: usize, data: &[f64]) -> *mut CggmMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { cggm_matrix_new(p, data.as_ptr(), &mut m) },
        CggmStatus::Ok
    );
    m
}

fn last_error() -> String {
    let p = cggm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn glasso_round_trip() {
    let s = new_matrix(2, &[2.0, 0.5, 0.5, 1.0]);
    assert_eq!(unsafe { cggm_matrix_dim(s) }, 2);
    let cfg = CggmSolverConfig {
        lambda: 0.0,
        ..cggm_solver_config_default()
    };
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cggm_glasso(s, &cfg, &mut r) }, CggmStatus::Ok);

    let mut kind = CggmEstimateKind::Covariance;
    assert_eq!(unsafe { cggm_result_kind(r, &mut kind) }, CggmStatus::Ok);
    assert_eq!(kind, CggmEstimateKind::Precision);

    let (mut objective, mut iterations, mut converged, mut shrinkage) = (0.0, 0usize, false, 0.0);
    let status = unsafe {
        cggm_result_summary(
            r,
            &mut objective,
            &mut iterations,
            &mut converged,
            &mut shrinkage,
        )
    };
    assert_eq!(status, CggmStatus::Ok);
    assert!(converged && objective.is_finite() && shrinkage.is_nan());

    let mut cov = ptr::null_mut();
    assert_eq!(
        unsafe { cggm_result_covariance(r, &mut cov) },
        CggmStatus::Ok
    );
    let mut buf = [0.0; 4];
    assert_eq!(
        unsafe { cggm_matrix_copy(cov, buf.as_mut_ptr(), 4) },
        CggmStatus::Ok
    );
    for (got, want) in buf.iter().zip([2.0, 0.5, 0.5, 1.0]) {
        assert!((got - want).abs() < 1e-6);
    }
    assert_eq!(
        unsafe { cggm_matrix_copy(cov, buf.as_mut_ptr(), 3) },
        CggmStatus::BufferTooSmall
    );

    let mut est = ptr::null_mut();
    assert_eq!(unsafe { cggm_result_estimate(r, &mut est) }, CggmStatus::Ok);
    let mut v = 0.0;
    assert_eq!(
        unsafe { cggm_matrix_get(est, 0, 0, &mut v) },
        CggmStatus::Ok
    );
    assert!((v - 1.0 / 1.75).abs() < 1e-6);
    assert_eq!(
        unsafe { cggm_matrix_get(est, 2, 0, &mut v) },
        CggmStatus::InvalidArgument
    );

    unsafe {
        cggm_matrix_free(est);
        cggm_matrix_free(cov);
        cggm_result_free(r);
        cggm_matrix_free(s);
    }
}

#[test]
fn spcov_and_ledoit_wolf() {
    let s = new_matrix(3, &[1.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.0]);
    let cfg = cggm_solver_config_default();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cggm_spcov(s, &cfg, &mut r) }, CggmStatus::Ok);
    let mut kind = CggmEstimateKind::Precision;
    unsafe { cggm_result_kind(r, &mut kind) };
    assert_eq!(kind, CggmEstimateKind::Covariance);
    unsafe { cggm_result_free(r) };

    let data = [1.0, 2.0, 0.5, -1.0, 0.0, 3.0, 2.0, 1.0];
    let mut lw = ptr::null_mut();
    assert_eq!(
        unsafe { cggm_ledoit_wolf(data.as_ptr(), 4, 2, &mut lw) },
        CggmStatus::Ok
    );
    let mut pi = f64::NAN;
    unsafe {
        cggm_result_summary(
            lw,
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            &mut pi,
        )
    };
    assert!((0.0..=1.0).contains(&pi));
    unsafe {
        cggm_result_free(lw);
        cggm_matrix_free(s);
    }
}

#[test]
fn errors_map_to_codes() {
    let singular = new_matrix(2, &[1.0, 1.0, 1.0, 1.0]);
    let cfg = CggmSolverConfig {
        lambda: 0.0,
        ..cggm_solver_config_default()
    };
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { cggm_glasso(singular, &cfg, &mut r) },
        CggmStatus::SingularInput
    );
    assert!(r.is_null());
    assert!(!last_error().is_empty());

    let bad_delta = CggmSolverConfig {
        delta: 5.0,
        ..cggm_solver_config_default()
    };
    assert_eq!(
        unsafe { cggm_spcov(singular, &bad_delta, &mut r) },
        CggmStatus::InvalidArgument
    );

    let same = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
    assert_eq!(
        unsafe { cggm_ledoit_wolf(same.as_ptr(), 3, 2, &mut r) },
        CggmStatus::DegenerateData
    );
    assert_eq!(
        unsafe { cggm_ledoit_wolf(same.as_ptr(), 1, 2, &mut r) },
        CggmStatus::TooFewSamples
    );

    assert_eq!(
        unsafe { cggm_glasso(ptr::null(), &cfg, &mut r) },
        CggmStatus::NullPointer
    );
    assert_eq!(
        unsafe { cggm_glasso(singular, &cfg, ptr::null_mut()) },
        CggmStatus::NullPointer
    );
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { cggm_matrix_new(0, [0.0].as_ptr(), &mut m) },
        CggmStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { cggm_matrix_new(1, [f64::NAN].as_ptr(), &mut m) },
        CggmStatus::NonFiniteInput
    );
    assert_eq!(unsafe { cggm_matrix_dim(ptr::null()) }, 0);
    unsafe {
        cggm_matrix_free(ptr::null_mut());
        cggm_result_free(ptr::null_mut());
        cggm_matrix_free(singular);
    }
}

#[test]
fn status_names() {
    let name = |s: i32| {
        unsafe { CStr::from_ptr(cggm_status_name(s)) }
            .to_str()
            .unwrap()
    };
    assert_eq!(name(CggmStatus::Ok as i32), "ok");
    assert_eq!(name(CggmStatus::SingularInput as i32), "singular input");
    assert_eq!(name(12345), "unknown status");
}

#[test]
fn copula_transform() {
    let x = [3.0, 1.0, 2.0];
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { cggm_to_gaussian(x.as_ptr(), 3, out.as_mut_ptr()) },
        CggmStatus::Ok
    );
    assert!(out[1] < out[2] && out[2] < out[0]);
    assert_eq!(out[2], 0.0);
    assert_eq!(
        unsafe { cggm_to_gaussian(x.as_ptr(), 1, out.as_mut_ptr()) },
        CggmStatus::TooFewSamples
    );
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include.join("cggm.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"cggm.h\"\n\
         int main(void) {\n\
           CggmSolverConfig cfg = cggm_solver_config_default();\n\
           CggmMatrix *m = 0; CggmResult *r = 0;\n\
           double d[1] = {1.0};\n\
           if (cggm_matrix_new(1, d, &m) != CGGM_STATUS_OK) return 1;\n\
           CggmStatus s = cggm_glasso(m, &cfg, &r);\n\
           cggm_result_free(r); cggm_matrix_free(m);\n\
           return s == CGGM_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
