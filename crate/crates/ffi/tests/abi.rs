use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gsp_discrim::{apply_fir, eig_sym, generate_geometric_graph, laplacian, normalize_support, FirFilter};
use gsp_discrim_ffi::*;

fn last_error() -> String {
    let p = gsp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Fixture {
    graph: *mut GspGraph,
    op: *mut GspOperator,
}

impl Fixture {
    fn new(n: usize, seed: u64) -> Self {
        let mut graph = ptr::null_mut();
        let mut op = ptr::null_mut();
        unsafe {
            assert_eq!(gsp_graph_generate(n, 5, seed, &mut graph), GspStatus::Ok);
            assert_eq!(gsp_operator_from_graph(graph, &mut op), GspStatus::Ok);
        }
        Self { graph, op }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            gsp_operator_free(self.op);
            gsp_graph_free(self.graph);
        }
    }
}

fn signal(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7 + 3) as f64).sin()).collect()
}

#[test]
fn graph_matches_core_generator() {
    let f = Fixture::new(12, 4);
    let core = generate_geometric_graph(12, 5, 4).unwrap();
    let mut w = vec![0.0; 144];
    unsafe {
        assert_eq!(gsp_graph_node_count(f.graph), 12);
        assert_eq!(gsp_graph_weights(f.graph, w.as_mut_ptr(), w.len()), GspStatus::Ok);
    }
    assert_eq!(w, core.weights().as_slice());
}

#[test]
fn graph_text_round_trip() {
    let f = Fixture::new(9, 1);
    let mut s = ptr::null_mut();
    let mut back = ptr::null_mut();
    let (mut a, mut b) = (vec![0.0; 81], vec![0.0; 81]);
    unsafe {
        assert_eq!(gsp_graph_to_text(f.graph, &mut s), GspStatus::Ok);
        assert_eq!(gsp_graph_from_text(s, &mut back), GspStatus::Ok);
        gsp_string_free(s);
        gsp_graph_weights(f.graph, a.as_mut_ptr(), 81);
        gsp_graph_weights(back, b.as_mut_ptr(), 81);
        gsp_graph_free(back);
    }
    assert_eq!(a, b);
}

#[test]
fn spectrum_and_transforms() {
    let n = 15;
    let f = Fixture::new(n, 2);
    let core = eig_sym(&normalize_support(&laplacian(&generate_geometric_graph(n, 5, 2).unwrap())).unwrap()).unwrap();
    let mut lam = vec![0.0; n];
    let x = signal(n);
    let (mut xt, mut back) = (vec![0.0; n], vec![0.0; n]);
    unsafe {
        assert_eq!(gsp_operator_size(f.op), n);
        assert_eq!(gsp_operator_eigenvalues(f.op, lam.as_mut_ptr(), n), GspStatus::Ok);
        assert_eq!(gsp_operator_gft(f.op, x.as_ptr(), xt.as_mut_ptr(), n), GspStatus::Ok);
        assert_eq!(gsp_operator_igft(f.op, xt.as_ptr(), back.as_mut_ptr(), n), GspStatus::Ok);
    }
    assert_eq!(lam, core.eigenvalues());
    let energy = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    assert!((energy(&x) - energy(&xt)).abs() < 1e-10);
    assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10));
}

#[test]
fn fir_matches_core() {
    let n = 10;
    let f = Fixture::new(n, 5);
    let s = normalize_support(&laplacian(&generate_geometric_graph(n, 5, 5).unwrap())).unwrap();
    let taps = [0.5, -1.0, 0.25];
    let x = signal(n);
    let mut out = vec![0.0; n];
    unsafe {
        assert_eq!(gsp_operator_apply_fir(f.op, taps.as_ptr(), 3, x.as_ptr(), out.as_mut_ptr(), n), GspStatus::Ok);
    }
    assert_eq!(out, apply_fir(&FirFilter::new(taps.to_vec()).unwrap(), &s, &x).unwrap());
}

#[test]
fn identity_model_is_linear_filter() {
    let n = 10;
    let f = Fixture::new(n, 6);
    // one filter, readout 2: prediction is 2·H(S)x
    let taps = [1.0, 0.5];
    let mut m = ptr::null_mut();
    let x = signal(n);
    let (mut pred, mut direct) = (vec![0.0; n], vec![0.0; n]);
    unsafe {
        assert_eq!(
            gsp_model_new(taps.as_ptr(), 1, 2, [2.0].as_ptr(), GspActivation::Identity as i32, 0.0, &mut m),
            GspStatus::Ok
        );
        assert_eq!(gsp_model_features(m), 1);
        assert_eq!(gsp_model_predict(m, f.op, x.as_ptr(), pred.as_mut_ptr(), n), GspStatus::Ok);
        gsp_operator_apply_fir(f.op, taps.as_ptr(), 2, x.as_ptr(), direct.as_mut_ptr(), n);
        gsp_model_free(m);
    }
    assert!(pred.iter().zip(&direct).all(|(p, d)| (p - 2.0 * d).abs() < 1e-12));
}

#[test]
fn model_text_round_trip_and_il_constant() {
    let taps = [0.2, 0.4, -0.1, 0.3, 0.0, 1.0];
    let mut m = ptr::null_mut();
    let mut back = ptr::null_mut();
    let mut s = ptr::null_mut();
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            gsp_model_new(taps.as_ptr(), 2, 3, [1.0, -1.0].as_ptr(), GspActivation::LeakyRectifier as i32, 0.2, &mut m),
            GspStatus::Ok
        );
        assert_eq!(gsp_model_to_text(m, &mut s), GspStatus::Ok);
        assert_eq!(gsp_model_from_text(s, &mut back), GspStatus::Ok);
        assert_eq!(gsp_model_il_constant(m, 1.0, &mut a), GspStatus::Ok);
        assert_eq!(gsp_model_il_constant(back, 1.0, &mut b), GspStatus::Ok);
        assert_eq!(gsp_model_il_constant(m, 0.0, &mut a), GspStatus::InvalidArgument);
        gsp_string_free(s);
        gsp_model_free(m);
        gsp_model_free(back);
    }
    assert!(b > 0.0);
}

#[test]
fn pair_verdicts() {
    let n = 12;
    let f = Fixture::new(n, 8);
    let mut m = ptr::null_mut();
    let x = signal(n);
    let (mut dh, mut dphi) = (false, false);
    unsafe {
        gsp_model_new([1.0, 0.3].as_ptr(), 1, 2, [1.0].as_ptr(), GspActivation::Tanh as i32, 0.0, &mut m);
        // identical signals are never discriminable
        assert_eq!(
            gsp_model_pair_verdict(m, f.op, 3, x.as_ptr(), x.as_ptr(), n, 1e-8, &mut dh, &mut dphi),
            GspStatus::Ok
        );
        assert!(dh && dphi);
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert_eq!(
            gsp_model_pair_verdict(m, f.op, 3, x.as_ptr(), y.as_ptr(), n, 1e-8, &mut dh, &mut dphi),
            GspStatus::Ok
        );
        assert!(!dh);
        assert_eq!(
            gsp_model_pair_verdict(m, f.op, 3, x.as_ptr(), y.as_ptr(), n, -1.0, &mut dh, &mut dphi),
            GspStatus::InvalidArgument
        );
        gsp_model_free(m);
    }
}

#[test]
fn checks_run_through_the_abi() {
    let mut passed = false;
    let mut err = f64::NAN;
    unsafe {
        assert_eq!(gsp_verify_suite(GspSuite::ZeroHighBankAgreement as i32, 50, 1, &mut passed), GspStatus::Ok);
        assert!(passed);
        assert_eq!(gsp_gradient_check(3, 1, &mut err, &mut passed), GspStatus::Ok);
        assert!(passed && err < 1e-4);
        assert_eq!(gsp_verify_suite(42, 10, 0, &mut passed), GspStatus::InvalidArgument);
    }
    assert!(last_error().contains("unknown suite"));
}

#[test]
fn errors_set_codes_and_messages() {
    let mut g = ptr::null_mut();
    let mut m = ptr::null_mut();
    let f = Fixture::new(8, 0);
    let x = signal(8);
    let mut out = vec![0.0; 5];
    unsafe {
        assert_eq!(gsp_graph_generate(0, 5, 0, &mut g), GspStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(gsp_graph_generate(8, 5, 0, ptr::null_mut()), GspStatus::NullPointer);
        assert_eq!(last_error(), "out is null");

        assert_eq!(gsp_operator_gft(f.op, x.as_ptr(), out.as_mut_ptr(), 5), GspStatus::ShapeMismatch);
        assert_eq!(gsp_operator_gft(ptr::null(), x.as_ptr(), out.as_mut_ptr(), 8), GspStatus::NullPointer);

        let bad = CString::new("not a graph").unwrap();
        assert_eq!(gsp_graph_from_text(bad.as_ptr(), &mut g), GspStatus::Parse);

        assert_eq!(gsp_model_new([1.0].as_ptr(), 1, 1, [1.0].as_ptr(), 9, 0.0, &mut m), GspStatus::InvalidArgument);
        assert_eq!(
            gsp_model_new([1.0].as_ptr(), 1, 1, [1.0].as_ptr(), GspActivation::LeakyRectifier as i32, 1.5, &mut m),
            GspStatus::InvalidArgument
        );

        // success clears the message
        assert_eq!(gsp_graph_generate(8, 5, 0, &mut g), GspStatus::Ok);
        assert!(gsp_last_error_message().is_null());
        gsp_graph_free(g);

        assert_eq!(gsp_graph_node_count(ptr::null()), 0);
        gsp_graph_free(ptr::null_mut());
        gsp_operator_free(ptr::null_mut());
        gsp_model_free(ptr::null_mut());
        gsp_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_manifest() {
    let v = unsafe { CStr::from_ptr(gsp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gsp_discrim.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct GspGraph", "typedef struct GspOperator", "typedef struct GspModel", "GSP_STATUS_PANIC = 8"] {
        assert!(header.contains(ty), "{ty}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libgsp_discrim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("gsp_smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
