use std::ffi::{CStr, CString};
use std::ptr;
use wavegcc_ffi::*;

fn last_error() -> String {
    let p = wg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn disk() -> (*mut WgManifold, *mut WgRegion) {
    let mut m = ptr::null_mut();
    let mut r = ptr::null_mut();
    assert_eq!(wg_manifold_flat_torus(1.0, 1.0, &mut m), WgStatus::Ok);
    assert_eq!(wg_region_new(1.0, &mut r), WgStatus::Ok);
    assert_eq!(wg_region_add_hole(r, 0.5, 0.5, 0.25, 0.3), WgStatus::Ok);
    (m, r)
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(wg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn geometry_queries() {
    unsafe {
        let (m, r) = disk();
        let mut v = 0.0;
        assert_eq!(wg_region_evaluate(m, r, 0.5, 0.5, &mut v), WgStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(wg_region_evaluate(m, r, 0.0, 0.0, &mut v), WgStatus::Ok);
        assert_eq!(v, 1.0);
        // a horizontal ray along x2 = 0 never meets the hole
        assert_eq!(wg_geodesic_average(m, r, 0.0, 0.0, 1.0, 0.0, 0.7, &mut v), WgStatus::Ok);
        assert!((v - 0.7).abs() < 1e-9);
        let mut rho = [0.0; 4];
        assert_eq!(wg_k_of_t(m, r, 0.3, 8, 8, &mut v, rho.as_mut_ptr()), WgStatus::Ok);
        assert!(v < 1e-8 && (rho[2].hypot(rho[3]) - 1.0).abs() < 1e-9);
        assert_eq!(wg_t_uc(m, r, 128, &mut v), WgStatus::Ok);
        assert!((v - 0.5).abs() < 0.02);
        wg_region_free(r);
        wg_manifold_free(m);
    }
}

#[test]
fn trapped_strip_gives_infinite_time() {
    unsafe {
        let mut m = ptr::null_mut();
        let mut r = ptr::null_mut();
        assert_eq!(wg_manifold_flat_torus(1.0, 1.0, &mut m), WgStatus::Ok);
        assert_eq!(wg_region_new(1.0, &mut r), WgStatus::Ok);
        assert_eq!(wg_region_add_strip(r, 1, 0.3, 0.1, 0.2), WgStatus::Ok);
        let mut v = 0.0;
        assert_eq!(wg_t_gcc(m, r, 2.0, 1e-2, 8, 8, &mut v), WgStatus::Ok);
        assert_eq!(v, f64::INFINITY);
        wg_region_free(r);
        wg_manifold_free(m);
    }
}

#[test]
fn gramian_roundtrip_and_eigenvalue() {
    unsafe {
        let (m, r) = disk();
        let mut g = ptr::null_mut();
        assert_eq!(wg_gramian_assemble(m, r, 2, 0.0, 0.8, 1e-6, &mut g), WgStatus::Ok);
        let n = wg_gramian_dim(g);
        assert_eq!(n, 50);
        let mut buf = vec![0.0; 2 * n * n];
        assert_eq!(wg_gramian_entries(g, buf.as_mut_ptr(), buf.len()), WgStatus::Ok);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (2 * (j * n + i), 2 * (i * n + j));
                assert!((buf[a] - buf[b]).abs() < 1e-12 && (buf[a + 1] + buf[b + 1]).abs() < 1e-12);
            }
        }
        assert_eq!(wg_gramian_entries(g, buf.as_mut_ptr(), 3), WgStatus::InvalidInput);
        let mut lo = 0.0;
        let mut shell = 0.0;
        assert_eq!(wg_gramian_min_eig(g, -1.0, &mut lo), WgStatus::Ok);
        assert_eq!(wg_gramian_min_eig(g, 40.0, &mut shell), WgStatus::Ok);
        assert!(lo > 0.0 && shell >= lo);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("g.bin").to_str().unwrap()).unwrap();
        assert_eq!(wg_gramian_save(g, path.as_ptr()), WgStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(wg_gramian_load(path.as_ptr(), &mut h), WgStatus::Ok);
        let mut buf2 = vec![0.0; 2 * n * n];
        assert_eq!(wg_gramian_entries(h, buf2.as_mut_ptr(), buf2.len()), WgStatus::Ok);
        assert_eq!(buf, buf2);
        wg_gramian_free(h);
        wg_gramian_free(g);
        wg_region_free(r);
        wg_manifold_free(m);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(wg_manifold_flat_torus(-1.0, 1.0, &mut m), WgStatus::InvalidInput);
        assert!(m.is_null());
        assert!(last_error().contains("positive"));
        assert_eq!(wg_manifold_flat_torus(1.0, 1.0, ptr::null_mut()), WgStatus::NullPointer);

        let mut r = ptr::null_mut();
        assert_eq!(wg_region_new(0.0, &mut r), WgStatus::InvalidRegion);
        assert_eq!(wg_region_new(1.0, &mut r), WgStatus::Ok);
        assert!(wg_last_error().is_null());
        assert_eq!(wg_manifold_round_sphere(&mut m), WgStatus::Ok);
        let mut v = 0.0;
        // no components yet
        assert_eq!(wg_region_evaluate(m, r, 0.1, 0.1, &mut v), WgStatus::InvalidRegion);
        assert_eq!(wg_region_add_strip(r, 1, 0.0, 0.1, 0.2), WgStatus::Ok);
        // strips need a torus
        assert_eq!(wg_region_evaluate(m, r, 0.1, 0.1, &mut v), WgStatus::InvalidRegion);
        let mut g = ptr::null_mut();
        assert_ne!(wg_gramian_assemble(m, r, 2, 0.0, 1.0, 1e-6, &mut g), WgStatus::Ok);
        assert!(g.is_null());
        assert_eq!(wg_gramian_dim(ptr::null()), 0);
        wg_gramian_free(ptr::null_mut());
        wg_region_free(r);
        wg_manifold_free(m);

        let bogus = CString::new("/nonexistent/g.bin").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(wg_gramian_load(bogus.as_ptr(), &mut h), WgStatus::Io);
    }
}

#[test]
fn runs_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "experiment = \"kofT-scan\"\n[solver]\nn_time = 2\nnx = 4\nna = 4\n").unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let o = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut passed = 0;
    assert_eq!(unsafe { wg_run_config(c.as_ptr(), o.as_ptr(), &mut passed) }, WgStatus::Ok);
    assert_eq!(passed, 1);
    assert!(dir.path().join("out/kofT.csv").exists());
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/wavegcc.h")).unwrap();
    for name in [
        "wg_last_error",
        "wg_manifold_flat_torus",
        "wg_region_add_hole",
        "wg_gramian_assemble",
        "wg_run_config",
        "WG_STATUS_NULL_POINTER",
        "typedef struct WgGramian WgGramian",
    ] {
        assert!(h.contains(name), "{name}");
    }
}
