use std::ffi::{c_char, CStr, CString};
use std::ptr;

use hybridfp_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 1024];
    unsafe { hfp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn write_config(dir: &std::path::Path, text: &str) -> CString {
    let path = dir.join("s.cfg");
    std::fs::write(&path, text).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

const SMALL: &str = "[mode1]\nn_a = 51\nn_b = 51\n[mode2]\nn_c = 51\n[run]\nT = 0.5\nn_steps = 200\nsnapshot_stride = 100\n";

#[test]
fn step_through_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), SMALL);
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(hfp_scenario_load(path.as_ptr(), &mut sc), HfpStatus::Ok);
        assert_eq!(hfp_scenario_n_modes(sc), 2);
        let (mut n1, mut n2) = (0usize, 0usize);
        assert_eq!(hfp_scenario_n_cells(sc, 0, &mut n1), HfpStatus::Ok);
        assert_eq!(hfp_scenario_n_cells(sc, 1, &mut n2), HfpStatus::Ok);
        assert_eq!((n1, n2), (51 * 51, 51));
        let (mut dt, mut steps) = (0.0, 0usize);
        assert_eq!(hfp_scenario_time_grid(sc, &mut dt, &mut steps), HfpStatus::Ok);
        assert_eq!((dt, steps), (0.0025, 200));

        let mut solver = ptr::null_mut();
        assert_eq!(hfp_solver_new(sc, &mut solver), HfpStatus::Ok);
        hfp_scenario_free(sc);

        let mut taken = 0;
        assert_eq!(hfp_solver_step(solver, 150, &mut taken), HfpStatus::Ok);
        assert_eq!(taken, 150);
        assert!(!hfp_solver_is_finished(solver));
        assert_eq!(hfp_solver_step(solver, 1000, &mut taken), HfpStatus::Ok);
        assert_eq!(taken, 50);
        assert!(hfp_solver_is_finished(solver));

        let mut t = 0.0;
        assert_eq!(hfp_solver_time(solver, &mut t), HfpStatus::Ok);
        assert!((t - 0.5).abs() < 1e-12);

        let mut masses = [0.0; 2];
        for (k, m) in masses.iter_mut().enumerate() {
            assert_eq!(hfp_solver_mode_mass(solver, k, m), HfpStatus::Ok);
        }
        assert!((masses[0] + masses[1] - 1.0).abs() < 1e-12);
        assert!(masses[1] > 0.0);

        let mut field = vec![0.0; n2];
        assert_eq!(hfp_solver_copy_density(solver, 1, field.as_mut_ptr(), n2), HfpStatus::Ok);
        let m2: f64 = field.iter().sum::<f64>() / 51.0;
        assert!((m2 - masses[1]).abs() < 1e-12);

        assert_eq!(hfp_solver_copy_density(solver, 1, field.as_mut_ptr(), n2 - 1), HfpStatus::InvalidArgument);
        assert!(last_error().contains("51 cells"));
        assert_eq!(hfp_solver_mode_mass(solver, 2, &mut t), HfpStatus::InvalidArgument);
        hfp_solver_free(solver);
    }
}

#[test]
fn error_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(hfp_scenario_load(ptr::null(), &mut sc), HfpStatus::NullPointer);
        assert!(sc.is_null());

        let missing = CString::new("/nonexistent/x.cfg").unwrap();
        assert_eq!(hfp_scenario_load(missing.as_ptr(), &mut sc), HfpStatus::Io);
        assert!(last_error().contains("/nonexistent/x.cfg"));

        let cfl = write_config(dir.path(), "[run]\nn_steps = 100\n");
        assert_eq!(hfp_scenario_load(cfl.as_ptr(), &mut sc), HfpStatus::Validation);
        assert!(!last_error().is_empty());

        let bad = write_config(dir.path(), "[mode1]\nnope = 1\n");
        assert_eq!(hfp_scenario_load(bad.as_ptr(), &mut sc), HfpStatus::Validation);
        assert!(last_error().contains("s.cfg:2:"), "{}", last_error());

        let mut t = 0.0;
        assert_eq!(hfp_solver_time(ptr::null(), &mut t), HfpStatus::NullPointer);
        assert_eq!(hfp_scenario_n_modes(ptr::null()), 0);
        hfp_scenario_free(ptr::null_mut());
        hfp_solver_free(ptr::null_mut());

        assert_eq!(hfp_scenario_default(&mut sc), HfpStatus::Ok);
        assert_eq!(last_error(), "");
        let mut steps = 0;
        assert_eq!(hfp_scenario_time_grid(sc, &mut t, &mut steps), HfpStatus::Ok);
        assert_eq!(steps, 20000);
        hfp_scenario_free(sc);
    }
}

#[test]
fn outputs_written_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), SMALL);
    let pde = CString::new(dir.path().join("pde").to_str().unwrap()).unwrap();
    let mc = CString::new(dir.path().join("mc").to_str().unwrap()).unwrap();
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(hfp_scenario_load(path.as_ptr(), &mut sc), HfpStatus::Ok);
        assert_eq!(hfp_run_to_dir(sc, pde.as_ptr()), HfpStatus::Ok);
        assert_eq!(hfp_mc_to_dir(sc, 1000, 4, mc.as_ptr()), HfpStatus::Ok);
        assert_eq!(hfp_mc_to_dir(sc, 0, 4, mc.as_ptr()), HfpStatus::Validation);
        hfp_scenario_free(sc);
    }
    assert!(dir.path().join("pde/mass_pde.csv").exists());
    assert!(dir.path().join("pde/snap_pde_mode2_step000200.csv").exists());
    assert!(dir.path().join("mc/mass_mc.csv").exists());
}
