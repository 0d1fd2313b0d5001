use std::ffi::{CStr, CString};
use std::ptr;

use alm_svm_ffi::*;

fn last_error() -> String {
    let p = alm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn params(task: i32) -> AlmParams {
    let mut p = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { alm_params_default(task, p.as_mut_ptr()) }, AlmStatus::Ok);
    unsafe { p.assume_init() }
}

/// Four points on a line, labels 0 and 1.
fn toy() -> *mut AlmDataset {
    let x = [2.0, 0.5, 1.0, 0.0, -1.0, 0.0, -2.0, -0.5];
    let y = [1.0, 1.0, 0.0, 0.0];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { alm_dataset_from_dense(x.as_ptr(), y.as_ptr(), 4, 2, &mut out) }, AlmStatus::Ok);
    out
}

#[test]
fn defaults_follow_task() {
    let svc = params(ALM_TASK_SVC);
    let svr = params(ALM_TASK_SVR);
    assert_eq!((svc.sigma0, svr.sigma0), (0.15, 0.1));
    assert_eq!((svc.sigma_max, svc.theta, svc.max_outer, svc.tol), (2.0, 0.8, 10, 1e-6));
    assert_eq!(svc.c, 0.0);
    assert!(!svc.bias);
}

#[test]
fn train_predict_save_load() {
    let data = toy();
    assert_eq!(unsafe { (alm_dataset_rows(data), alm_dataset_cols(data)) }, (4, 2));
    let mut p = params(ALM_TASK_SVC);
    p.c = 10.0;
    p.bias = true;
    let mut model = ptr::null_mut();
    let mut report = AlmReport::default();
    assert_eq!(unsafe { alm_train(data, &p, &mut model, &mut report) }, AlmStatus::Ok);
    assert!(report.outer_iterations >= 1 && report.newton_iterations >= 1);
    assert!(report.objective.is_finite());

    let mut pred = [9.0; 4];
    assert_eq!(unsafe { alm_model_predict(model, data, pred.as_mut_ptr(), 4) }, AlmStatus::Ok);
    assert_eq!(pred, [1.0, 1.0, 0.0, 0.0]);
    let mut acc = 0.0;
    assert_eq!(unsafe { alm_model_evaluate(model, data, &mut acc) }, AlmStatus::Ok);
    assert_eq!(acc, 100.0);
    let mut one = 0.0;
    let x = [3.0, 0.0];
    assert_eq!(unsafe { alm_model_predict_dense(model, x.as_ptr(), 2, &mut one) }, AlmStatus::Ok);
    assert_eq!(one, 1.0);

    let n = unsafe { alm_model_num_weights(model) };
    assert_eq!(n, 3);
    let mut w = vec![0.0; n];
    assert_eq!(unsafe { alm_model_weights(model, w.as_mut_ptr(), n) }, AlmStatus::Ok);
    assert_eq!(unsafe { alm_model_weights(model, w.as_mut_ptr(), 2) }, AlmStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.txt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { alm_model_save(model, path.as_ptr()) }, AlmStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { alm_model_load(path.as_ptr(), &mut loaded) }, AlmStatus::Ok);
    let mut w2 = vec![0.0; n];
    assert_eq!(unsafe { alm_model_weights(loaded, w2.as_mut_ptr(), n) }, AlmStatus::Ok);
    assert_eq!(w, w2);

    unsafe {
        alm_model_free(loaded);
        alm_model_free(model);
        alm_dataset_free(data);
    }
}

#[test]
fn regression_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("reg.libsvm");
    std::fs::write(&file, "2 1:1\n4 1:2\n-2 1:-1\n6 1:3\n").unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { alm_dataset_load(path.as_ptr(), &mut data) }, AlmStatus::Ok);
    let mut p = params(ALM_TASK_SVR);
    p.c = 10.0;
    p.epsilon = 0.0;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { alm_train(data, &p, &mut model, ptr::null_mut()) }, AlmStatus::Ok);
    let mut err = f64::NAN;
    assert_eq!(unsafe { alm_model_evaluate(model, data, &mut err) }, AlmStatus::Ok);
    assert!(err < 0.1, "{err}");
    unsafe {
        alm_model_free(model);
        alm_dataset_free(data);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut data = ptr::null_mut();
    let missing = CString::new("/nonexistent/file.libsvm").unwrap();
    assert_eq!(unsafe { alm_dataset_load(missing.as_ptr(), &mut data) }, AlmStatus::Io);
    assert!(last_error().contains("/nonexistent/file.libsvm"));
    assert_eq!(unsafe { alm_dataset_load(ptr::null(), &mut data) }, AlmStatus::NullPointer);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.libsvm");
    std::fs::write(&bad, "1 0:1\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { alm_dataset_load(bad.as_ptr(), &mut data) }, AlmStatus::Parse);

    let toy = toy();
    let mut model = ptr::null_mut();
    let mut p = params(ALM_TASK_SVC);
    p.c = -1.0;
    assert_eq!(unsafe { alm_train(toy, &p, &mut model, ptr::null_mut()) }, AlmStatus::InvalidArgument);
    assert!(last_error().contains("C must be positive"));
    p.c = 1.0;
    p.theta = 0.0;
    assert_eq!(unsafe { alm_train(toy, &p, &mut model, ptr::null_mut()) }, AlmStatus::InvalidArgument);
    p = params(ALM_TASK_SVC);
    p.task = 5;
    assert_eq!(unsafe { alm_train(toy, &p, &mut model, ptr::null_mut()) }, AlmStatus::InvalidArgument);
    assert_eq!(unsafe { alm_train(ptr::null(), &p, &mut model, ptr::null_mut()) }, AlmStatus::NullPointer);
    assert!(model.is_null());

    let x = [1.0, 2.0, 3.0];
    let y = [0.0, 1.0, 2.0];
    let mut multi = ptr::null_mut();
    assert_eq!(unsafe { alm_dataset_from_dense(x.as_ptr(), y.as_ptr(), 3, 1, &mut multi) }, AlmStatus::Ok);
    let p = params(ALM_TASK_SVC);
    assert_eq!(unsafe { alm_train(multi, &p, &mut model, ptr::null_mut()) }, AlmStatus::InvalidArgument);
    assert!(last_error().contains("3 distinct labels"));

    let nan = [f64::NAN];
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { alm_dataset_from_dense(nan.as_ptr(), y.as_ptr(), 1, 1, &mut d) }, AlmStatus::InvalidArgument);

    unsafe {
        alm_dataset_free(multi);
        alm_dataset_free(toy);
        alm_dataset_free(ptr::null_mut());
        alm_model_free(ptr::null_mut());
        assert_eq!(alm_dataset_rows(ptr::null()), 0);
        assert_eq!(alm_model_num_weights(ptr::null()), 0);
    }
}
