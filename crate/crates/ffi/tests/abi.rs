use std::ffi::{CStr, CString};
use std::ptr;

use shapesr_ffi::*;

fn last_error() -> String {
    let p = shapesr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn parse(text: &str) -> *mut ShapesrExpr {
    let c = CString::new(text).unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(shapesr_expr_parse(c.as_ptr(), &mut e), ShapesrStatus::Ok);
    e
}

unsafe fn render(e: *const ShapesrExpr) -> String {
    let mut s = ptr::null_mut();
    assert_eq!(shapesr_expr_to_string(e, &mut s), ShapesrStatus::Ok);
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    shapesr_string_free(s);
    out
}

#[test]
fn parse_eval_and_print() {
    unsafe {
        let e = parse("(add (mul x0 x1) 3.0)");
        assert_eq!(render(e), "(add (mul x0 x1) 3.0)");
        let mut size = 0;
        assert_eq!(shapesr_expr_size(e, &mut size), ShapesrStatus::Ok);
        assert_eq!(size, 5);
        let mut y = 0.0;
        let x = [2.0, 5.0];
        assert_eq!(shapesr_expr_eval(e, x.as_ptr(), 2, &mut y), ShapesrStatus::Ok);
        assert_eq!(y, 13.0);
        assert_eq!(shapesr_expr_eval(e, x.as_ptr(), 1, &mut y), ShapesrStatus::InvalidArgument);
        shapesr_expr_free(e);
    }
}

#[test]
fn parse_errors_set_message() {
    unsafe {
        let c = CString::new("(frobnicate x0)").unwrap();
        let mut e = ptr::null_mut();
        assert_eq!(shapesr_expr_parse(c.as_ptr(), &mut e), ShapesrStatus::Parse);
        assert!(e.is_null());
        assert!(last_error().contains("frobnicate"), "{}", last_error());
        assert_eq!(shapesr_expr_parse(ptr::null(), &mut e), ShapesrStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(shapesr_expr_parse(bad.as_ptr().cast(), &mut e), ShapesrStatus::InvalidUtf8);
    }
}

#[test]
fn derivative_and_interval() {
    unsafe {
        let e = parse("(mul x0 x0)");
        let mut d = ptr::null_mut();
        assert_eq!(shapesr_expr_derivative(e, 0, &mut d), ShapesrStatus::Ok);
        let mut v = 0.0;
        assert_eq!(shapesr_expr_eval(d, [3.0].as_ptr(), 1, &mut v), ShapesrStatus::Ok);
        assert_eq!(v, 6.0);

        let (mut lo, mut hi) = (0.0, 0.0);
        let st = shapesr_expr_eval_interval(d, [1.0].as_ptr(), [2.0].as_ptr(), 1, &mut lo, &mut hi);
        assert_eq!(st, ShapesrStatus::Ok);
        assert!(lo <= 2.0 && hi >= 4.0 && lo > 1.99 && hi < 4.01);

        let l = parse("(log x0)");
        let st = shapesr_expr_eval_interval(l, [-2.0].as_ptr(), [-1.0].as_ptr(), 1, &mut lo, &mut hi);
        assert_eq!(st, ShapesrStatus::Ok);
        assert!(lo.is_nan() && hi.is_nan());

        let mut s = ptr::null_mut();
        let z = parse("(add x0 0.0)");
        assert_eq!(shapesr_expr_simplify(z, &mut s), ShapesrStatus::Ok);
        assert_eq!(render(s), "x0");
        for h in [e, d, l, z, s] {
            shapesr_expr_free(h);
        }
    }
}

#[test]
fn nmse_convention() {
    unsafe {
        let y = [1.0, 2.0, 3.0, 4.0];
        let mean = [2.5; 4];
        let mut v = 0.0;
        assert_eq!(shapesr_nmse(y.as_ptr(), mean.as_ptr(), 4, &mut v), ShapesrStatus::Ok);
        assert!((v - 100.0).abs() < 1e-12);
        assert_eq!(shapesr_nmse(y.as_ptr(), y.as_ptr(), 4, &mut v), ShapesrStatus::Ok);
        assert_eq!(v, 0.0);
        let flat = [1.0; 4];
        assert_eq!(shapesr_nmse(flat.as_ptr(), y.as_ptr(), 4, &mut v), ShapesrStatus::InvalidArgument);
    }
}

#[test]
fn catalog_instance_dataset() {
    unsafe {
        assert_eq!(shapesr_catalog_len(), 10);
        let mut name = ptr::null_mut();
        assert_eq!(shapesr_catalog_name(9, &mut name), ShapesrStatus::Ok);
        assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "Pagie-1");
        shapesr_string_free(name);
        assert_eq!(shapesr_catalog_name(10, &mut name), ShapesrStatus::InvalidArgument);

        let c = CString::new("i.9.18").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(shapesr_instance_get(c.as_ptr(), &mut inst), ShapesrStatus::Ok);
        let (mut arity, mut m) = (0, 0);
        shapesr_instance_arity(inst, &mut arity);
        shapesr_instance_num_objectives(inst, &mut m);
        assert_eq!((arity, m), (9, 11));
        shapesr_instance_free(inst);

        let c = CString::new("nope").unwrap();
        assert_eq!(shapesr_instance_get(c.as_ptr(), &mut inst), ShapesrStatus::UnknownInstance);

        let c = CString::new("I.6.20").unwrap();
        assert_eq!(shapesr_instance_get(c.as_ptr(), &mut inst), ShapesrStatus::Ok);
        let mut data = ptr::null_mut();
        assert_eq!(shapesr_dataset_generate(inst, 1, &mut data), ShapesrStatus::Ok);
        let mut rows = 0;
        shapesr_dataset_rows(data, ShapesrSplit::Train, &mut rows);
        assert_eq!(rows, 240);
        let mut x = vec![0.0; rows * 2];
        let mut y = vec![0.0; rows];
        assert_eq!(
            shapesr_dataset_copy(data, ShapesrSplit::Train, x.as_mut_ptr(), y.as_mut_ptr(), rows - 1),
            ShapesrStatus::BufferTooSmall
        );
        assert_eq!(
            shapesr_dataset_copy(data, ShapesrSplit::Train, x.as_mut_ptr(), y.as_mut_ptr(), rows),
            ShapesrStatus::Ok
        );

        let mut truth = ptr::null_mut();
        assert_eq!(shapesr_instance_ground_truth(inst, &mut truth), ShapesrStatus::Ok);
        for k in 0..rows {
            let mut v = 0.0;
            shapesr_expr_eval(truth, x[2 * k..].as_ptr(), 2, &mut v);
            assert!((v - y[k]).abs() <= 1e-12 * y[k].abs().max(1.0));
        }

        let mut objectives = [f64::NAN; 3];
        let mut written = 0;
        let st = shapesr_evaluate(truth, inst, data, objectives.as_mut_ptr(), 3, &mut written);
        assert_eq!(st, ShapesrStatus::Ok);
        assert_eq!(written, 3);
        assert!(objectives[0] < 1e-20);
        assert_eq!(&objectives[1..], &[0.0, 0.0]);
        assert_eq!(
            shapesr_evaluate(truth, inst, data, objectives.as_mut_ptr(), 2, &mut written),
            ShapesrStatus::BufferTooSmall
        );

        shapesr_expr_free(truth);
        shapesr_dataset_free(data);
        shapesr_instance_free(inst);
    }
}

#[test]
fn small_run() {
    unsafe {
        let c = CString::new("I.6.20").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(shapesr_instance_get(c.as_ptr(), &mut inst), ShapesrStatus::Ok);
        let mut result = ptr::null_mut();
        let st = shapesr_run(inst, ShapesrAlgorithm::Nsga3, 3, 50, 1000, 1, &mut result);
        assert_eq!(st, ShapesrStatus::Ok);
        let (mut feasible, mut evals, mut secs) = (false, 0, 0.0);
        shapesr_run_result_stats(result, &mut feasible, &mut evals, &mut secs);
        assert!(evals >= 1000 && secs >= 0.0);
        let (mut train, mut test) = (0.0, 0.0);
        shapesr_run_result_nmse(result, &mut train, &mut test);
        assert!(train.is_finite() && test.is_finite());
        let mut pen = [0.0; 4];
        let mut n = 0;
        assert_eq!(shapesr_run_result_penalties(result, pen.as_mut_ptr(), 4, &mut n), ShapesrStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(feasible, pen[..n].iter().all(|p| *p == 0.0));
        let mut model = ptr::null_mut();
        assert_eq!(shapesr_run_result_model(result, &mut model), ShapesrStatus::Ok);
        assert!(!render(model).is_empty());
        shapesr_expr_free(model);
        shapesr_run_result_free(result);

        assert_eq!(shapesr_run(inst, ShapesrAlgorithm::Nsga2, 0, 1, 10, 1, &mut result), ShapesrStatus::RunFailed);
        shapesr_instance_free(inst);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut n = 0;
        assert_eq!(shapesr_expr_size(ptr::null(), &mut n), ShapesrStatus::NullPointer);
        assert_eq!(shapesr_instance_arity(ptr::null(), &mut n), ShapesrStatus::NullPointer);
        shapesr_expr_free(ptr::null_mut());
        shapesr_string_free(ptr::null_mut());
    }
}
