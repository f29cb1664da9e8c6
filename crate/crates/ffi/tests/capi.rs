//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers and status codes.

use std::ffi::{CStr, CString};

use dcopf_ffi::*;

fn case39_path() -> CString {
    CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case39.m")).unwrap()
}

#[test]
fn parse_counts_and_free() {
    unsafe {
        let mut case: *mut DcopfCase = std::ptr::null_mut();
        let st = dcopf_case_parse_file(case39_path().as_ptr(), &mut case);
        assert_eq!(st, DcopfStatusCode::Ok);
        let (mut b, mut l, mut g) = (0usize, 0usize, 0usize);
        assert_eq!(dcopf_case_counts(case, &mut b, &mut l, &mut g), DcopfStatusCode::Ok);
        assert_eq!((b, l, g), (39, 46, 10));
        let json = dcopf_case_to_json(case);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap();
        assert!(text.contains("\"base_mva\""));
        dcopf_string_free(json);
        dcopf_case_free(case);
    }
}

#[test]
fn parse_error_sets_message_and_code() {
    unsafe {
        let bad = CString::new("mpc.baseMVA = 100;").unwrap();
        let mut case: *mut DcopfCase = std::ptr::null_mut();
        let st = dcopf_case_parse(bad.as_ptr(), &mut case);
        assert_eq!(st, DcopfStatusCode::ParseError);
        let err = dcopf_last_error();
        assert!(!err.is_null());
        let msg = CStr::from_ptr(err).to_str().unwrap().to_string();
        assert!(msg.contains("bus"), "{msg}");
        dcopf_string_free(err);
    }
}

#[test]
fn null_arguments_rejected() {
    unsafe {
        assert_eq!(
            dcopf_case_parse(std::ptr::null(), std::ptr::null_mut()),
            DcopfStatusCode::InvalidArgument
        );
        assert_eq!(
            dcopf_dispatch_generation(std::ptr::null(), 0, std::ptr::null_mut(), 0),
            DcopfStatusCode::InvalidArgument
        );
    }
}

#[test]
fn solve_all_three_formulations_agree() {
    unsafe {
        let mut case: *mut DcopfCase = std::ptr::null_mut();
        assert_eq!(
            dcopf_case_parse_file(case39_path().as_ptr(), &mut case),
            DcopfStatusCode::Ok
        );
        let mut objectives = Vec::new();
        for kind in [
            DcopfFormulation::Ptdf,
            DcopfFormulation::PureTheta,
            DcopfFormulation::Mixed,
        ] {
            let mut d: *mut DcopfDispatch = std::ptr::null_mut();
            let st = dcopf_solve(case, kind, std::ptr::null(), &mut d);
            assert_eq!(st, DcopfStatusCode::Ok, "{kind:?}");
            assert_eq!(dcopf_dispatch_periods(d), 1);
            let n_gen = dcopf_dispatch_generators(d);
            assert_eq!(n_gen, 10);
            let mut pg = vec![0.0f64; n_gen];
            assert_eq!(
                dcopf_dispatch_generation(d, 0, pg.as_mut_ptr(), pg.len()),
                DcopfStatusCode::Ok
            );
            let total: f64 = pg.iter().sum();
            assert!((total - 6254.23).abs() < 1e-3, "dispatch sums to load, got {total}");
            let n_br = dcopf_dispatch_branches(d);
            let mut flows = vec![0.0f64; n_br];
            assert_eq!(
                dcopf_dispatch_flows(d, 0, flows.as_mut_ptr(), flows.len()),
                DcopfStatusCode::Ok
            );
            objectives.push(dcopf_dispatch_objective(d));
            dcopf_dispatch_free(d);
        }
        for w in objectives.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-6 * (1.0 + w[0].abs()));
        }
        dcopf_case_free(case);
    }
}

#[test]
fn sparsity_summary_matches_known_counts() {
    unsafe {
        let mut case: *mut DcopfCase = std::ptr::null_mut();
        assert_eq!(
            dcopf_case_parse_file(case39_path().as_ptr(), &mut case),
            DcopfStatusCode::Ok
        );
        let mut s = DcopfSparsity {
            n_vars: 0,
            n_cons: 0,
            nnz_a: 0,
            density_a: 0.0,
            nnz_aat_lower: 0,
            factor_ops: 0,
        };
        assert_eq!(
            dcopf_sparsity(case, DcopfFormulation::Ptdf, true, &mut s),
            DcopfStatusCode::Ok
        );
        assert_eq!((s.n_vars, s.n_cons), (10, 112));
        assert!(s.factor_ops > 0);
        dcopf_case_free(case);
    }
}

#[test]
fn header_is_generated_with_exports() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dcopf.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header exists");
    for symbol in [
        "dcopf_case_parse",
        "dcopf_solve",
        "dcopf_dispatch_objective",
        "dcopf_sparsity",
        "DcopfStatusCode",
        "DcopfFormulation",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
}
