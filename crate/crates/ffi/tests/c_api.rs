use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mis_portfolio_ffi::*;

fn last_error() -> String {
    let p = mp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cycle5() -> *mut MpGraph {
    let edges: [usize; 10] = [0, 1, 1, 2, 2, 3, 3, 4, 4, 0];
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_from_edges(5, edges.as_ptr(), 5, &mut g) }, MpStatus::Ok);
    g
}

#[test]
fn exact_and_greedy_on_a_five_cycle() {
    let g = cycle5();
    unsafe {
        assert_eq!(mp_graph_n_nodes(g), 5);
        assert_eq!(mp_graph_n_edges(g), 5);
        for solver in [MpSolver::Exact, MpSolver::Greedy, MpSolver::Sb] {
            let mut s = ptr::null_mut();
            assert_eq!(mp_solve(g, solver, ptr::null(), &mut s), MpStatus::Ok);
            assert_eq!(mp_solution_size(s), 2, "{solver:?}");
            assert!(mp_solution_feasible(s));
            let mut buf = [usize::MAX; 8];
            let mut n = 0;
            assert_eq!(mp_solution_nodes(s, buf.as_mut_ptr(), buf.len(), &mut n), MpStatus::Ok);
            assert_eq!(n, 2);
            assert!(!(buf[0] + 1 == buf[1] || (buf[0] == 0 && buf[1] == 4)));
            let json = mp_solution_to_json(s);
            let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
            mp_string_free(json);
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["size"], 2);
            mp_solution_free(s);
        }
        mp_graph_free(g);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad: [usize; 2] = [0, 7];
        assert_eq!(mp_graph_from_edges(3, bad.as_ptr(), 1, &mut g), MpStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains('7'));

        let mut s = ptr::null_mut();
        assert_eq!(mp_solve(ptr::null(), MpSolver::Greedy, ptr::null(), &mut s), MpStatus::NullPointer);
        assert!(last_error().contains("graph"));

        let path = CString::new("/definitely/not/here.csv").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(mp_panel_load(path.as_ptr(), &mut p), MpStatus::Io);
        assert!(last_error().contains("/definitely/not/here.csv"));

        let mut d = 0.0;
        let lone = {
            let mut h = ptr::null_mut();
            assert_eq!(mp_graph_from_edges(1, ptr::null(), 0, &mut h), MpStatus::Ok);
            h
        };
        assert_eq!(mp_graph_density(lone, &mut d), MpStatus::Numerical);
        mp_graph_free(lone);
    }
}

#[test]
fn exact_size_limit_is_reported() {
    unsafe {
        let mut panel = ptr::null_mut();
        assert_eq!(mp_panel_synth(80, 300, 2, 3, &mut panel), MpStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(mp_graph_build(panel, 1.1, 200, &mut g), MpStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(mp_solve(g, MpSolver::Exact, ptr::null(), &mut s), MpStatus::SizeLimit);
        mp_graph_free(g);
        mp_panel_free(panel);
    }
}

#[test]
fn backtest_round_trip() {
    unsafe {
        let mut panel = ptr::null_mut();
        assert_eq!(mp_panel_synth(12, 1100, 3, 11, &mut panel), MpStatus::Ok);
        assert_eq!(mp_panel_n_tickers(panel), 12);
        assert_eq!(mp_panel_n_dates(panel), 1100);
        let mut cfg = mp_backtest_config_default();
        cfg.solver = MpSolver::Exact;
        cfg.theta = 0.6;
        cfg.lookback_days = 250;
        let mut report = ptr::null_mut();
        assert_eq!(mp_backtest_run(panel, &cfg, &mut report), MpStatus::Ok, "{}", last_error());
        assert!(mp_report_n_months(report) > 12);
        let (mut r, mut risk, mut sharpe) = (0.0, 0.0, 0.0);
        assert_eq!(mp_report_summary(report, &mut r, &mut risk, &mut sharpe), MpStatus::Ok);
        assert!(risk > 0.0);
        assert!((sharpe - r / risk).abs() < 1e-12);
        let json = mp_report_to_json(report);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        mp_string_free(json);
        assert_eq!(v["months"].as_array().unwrap().len(), mp_report_n_months(report));
        mp_report_free(report);
        mp_panel_free(panel);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        mp_panel_free(ptr::null_mut());
        mp_graph_free(ptr::null_mut());
        mp_solution_free(ptr::null_mut());
        mp_report_free(ptr::null_mut());
        mp_string_free(ptr::null_mut());
        assert!(mp_solution_to_json(ptr::null()).is_null());
    }
}

#[test]
fn sb_params_pass_through() {
    let mut p = mp_sb_params_default();
    assert_eq!((p.n_steps, p.dt, p.eta, p.restarts), (1000, 0.2, 0.2, 10));
    p.n_steps = 0;
    let g = cycle5();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(mp_solve(g, MpSolver::Sb, &p, &mut s), MpStatus::InvalidArgument);
        mp_graph_free(g);
    }
}

#[test]
fn header_compiles_as_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/mis_portfolio.h");
    assert!(header.is_file(), "header not generated");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "mis_portfolio.h"
int run(void) {
    MpGraph *g = NULL;
    size_t edges[4] = {0, 1, 1, 2};
    if (mp_graph_from_edges(3, edges, 2, &g) != MP_STATUS_OK) return 1;
    MpSbParams p = mp_sb_params_default();
    MpSolution *s = NULL;
    MpStatus st = mp_solve(g, MP_SOLVER_SB, &p, &s);
    char *json = mp_solution_to_json(s);
    mp_string_free(json);
    mp_solution_free(s);
    mp_graph_free(g);
    return st == MP_STATUS_OK ? 0 : (int)st;
}
"#,
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.path().join("use.o"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}): {e}");
            return;
        }
    };
    assert!(status.success());
}
