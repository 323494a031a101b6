use std::path::{Path, PathBuf};

use sil_core::harness::{rows_from_table, rows_to_table, run_experiment, ExperimentConfig, NormRow};
use sil_core::report::{emit_report, parse_table};
use sil_core::SilError;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sil-harness-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text, Path::new(".")).unwrap()
}

const SMALL_SWEEP: &str = "experiment = converge\npotential = quartic\neps = 0.16, 0.13, 0.1\n\
                           grids = 128, 128, 128\nt_end = 0.002\nsamples = 2\nt_search = 0\n";

#[test]
fn identical_configs_give_identical_outputs() {
    let cfg = config(SMALL_SWEEP);
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let ra = run_experiment(&cfg).unwrap();
    let rb = run_experiment(&cfg).unwrap();
    assert_eq!(ra.run_id, rb.run_id);
    let fa = emit_report(&[ra], &a).unwrap();
    emit_report(&[rb], &b).unwrap();
    for f in fa {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name:?}");
    }
    let csv = std::fs::read_to_string(a.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("eps,sup_l2,grad_off,grad_tau,eps_grad_n,runtime_s"));
}

#[test]
fn report_merges_and_refits_over_the_union() {
    let dir = scratch("merge");
    let row = |eps: f64| NormRow {
        eps,
        sup_l2: eps.powi(3),
        grad_off: eps.powi(2),
        grad_tau: eps.powi(3),
        eps_grad_n: eps.powi(2),
        runtime_s: 0.0,
    };
    std::fs::write(dir.join("a.csv"), rows_to_table("a", &[row(0.12), row(0.085)]).to_csv()).unwrap();
    std::fs::write(dir.join("b.csv"), rows_to_table("b", &[row(0.085), row(0.06)]).to_csv()).unwrap();
    let mut reports = Vec::new();
    for inputs in ["a.csv, b.csv", "b.csv, a.csv"] {
        let cfg = ExperimentConfig::parse(&format!("experiment = report\ninputs = {inputs}\n"), &dir).unwrap();
        reports.push(run_experiment(&cfg).unwrap());
    }
    let (r, s) = (&reports[0], &reports[1]);
    assert!(r.pass, "{:?}", r.failures());
    assert!((r.fitted_orders["sup_l2"] - 3.0).abs() < 1e-12);
    assert_eq!(r.fitted_orders, s.fitted_orders);
    let merged = rows_from_table(&r.tables[0]).unwrap();
    assert_eq!(merged.iter().map(|m| m.eps).collect::<Vec<_>>(), vec![0.12, 0.085, 0.06]);
    let out = scratch("merge-out");
    emit_report(std::slice::from_ref(r), &out).unwrap();
    let text = std::fs::read_to_string(out.join("merged.csv")).unwrap();
    assert_eq!(rows_from_table(&parse_table("merged", &text).unwrap()).unwrap(), merged);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["experiment", "pass", "fitted_orders", "thresholds", "run_id"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let unresolved = config("experiment = converge\neps = 0.12, 0.085, 0.06\ngrids = 64, 64, 64\n");
    assert!(matches!(run_experiment(&unresolved), Err(SilError::UnresolvedInterface { .. })));
    let increasing = config("experiment = converge\neps = 0.06, 0.085, 0.12\n");
    assert!(matches!(run_experiment(&increasing), Err(SilError::InvalidInput(_))));
    let no_inputs = config("experiment = report\n");
    assert!(run_experiment(&no_inputs).is_err());
    assert!(emit_report(&[], &scratch("empty")).is_err());
    assert!(ExperimentConfig::parse("experiment = converge\nexperiment = profile\n", Path::new(".")).is_err());
}

/// A flat interface is stationary, so the approximate and computed
/// solutions should agree to solver precision in every norm.
#[test]
fn flat_interface_norms_vanish() {
    let cfg = config(
        "experiment = converge\npotential = quartic\nflat = true\neps = 0.12, 0.085, 0.06\n\
         grids = 256, 384, 512\norder = 2\ncontrol = false\n",
    );
    let r = run_experiment(&cfg).unwrap();
    let rows = rows_from_table(&r.tables[0]).unwrap();
    for row in &rows {
        println!("{row:?}");
        for v in [row.sup_l2, row.grad_off, row.grad_tau, row.eps_grad_n] {
            assert!(v <= 1e-8, "norm {v:e} at eps {}", row.eps);
        }
    }
}
