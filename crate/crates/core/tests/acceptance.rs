//! Acceptance battery: one criterion per test, one printed pass/fail line
//! each (run with `--nocapture` to see the lines as they pass).
//!
//! Empirical constants (lemma scans, probe maxima, the weak-(1,1) constant)
//! are pinned against the committed regression store; access to the store
//! is serialized through a process-local lock so concurrent tests cannot
//! drop each other's first-run recordings.

use std::sync::{Arc, Mutex, OnceLock};

use vilenkin_lab::group::{Radix, RadixSequence};
use vilenkin_lab::harness::{
    growth_experiment, kernel_agreement, run_suite, RegressionStatus, RegressionStore,
    SuiteConfig,
};
use vilenkin_lab::maximal::{probe_operator_norm, ProbeConfig, ProbeOperator, SubsequenceFamily};

fn store_lock() -> &'static Mutex<()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
}

fn criterion(name: &str, passed: bool, detail: &str) {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{name}: {detail}");
}

fn scratch_store() -> (tempfile::TempDir, RegressionStore) {
    let dir = tempfile::tempdir().unwrap();
    let store = RegressionStore::open(dir.path().join("constants.json")).unwrap();
    (dir, store)
}

/// Pin a value in the committed store under the lock; returns (ok, detail).
fn pin_committed(key: &str, value: f64) -> (bool, String) {
    let _guard = store_lock().lock().unwrap();
    let mut store = RegressionStore::open_default().unwrap();
    let outcome = store.check_float(key, value);
    store.save().unwrap();
    match outcome {
        RegressionStatus::Recorded => (true, format!("{key} recorded as {value}")),
        RegressionStatus::Matched(stored) => (true, format!("{key} = {value} matches {stored}")),
        RegressionStatus::Mismatch(stored) => {
            (false, format!("{key} = {value} but stored {stored}"))
        }
    }
}

fn suite_detail(report: &vilenkin_lab::harness::SuiteReport) -> String {
    report
        .checks
        .iter()
        .map(|c| format!("{}={}", c.name, if c.passed { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn criterion_01_orthonormality() {
    let (_dir, mut store) = scratch_store();
    let report = run_suite("system", &SuiteConfig::default(), &mut store).unwrap();
    criterion("orthonormality", report.passed, &suite_detail(&report));
}

#[test]
fn criterion_02_transform_oracle() {
    let (_dir, mut store) = scratch_store();
    let report = run_suite("transform", &SuiteConfig::default(), &mut store).unwrap();
    // one larger instance on top of the suite's 50 functions
    let radix = RadixSequence::walsh(10);
    let f = vilenkin_lab::CylinderFunction::from_fn(Arc::clone(&radix), 10, |x| {
        num_complex::Complex64::new(
            ((x.rank() as f64) * 0.37).sin(),
            ((x.rank() as f64) * 0.11).cos(),
        )
    })
    .unwrap();
    let fast = vilenkin_lab::forward(&f);
    let mut naive_gap = 0.0f64;
    for k in 0..f.cells() as u64 {
        naive_gap = naive_gap.max(
            (fast.coefficient(k) - vilenkin_lab::transform::fourier_coefficient(&f, k).unwrap())
                .norm(),
        );
    }
    let round_gap = vilenkin_lab::inverse(&fast).max_abs_diff(&f).unwrap();
    let passed = report.passed && naive_gap < 1e-10 && round_gap < 1e-10;
    criterion(
        "transform-oracle",
        passed,
        &format!(
            "{}; walsh-N10 naive gap {naive_gap:.3e}, round-trip {round_gap:.3e}",
            suite_detail(&report)
        ),
    );
}

#[test]
fn criterion_03_kernel_three_way() {
    let radices: Vec<(&str, Radix, usize)> = vec![
        ("walsh-N8", RadixSequence::walsh(8), 8),
        ("m234-N6", RadixSequence::from_pattern(&[2, 3, 4], 6).unwrap().into(), 6),
        ("m5432-N4", RadixSequence::shared(vec![5, 4, 3, 2]).unwrap(), 4),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (label, radix, n) in &radices {
        let (closed_gap, block_gap) = kernel_agreement(*n, radix).unwrap();
        passed &= closed_gap < 1e-9 && block_gap < 1e-9;
        detail.push(format!("{label}: closed {closed_gap:.3e}, block {block_gap:.3e}"));
    }
    criterion("kernel-three-way", passed, &detail.join("; "));
}

#[test]
fn criterion_04_lemma3_exhaustive() {
    let (_dir, mut store) = scratch_store();
    let report = run_suite("lemma3", &SuiteConfig::default(), &mut store).unwrap();
    criterion("lemma3-exhaustive", report.passed, &suite_detail(&report));
}

#[test]
fn criterion_05_lemma2_scan() {
    let _guard = store_lock().lock().unwrap();
    let mut store = RegressionStore::open_default().unwrap();
    let report = run_suite("lemma2", &SuiteConfig::default(), &mut store).unwrap();
    store.save().unwrap();
    criterion("lemma2-scan", report.passed, &suite_detail(&report));
}

#[test]
fn criterion_06_kernel_norm_rho_bound() {
    let _guard = store_lock().lock().unwrap();
    let mut store = RegressionStore::open_default().unwrap();
    let report = run_suite("kernels", &SuiteConfig::default(), &mut store).unwrap();
    store.save().unwrap();
    criterion("kernel-norm-rho-bound", report.passed, &suite_detail(&report));
}

#[test]
fn criterion_07_condexp_identity() {
    let mut worst = 0.0f64;
    for (radix, n) in [
        (RadixSequence::walsh(6), 6usize),
        (RadixSequence::shared(vec![2, 3, 4]).unwrap(), 3),
    ] {
        worst = worst.max(
            vilenkin_lab::harness::condexp_identity_worst(&radix, n, 50, 2023).unwrap(),
        );
    }
    criterion(
        "condexp-identity",
        worst < 1e-10,
        &format!("max |condexp(f,n) - S_(M_n)f| = {worst:.3e} over 100 functions"),
    );
}

#[test]
fn criterion_08_counterexample_spectrum() {
    let (_dir, mut store) = scratch_store();
    let report = run_suite("theoremW", &SuiteConfig::default(), &mut store).unwrap();
    criterion("counterexample-spectrum", report.passed, &suite_detail(&report));
}

#[test]
fn criterion_09_divergence_growth() {
    let radix = RadixSequence::walsh(12);
    let report =
        growth_experiment(&SubsequenceFamily::OrdersPlusOne, 0.5, 4, 12, &radix).unwrap();
    let ii_all = report.steps.iter().all(|s| s.ii_ok);
    let (pin_ok, pin_detail) = pin_committed("growth_ratio_min/walsh-p0.5-K4-N12", report.ratio_min);
    let passed =
        report.strictly_increasing && ii_all && report.ratio_min > 0.0 && pin_ok;
    let weak: Vec<String> = report.steps.iter().map(|s| format!("{:.4}", s.weak_p)).collect();
    criterion(
        "divergence-growth",
        passed,
        &format!(
            "indices {:?}, W = [{}], increasing = {}, II bound ok = {ii_all}, {pin_detail}",
            report.indices,
            weak.join(", "),
            report.strictly_increasing
        ),
    );
}

fn probe_max(family: &SubsequenceFamily, count_for: fn(usize) -> usize, p: f64, n: usize) -> f64 {
    let radix = RadixSequence::walsh(n);
    let cfg = ProbeConfig { p, trials: 200, seed: 2023, resolution: n };
    let operator = ProbeOperator::Restricted { family: family.clone(), count: count_for(n) };
    probe_operator_norm(&operator, &cfg, &radix).unwrap().max_ratio
}

#[test]
fn criterion_10_boundedness_contrast() {
    let mut passed = true;
    let mut detail = Vec::new();
    for (family, count_for) in [
        (SubsequenceFamily::Orders, ((|n| n + 1) as fn(usize) -> usize)),
        (SubsequenceFamily::OrdersPlusPrev, (|n| n - 1) as fn(usize) -> usize),
    ] {
        for p in [0.5, 1.0] {
            let r8 = probe_max(&family, count_for, p, 8);
            let r12 = probe_max(&family, count_for, p, 12);
            let stable = r12 <= r8 * 1.01;
            let (pin8, _) =
                pin_committed(&format!("probe_max/{}/p{p}/N8", family.label()), r8);
            let (pin12, _) =
                pin_committed(&format!("probe_max/{}/p{p}/N12", family.label()), r12);
            passed &= stable && pin8 && pin12;
            detail.push(format!(
                "{} p={p}: N8 {r8:.6}, N12 {r12:.6}, stable={stable}",
                family.label()
            ));
        }
    }
    let g8 = probe_max(&SubsequenceFamily::OrdersPlusOne, |n| n - 1, 0.5, 8);
    let g12 = probe_max(&SubsequenceFamily::OrdersPlusOne, |n| n - 1, 0.5, 12);
    let grows = g12 >= 2.0 * g8;
    passed &= grows;
    detail.push(format!("Mn+1 p=0.5: N8 {g8:.4}, N12 {g12:.4}, doubled={grows}"));
    criterion("boundedness-contrast", passed, &detail.join("; "));
}

#[test]
fn criterion_11_watari_constants() {
    let _guard = store_lock().lock().unwrap();
    let mut store = RegressionStore::open_default().unwrap();
    let report = run_suite("watari", &SuiteConfig::default(), &mut store).unwrap();
    store.save().unwrap();
    criterion("watari-constants", report.passed, &suite_detail(&report));
}
