//! Acceptance criteria, one test each. The full suite is run once with seed 7
//! and shared; AC11 runs it a second time and compares.

use std::f64::consts::{E, FRAC_1_SQRT_2};
use std::sync::OnceLock;
use std::time::Instant;

use fockbench::experiments::{self, correspondence_operators, correspondence_error, ExperimentConfig, RunOutput, Suite};
use fockbench::fock::{basis_norm, weyl_matrix, Exponent, FockParams, MultiIndexBasis};
use fockbench::operators::{berezin, toeplitz};
use fockbench::{SymbolSpec, C64};
use statrs::function::gamma::ln_gamma;

const SEED: u64 = 7;

struct FullRun {
    out: RunOutput,
    seconds: f64,
}

fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut cfg = ExperimentConfig::for_suite(Suite::Full);
        cfg.seed = SEED;
        let start = Instant::now();
        let out = experiments::run(&cfg).expect("full suite runs");
        FullRun { out, seconds: start.elapsed().as_secs_f64() }
    })
}

/// Collects failures so that every AC prints exactly one PASS/FAIL line.
struct Ac {
    id: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Ac {
    fn new(id: &'static str) -> Self {
        Ac { id, failures: vec![], notes: vec![] }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Every check of `suite` whose name starts with one of `prefixes` must
    /// pass, and at least one must exist per prefix.
    fn checks(&mut self, suite: Suite, prefixes: &[&str]) {
        let report = &full_run().out.report;
        let Some(s) = report.suites.iter().find(|s| s.suite == suite) else {
            self.failures.push(format!("suite {} missing from the report", suite.name()));
            return;
        };
        for p in prefixes {
            let hits: Vec<_> = s.checks.iter().filter(|c| c.name.starts_with(p)).collect();
            self.expect(!hits.is_empty(), format!("{}: no check named {p}*", suite.name()));
            for c in hits {
                self.expect(c.passed, format!("{}/{} failed: {}", suite.name(), c.name, c.values));
            }
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if self.failures.is_empty() { self.notes.join("; ") } else { self.failures.join("; ") };
        println!("{} {status}: {detail}", self.id);
        assert!(self.failures.is_empty(), "{} failed: {:#?}", self.id, self.failures);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn ac01_basis_norms() {
    let mut ac = Ac::new("AC01 basis norms");
    let start = Instant::now();
    let mut cfg = ExperimentConfig::for_suite(Suite::BasisNorms);
    cfg.seed = SEED;
    let own = experiments::run(&cfg).expect("basis-norms runs");
    let secs = start.elapsed().as_secs_f64();
    ac.expect(own.report.all_passed(), "standalone basis-norms run has failures");
    ac.expect(secs < 10.0, format!("runtime {secs:.1}s >= 10s"));
    ac.checks(Suite::BasisNorms, &["l1-closed-form", "linf-closed-form", "product-formula", "product-limit"]);

    // log-Gamma oracle for the corrected closed forms and the printed product
    let p1 = FockParams::new(1.0, 1, Exponent::One).unwrap();
    let pinf = FockParams::new(1.0, 1, Exponent::Infinity).unwrap();
    let mut last = 0.0;
    for k in 0..=60i64 {
        let kf = k as f64;
        let lf = ln_gamma(kf + 1.0);
        let l1 = (0.5 * kf * 2f64.ln() + ln_gamma(kf / 2.0 + 1.0) - 0.5 * lf).exp();
        let linf = if k == 0 { 1.0 } else { (0.5 * kf * kf.ln() - 0.5 * kf - 0.5 * lf).exp() };
        let a = basis_norm(&p1, &[k]).unwrap();
        let b = basis_norm(&pinf, &[k]).unwrap();
        ac.expect(rel(a, l1) < 1e-8, format!("||e_{k}||_1 = {a}, oracle {l1}"));
        ac.expect(rel(b, linf) < 1e-8, format!("||e_{k}||_inf = {b}, oracle {linf}"));
        let printed = if k == 0 {
            1.0
        } else {
            (0.5 * kf * (2.0 * kf).ln() + ln_gamma(kf / 2.0 + 1.0) - 0.5 * kf - lf).exp()
        };
        ac.expect(rel(a * b, printed) < 1e-8, format!("product at k={k}: {} vs {printed}", a * b));
        ac.expect(a * b <= 1.0 + 1e-12, format!("product at k={k} exceeds 1"));
        last = a * b;
    }
    ac.expect((rel(basis_norm(&p1, &[2]).unwrap(), 2f64.sqrt())) < 1e-12, "||e_2||_1 != sqrt 2");
    ac.expect((rel(basis_norm(&pinf, &[2]).unwrap(), 2f64.sqrt() / E)) < 1e-12, "||e_2||_inf != sqrt 2 / e");
    ac.expect((last - FRAC_1_SQRT_2).abs() < 1e-3, format!("product at k=60 is {last}"));
    ac.note(format!("runtime {secs:.2}s, product(60) = {last:.6}"));
    ac.finish();
}

#[test]
fn ac02_weyl_algebra() {
    let mut ac = Ac::new("AC02 Weyl algebra");
    ac.checks(Suite::KernelsWeyl, &["composition-phase", "isometry-defect"]);
    // direct phase oracle on a 5 x 5 grid with |z|, |w| <= 2
    let basis = MultiIndexBasis::new(FockParams::hilbert(1.0, 1).unwrap(), 96).unwrap();
    let pts: Vec<C64> = (0..5).map(|j| C64::from_polar(0.4 * (j + 1) as f64, 1.1 * j as f64)).collect();
    let mut worst: f64 = 0.0;
    for &z in &pts {
        let wz = weyl_matrix(&basis, &[z]).unwrap();
        for &w in &pts {
            let ww = weyl_matrix(&basis, &[w]).unwrap();
            let lhs = wz.compose(&ww).unwrap().entries()[(0, 0)];
            let rhs = weyl_matrix(&basis, &[z + w]).unwrap().entries()[(0, 0)];
            let want = C64::from_polar(1.0, -(z * w.conj()).im);
            worst = worst.max((lhs / rhs - want).norm());
        }
    }
    ac.expect(worst <= 1e-10, format!("phase error {worst:e}"));
    ac.note(format!("phase error {worst:.1e}"));
    ac.finish();
}

#[test]
fn ac03_toeplitz_assembly() {
    let mut ac = Ac::new("AC03 Toeplitz assembly");
    ac.checks(Suite::ToeplitzAssembly, &["gaussian-diagonal", "berezin-vs-heat/"]);
    for t in [0.5, 1.0, 2.0] {
        let basis = MultiIndexBasis::new(FockParams::hilbert(t, 1).unwrap(), 32).unwrap();
        let m = toeplitz(&SymbolSpec::gaussian(1.0, vec![]), &basis).unwrap();
        for k in 0..=30 {
            let want = (t + 1.0).powi(-(k as i32 + 1));
            let got = m.entries()[(k, k)];
            ac.expect(rel(got.re, want) < 1e-10 && got.im.abs() < 1e-14, format!("t={t} d_{k} = {got}, want {want}"));
        }
    }
    // Berezin of T_g against the closed-form heat transform (1/2) e^{-|z|^2/2}
    let basis = MultiIndexBasis::new(FockParams::hilbert(1.0, 1).unwrap(), 32).unwrap();
    let m = toeplitz(&SymbolSpec::gaussian(1.0, vec![]), &basis).unwrap();
    for j in 0..20 {
        let z = C64::from_polar(3.0 * (j as f64 + 0.5) / 20.0, 0.7 * j as f64);
        let got = berezin(&m, &[z]).unwrap().value;
        let want = 0.5 * (-z.norm_sqr() / 2.0).exp();
        ac.expect((got - want).norm() <= 1e-8, format!("Berezin at {z}: {got} vs {want}"));
    }
    ac.finish();
}

#[test]
fn ac04_correspondence() {
    let mut ac = Ac::new("AC04 correspondence identity");
    ac.checks(Suite::Correspondence, &["g_t-conv/", "g_t-conv-decreasing"]);
    let ops = correspondence_operators();
    ac.expect(ops.len() == 5, format!("{} operators in the test set", ops.len()));
    let e = correspondence_error(&ops[0], 1.0, 24, 2.0).unwrap();
    ac.expect(e <= 1e-3, format!("{} at N=24: {e:e}", ops[0].label()));
    ac.finish();
}

#[test]
fn ac05_wiener() {
    let mut ac = Ac::new("AC05 Wiener scheme");
    ac.checks(Suite::Wiener, &["certified-l1/level=1", "certified-l1/level=2", "certified-l1/level=4", "error-chain/"]);
    let report = &full_run().out.report;
    let secs = report.timestamp.suite_seconds.iter().find(|(s, _)| *s == Suite::Wiener).map(|x| x.1);
    match secs {
        Some(s) => {
            ac.expect(s < 300.0, format!("wiener suite took {s:.0}s"));
            ac.note(format!("wiener suite {s:.1}s"));
        }
        None => ac.expect(false, "no wiener timing"),
    }
    ac.finish();
}

#[test]
fn ac06_trace_identity() {
    let mut ac = Ac::new("AC06 trace identity");
    ac.checks(Suite::TraceIdentity, &["trace-heat/", "geometric-series/", "t0-single-term"]);
    let suite = full_run().out.report.suites.iter().find(|s| s.suite == Suite::TraceIdentity).unwrap();
    let count = suite.checks.iter().filter(|c| c.name.starts_with("trace-heat/")).count();
    ac.expect(count == 12, format!("{count} identity checks, want 2 symbols x 3 s x 2 z"));
    for c in suite.checks.iter().filter(|c| c.name.starts_with("geometric-series/")) {
        let gap = c.values["limit_gap"].as_f64().unwrap_or(f64::INFINITY);
        ac.expect(gap < 1e-10, format!("{}: |rhs - 1| = {gap:e}", c.name));
    }
    ac.finish();
}

#[test]
fn ac07_berger_coburn() {
    let mut ac = Ac::new("AC07 Berger-Coburn brackets");
    ac.checks(Suite::BergerCoburn, &["forward/", "reverse/", "family-constant/", "forward-constant-finite", "reverse-constant-finite"]);
    let suite = full_run().out.report.suites.iter().find(|s| s.suite == Suite::BergerCoburn).unwrap();
    let per_symbol = suite.checks.iter().filter(|c| c.name.contains("/s=") && !c.name.starts_with("family")).count();
    ac.expect(per_symbol == 18 * 3, format!("{per_symbol} per-symbol checks, want 18 symbols x 3 s"));
    ac.finish();
}

#[test]
fn ac08_dilation() {
    let mut ac = Ac::new("AC08 dilation lemma");
    ac.checks(Suite::Dilation, &["conjugation/", "berezin/"]);
    let suite = full_run().out.report.suites.iter().find(|s| s.suite == Suite::Dilation).unwrap();
    for lam in ["lambda=0.5", "lambda=2"] {
        for part in ["conjugation/", "berezin/"] {
            let n = suite.checks.iter().filter(|c| c.name.starts_with(part) && c.name.ends_with(lam)).count();
            ac.expect(n >= 2, format!("{part}*{lam}: {n} checks"));
        }
    }
    ac.finish();
}

#[test]
fn ac09_limits_fredholm() {
    let mut ac = Ac::new("AC09 limits / Fredholm");
    ac.checks(Suite::Limits, &["angular-directional-limits", "limit-operator/angular"]);
    ac.checks(Suite::Spectrum, &["essential-spectrum/unit-circle", "fredholm-witness/lambda=3", "fredholm-negative-control/lambda=1"]);
    let suite = full_run().out.report.suites.iter().find(|s| s.suite == Suite::Spectrum).unwrap();
    if let Some(c) = suite.checks.iter().find(|c| c.name == "fredholm-witness/lambda=3") {
        let radii: Vec<f64> = c.values["radii"].as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default();
        ac.expect(radii == [4.0, 6.0, 8.0], format!("radii {radii:?}"));
        let tails: Vec<f64> = c.values["tails"].as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default();
        ac.expect(tails.len() == 3 && tails.windows(2).all(|w| w[1] < w[0]), format!("tails {tails:?}"));
    }
    ac.finish();
}

#[test]
fn ac10_compactness() {
    let mut ac = Ac::new("AC10 compactness probes");
    ac.checks(
        Suite::Compactness,
        &["sigma_40/gaussian", "berezin-tail/gaussian/R=8", "compact-consistent/", "not-compact/identity", "not-compact/constant"],
    );
    ac.checks(Suite::Esscen, &["commutator/", "commutator-negative-control/"]);
    ac.finish();
}

#[test]
fn ac11_determinism() {
    let mut ac = Ac::new("AC11 determinism");
    let first = full_run();
    let mut cfg = ExperimentConfig::for_suite(Suite::Full);
    cfg.seed = SEED;
    let second = experiments::run(&cfg).expect("second full run");
    let (a, b) = (first.out.report.stable_json().unwrap(), second.report.stable_json().unwrap());
    ac.expect(a == b, "report differs between runs beyond the timestamp");
    ac.expect(first.out.tables.len() == second.tables.len(), "table count differs");
    for ((sa, ta), (sb, tb)) in first.out.tables.iter().zip(&second.tables) {
        ac.expect(sa == sb && ta.to_csv().unwrap() == tb.to_csv().unwrap(), format!("table {}/{} differs", sa.name(), ta.name));
    }
    ac.expect(first.seconds < 900.0, format!("full suite took {:.0}s", first.seconds));
    ac.note(format!("full suite {:.0}s, {} bytes stable", first.seconds, a.len()));
    ac.finish();
}
