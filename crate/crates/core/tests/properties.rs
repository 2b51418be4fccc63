//! Property tests for the structural invariants.

use std::sync::Arc;

use fockbench::approximation::t0_build;
use fockbench::experiments::{self, ExperimentConfig, Suite};
use fockbench::fock::{basis_norm, kernel_expand, weyl_matrix, Exponent, FockParams, MultiIndexBasis, TruncatedVector};
use fockbench::limits::DirectionApproximant;
use fockbench::operators::{berezin, norm_estimate, toeplitz};
use fockbench::symbols::{heat_transform, translate, AngularMode};
use fockbench::{SymbolSpec, C64};
use nalgebra::DVector;
use proptest::prelude::*;

fn basis(t: f64, n: usize, degree: usize) -> Arc<MultiIndexBasis> {
    MultiIndexBasis::new(FockParams::hilbert(t, n).unwrap(), degree).unwrap()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn point(r: f64, th: f64) -> C64 {
    C64::from_polar(r, th)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_dimension_and_graded_order(n in 1usize..=3, degree in 0usize..=8) {
        let b = basis(1.0, n, degree);
        prop_assert_eq!(b.dim(), binom(degree + n, n));
        for i in 0..b.dim() {
            prop_assert_eq!(b.position(b.index(i)), Some(i));
            if i > 0 {
                prop_assert!(b.degree(i) >= b.degree(i - 1));
            }
        }
    }

    #[test]
    fn hilbert_norms_are_one(k in 0i64..300, t in 0.1f64..5.0) {
        let p = FockParams::hilbert(t, 1).unwrap();
        prop_assert!((basis_norm(&p, &[k]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_product_bounded_by_one(k in 0i64..400) {
        let p1 = FockParams::new(1.0, 1, Exponent::One).unwrap();
        let pi = FockParams::new(1.0, 1, Exponent::Infinity).unwrap();
        let prod = basis_norm(&p1, &[k]).unwrap() * basis_norm(&pi, &[k]).unwrap();
        prop_assert!(prod <= 1.0 + 1e-12 && prod > 0.7, "k={} product={}", k, prod);
    }

    #[test]
    fn kernel_reproduces_polynomials(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 11),
        r in 0.0f64..2.0,
        th in 0.0f64..6.3,
    ) {
        let b = basis(1.0, 1, 40);
        let mut c = vec![C64::new(0.0, 0.0); b.dim()];
        for (i, (re, im)) in coeffs.iter().enumerate() {
            c[i] = C64::new(*re, *im);
        }
        let v = TruncatedVector::new(b.clone(), DVector::from_vec(c)).unwrap();
        let z = point(r, th);
        let k = kernel_expand(&b, &[z]).unwrap();
        let via_kernel = v.inner(&k.vector).unwrap();
        prop_assert!((via_kernel - v.eval(&[z])).norm() < 1e-12);
    }

    #[test]
    fn weyl_composition_phase(r1 in 0.0f64..1.5, a1 in 0.0f64..6.3, r2 in 0.0f64..1.5, a2 in 0.0f64..6.3) {
        let b = basis(1.0, 1, 64);
        let (z, w) = (point(r1, a1), point(r2, a2));
        let lhs = weyl_matrix(&b, &[z]).unwrap().compose(&weyl_matrix(&b, &[w]).unwrap()).unwrap().entries()[(0, 0)];
        let rhs = weyl_matrix(&b, &[z + w]).unwrap().entries()[(0, 0)];
        let want = C64::from_polar(1.0, -(z * w.conj()).im);
        prop_assert!((lhs / rhs - want).norm() < 1e-10);
    }

    #[test]
    fn weyl_unitary_on_low_block(r in 0.0f64..1.0, a in 0.0f64..6.3) {
        let b = basis(1.0, 1, 48);
        let w = weyl_matrix(&b, &[point(r, a)]).unwrap();
        let prod = w.adjoint().compose(&w).unwrap();
        let blk = prod.block(4);
        for i in 0..blk.nrows() {
            for j in 0..blk.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((blk[(i, j)] - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn heat_commutes_with_translation(
        width in 0.2f64..4.0,
        cr in 0.0f64..2.0, ca in 0.0f64..6.3,
        zr in 0.0f64..2.0, za in 0.0f64..6.3,
        wr in 0.0f64..3.0, wa in 0.0f64..6.3,
        s in 0.1f64..2.0,
        osc in 0.1f64..3.0,
    ) {
        let z = point(zr, za);
        let w = point(wr, wa);
        for f in [
            SymbolSpec::gaussian(width, vec![point(cr, ca)]),
            SymbolSpec::oscillatory(osc),
            SymbolSpec::PolyGaussian { center: vec![], width, power: 2, amplitude: C64::new(1.0, 0.0) },
        ] {
            let a = heat_transform(&translate(&f, &[z]), s, &[w]).unwrap().value;
            let b = heat_transform(&f, s, &[w - z]).unwrap().value;
            prop_assert!((a - b).norm() < 1e-10, "{:?}: {} vs {}", f, a, b);
        }
    }

    #[test]
    fn real_symbols_give_hermitian_matrices(width in 0.3f64..3.0, cr in 0.0f64..2.0, ca in 0.0f64..6.3) {
        let b = basis(1.0, 1, 16);
        let m = toeplitz(&SymbolSpec::gaussian(width, vec![point(cr, ca)]), &b).unwrap();
        let e = m.entries();
        let asym = (e - e.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(asym < 1e-12, "asymmetry {}", asym);
    }

    #[test]
    fn berezin_of_constant_symbol(re in -2.0f64..2.0, im in -2.0f64..2.0, r in 0.0f64..2.0, a in 0.0f64..6.3) {
        let b = basis(1.0, 1, 32);
        let c = C64::new(re, im);
        let m = toeplitz(&SymbolSpec::constant(c), &b).unwrap();
        prop_assert!((berezin(&m, &[point(r, a)]).unwrap().value - c).norm() < 1e-12);
    }

    #[test]
    fn heat_never_exceeds_sup(
        r in 0.0f64..6.0, a in 0.0f64..6.3, s in 0.1f64..2.0, m in -3i64..=3, r0 in 0.5f64..2.0,
    ) {
        let f = SymbolSpec::Angular { modes: vec![AngularMode { m, c: C64::new(1.0, 0.0) }], r0 };
        let h = heat_transform(&f, s, &[point(r, a)]).unwrap();
        prop_assert!(h.value.norm() <= 1.0 + h.error_bound + 1e-12);
        prop_assert!(h.error_bound >= 0.0);
    }

    #[test]
    fn t0_partial_sums_monotone_and_bounded(q in 0.55f64..3.0) {
        let b = basis(1.0, 1, 40);
        let t0 = t0_build(q, &b).unwrap();
        prop_assert!(t0.partial_nuclear.windows(2).all(|w| w[1] >= w[0]));
        let last = *t0.partial_nuclear.last().unwrap();
        prop_assert!(last <= t0.nuclear_norm_bound * (1.0 + 1e-12));
    }

    #[test]
    fn direction_radii_must_increase(mut radii in prop::collection::vec(0.1f64..1e6, 0..6)) {
        let ok = radii.len() >= 3 && radii.windows(2).all(|w| w[1] > w[0]);
        prop_assert_eq!(DirectionApproximant::new(vec![C64::new(1.0, 0.0)], radii.clone(), 1e-6).is_ok(), ok);
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup();
        let ok = radii.len() >= 3;
        prop_assert_eq!(DirectionApproximant::new(vec![C64::new(0.0, 2.0)], radii, 1e-6).is_ok(), ok);
    }
}

// the p = 1 and p = inf witness searches run hundreds of quadratures each
proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn norm_estimates_bracket(width in 0.3f64..3.0, cr in 0.0f64..1.5, seed in 0u64..1000) {
        let b = basis(1.0, 1, 6);
        let m = toeplitz(&SymbolSpec::gaussian(width, vec![C64::new(cr, 0.0)]), &b).unwrap();
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let e = norm_estimate(&m, p, seed).unwrap();
            prop_assert!(e.lower <= e.upper * (1.0 + 1e-12), "{:?}: {} > {}", p, e.lower, e.upper);
            if p == Exponent::Two {
                prop_assert!((e.lower - e.upper).abs() <= 1e-15 * e.upper);
            }
        }
    }

    #[test]
    fn reports_are_seed_deterministic(seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::for_suite(Suite::KernelsWeyl);
        cfg.seed = seed;
        let a = experiments::run(&cfg).unwrap().report.stable_json().unwrap();
        let b = experiments::run(&cfg).unwrap().report.stable_json().unwrap();
        prop_assert_eq!(a, b);
    }
}
