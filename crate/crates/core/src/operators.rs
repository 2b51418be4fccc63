//! Operators on the truncated space: Toeplitz assembly, Berezin transforms,
//! shifts, module convolutions, K_s, rank-one and dilation maps, the
//! integral-kernel realization and norm estimates.
//!
//! Matrices follow A[beta, alpha] = <A e_alpha, e_beta>.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{
    basis_norm, check_point, check_same, fp_norm, gaussian_polar_rule, normalized_kernel, weyl_matrix, Exponent,
    FockParams, MultiIndexBasis, OperatorMatrix, TruncatedVector, ORDERING_TAG,
};
use crate::special::{composite_gl, gamma_p, gamma_q, gauss_hermite, ln_factorial, ln_gamma};
use crate::symbols::{dilate, heat_symbol, translate, GaussForm, SymbolSpec};

/// Radial and angular rule used by a Toeplitz assembly, in the variable
/// u = |z|^2 / t.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureScheme {
    pub radial: Vec<(f64, f64)>,
    pub angular_count: usize,
    /// Analytic bound on the neglected |z| > R part of every entry.
    pub tail_bound: f64,
    pub r_max: f64,
}

impl QuadratureScheme {
    /// Scheme for degree-N products against a symbol bounded by `sup`:
    /// the cutoff U satisfies Q(N+1, U) sup <= 1e-14 max(sup, 1).
    pub fn for_degree(t: f64, max_degree: usize, sup: f64, breaks_r: &[f64], width: f64) -> Self {
        let a = max_degree as f64 + 1.0;
        let mut u = a + 10.0;
        while gamma_q(a, u) * sup > 1e-14 * sup.max(1.0) {
            u += 1.0;
        }
        QuadratureScheme {
            radial: sqrt_rule(u, width, &breaks_r.iter().map(|r| r / t.sqrt()).collect::<Vec<_>>()),
            angular_count: (4 * max_degree + 8).max(64),
            tail_bound: gamma_q(a, u) * sup,
            r_max: (t * u).sqrt(),
        }
    }
}

/// Rule for int_0^U g(u) du built in w = sqrt(u), where symbols of |z| are
/// smooth: nodes w^2 with weights 2 w dw. Panel width and breaks are in w.
pub fn sqrt_rule(u_max: f64, width: f64, breaks_w: &[f64]) -> Vec<(f64, f64)> {
    composite_gl(0.0, u_max.sqrt(), width, 12, breaks_w).into_iter().map(|(w, wt)| (w * w, 2.0 * w * wt)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyPath {
    /// Closed-form Gamma integrals on the diagonal.
    RadialClosedForm,
    RadialQuadrature,
    /// Banded assembly from the angular modes of the symbol.
    Modes,
    /// Full polar quadrature with an FFT in angle.
    Generic,
    /// Products of one-variable assemblies.
    Separable,
}

#[derive(Clone, Debug)]
pub struct Assembled {
    pub matrix: OperatorMatrix,
    pub path: AssemblyPath,
    /// Estimated entrywise quadrature error (two-rule difference plus tail
    /// bound and, for real symbols, the asymmetry removed by symmetrization).
    pub residual: f64,
}

/// T_f on the truncated basis, entries <f e_alpha, e_beta>.
pub fn toeplitz(f: &SymbolSpec, basis: &Arc<MultiIndexBasis>) -> Result<OperatorMatrix> {
    Ok(toeplitz_assembled(f, basis)?.matrix)
}

pub fn toeplitz_assembled(f: &SymbolSpec, basis: &Arc<MultiIndexBasis>) -> Result<Assembled> {
    f.validate()?;
    let n = basis.n();
    if f.one_variable_only() && n != 1 {
        return Err(Error::Unsupported("this symbol family is defined for n = 1 only".into()));
    }
    if let SymbolSpec::Constant { value } = f {
        return Ok(Assembled {
            matrix: OperatorMatrix::identity(basis.clone()).scale(*value),
            path: AssemblyPath::RadialClosedForm,
            residual: 0.0,
        });
    }
    let mut out = if f.is_radial() {
        radial_assembly(f, basis)?
    } else if n == 1 {
        if f.mode_set().is_some() {
            mode_assembly(f, basis)?
        } else {
            generic_assembly(f, basis)?
        }
    } else if let Some(parts) = separable_factors(f, n) {
        separable_assembly(&parts, basis)?
    } else {
        return Err(Error::Unsupported(
            "non-radial symbols in n > 1 are assembled only for Gaussian-type products".into(),
        ));
    };
    if f.is_real() {
        let e = out.matrix.entries();
        let sym = (e + e.adjoint()) * C64::new(0.5, 0.0);
        let asym = max_abs(&(e - &sym));
        out.residual += asym;
        out.matrix = OperatorMatrix::new(basis.clone(), sym)?;
    }
    Ok(out)
}

fn certified_sup(f: &SymbolSpec) -> Result<f64> {
    f.sup_bound()
        .ok_or_else(|| Error::Certification("symbol has no certified bound; Toeplitz quadrature refused".into()))
}

fn check_extent(f: &SymbolSpec, r_max: f64) -> Result<()> {
    if let Some(hi) = f.radial_extent() {
        if hi < r_max {
            return Err(Error::Extrapolation { r: r_max, lo: 0.0, hi });
        }
    }
    Ok(())
}

fn radial_assembly(f: &SymbolSpec, basis: &Arc<MultiIndexBasis>) -> Result<Assembled> {
    let t = basis.t();
    let n = basis.n();
    let nmax = basis.max_degree();
    let gauss = radial_gauss(f);
    let mut per_degree = vec![C64::new(0.0, 0.0); nmax + 1];
    let mut residual = 0.0;
    let path;
    if let Some(terms) = gauss {
        path = AssemblyPath::RadialClosedForm;
        for (d, v) in per_degree.iter_mut().enumerate() {
            let k = (d + n) as f64;
            for g in &terms {
                let j = g.power as f64;
                let base = 1.0 + g.kappa * t;
                if base.re <= 0.0 {
                    return Err(Error::Certification("Gaussian growth is not integrable against the weight".into()));
                }
                let lg = ln_gamma(k + j) - ln_gamma(k);
                *v += g.amplitude * t.powf(j) * lg.exp() * base.powc(C64::new(-(k + j), 0.0));
            }
        }
    } else {
        path = AssemblyPath::RadialQuadrature;
        let sup = certified_sup(f)?;
        let kmax = (nmax + n) as f64;
        let mut v_max = kmax + 10.0;
        while gamma_q(kmax, v_max) * sup > 1e-15 * sup.max(1.0) {
            v_max += 1.0;
        }
        check_extent(f, (t * v_max).sqrt())?;
        let breaks: Vec<f64> = f.radial_breakpoints().iter().map(|r| r / t.sqrt()).collect();
        let integrate = |width: f64| -> Result<Vec<C64>> {
            let rule = sqrt_rule(v_max, width, &breaks);
            let vals: Vec<C64> = rule.par_iter().map(|&(v, _)| f.mode_value(0, (t * v).sqrt())).collect();
            if vals.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::Certification("symbol not finite on the quadrature nodes".into()));
            }
            Ok((0..=nmax)
                .map(|d| {
                    let k = (d + n) as f64;
                    let lg = ln_gamma(k);
                    rule.iter()
                        .zip(&vals)
                        .map(|(&(v, w), h)| h * (w * ((k - 1.0) * v.ln() - v - lg).exp()))
                        .sum()
                })
                .collect())
        };
        let fine = integrate(0.125)?;
        let coarse = integrate(0.25)?;
        residual = fine.iter().zip(&coarse).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
            + gamma_q(kmax, v_max) * sup;
        per_degree = fine;
    }
    let diag: Vec<C64> = (0..basis.dim()).map(|i| per_degree[basis.degree(i)]).collect();
    Ok(Assembled { matrix: OperatorMatrix::diagonal(basis.clone(), &diag)?, path, residual })
}

/// Gaussian-type terms centred at the origin, if the symbol is a sum of them
/// (constants included as kappa = 0).
fn radial_gauss(f: &SymbolSpec) -> Option<Vec<GaussForm>> {
    match f {
        SymbolSpec::Constant { value } => {
            Some(vec![GaussForm { amplitude: *value, center: vec![], kappa: C64::new(0.0, 0.0), power: 0 }])
        }
        SymbolSpec::Sum { terms } => {
            let mut out = Vec::new();
            for s in terms {
                out.extend(radial_gauss(s)?);
            }
            Some(out)
        }
        SymbolSpec::Dilate { .. } | SymbolSpec::Reflect { .. } | SymbolSpec::Translate { .. } => {
            let simplified = match f {
                SymbolSpec::Dilate { inner, lambda } => dilate(inner, *lambda),
                SymbolSpec::Reflect { inner } => crate::symbols::reflect(inner),
                SymbolSpec::Translate { inner, by } => translate(inner, by),
                _ => unreachable!(),
            };
            if &simplified == f {
                None
            } else {
                radial_gauss(&simplified)
            }
        }
        _ => {
            let g = f.gauss_form()?;
            g.center.iter().all(|c| c.norm() == 0.0).then(|| vec![g])
        }
    }
}

fn ln_phi(k: usize, u: f64) -> f64 {
    if u == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    0.5 * k as f64 * u.ln() - 0.5 * ln_factorial(k as u64) - 0.5 * u
}

fn phi_table(nmax: usize, rule: &[(f64, f64)]) -> Vec<Vec<f64>> {
    rule.iter().map(|&(u, _)| (0..=nmax).map(|k| ln_phi(k, u).exp()).collect()).collect()
}

fn mode_assembly(f: &SymbolSpec, basis: &Arc<MultiIndexBasis>) -> Result<Assembled> {
    let t = basis.t();
    let nmax = basis.max_degree();
    let sup = certified_sup(f)?;
    let modes: Vec<i64> = f
        .mode_set()
        .unwrap()
        .into_iter()
        .filter(|m| m.unsigned_abs() as usize <= nmax)
        .collect();
    let assemble = |width: f64| -> Result<(DMatrix<C64>, f64)> {
        let scheme = QuadratureScheme::for_degree(t, nmax, sup, &f.radial_breakpoints(), width);
        check_extent(f, scheme.r_max)?;
        let phi = phi_table(nmax, &scheme.radial);
        let h: Vec<Vec<C64>> = scheme
            .radial
            .par_iter()
            .map(|&(u, _)| modes.iter().map(|&m| f.mode_value(m, (t * u).sqrt())).collect())
            .collect();
        let mut a = DMatrix::zeros(nmax + 1, nmax + 1);
        for (qi, &q) in modes.iter().enumerate() {
            for k in 0..=nmax {
                let m = k as i64 + q;
                if m < 0 || m as usize > nmax {
                    continue;
                }
                let m = m as usize;
                let mut acc = C64::new(0.0, 0.0);
                for (i, &(_, w)) in scheme.radial.iter().enumerate() {
                    acc += h[i][qi] * (w * phi[i][k] * phi[i][m]);
                }
                a[(m, k)] = acc;
            }
        }
        Ok((a, scheme.tail_bound))
    };
    let (fine, tail) = assemble(0.125)?;
    let (coarse, _) = assemble(0.25)?;
    if fine.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Certification("symbol not finite on the quadrature nodes".into()));
    }
    let residual = max_abs(&(&fine - &coarse)) + tail;
    Ok(Assembled { matrix: OperatorMatrix::new(basis.clone(), fine)?, path: AssemblyPath::Modes, residual })
}

/// Angular Fourier coefficients c_d(u) for |d| <= nmax at every radial node,
/// with the angular count doubled until the top of the spectrum is negligible.
fn angular_coefficients(
    f: &SymbolSpec,
    t: f64,
    nmax: usize,
    rule: &[(f64, f64)],
    start: usize,
    sup: f64,
) -> Result<(Vec<Vec<C64>>, usize, f64)> {
    let sample = |m: usize, u: f64| -> Vec<C64> {
        let r = (t * u).sqrt();
        let mut buf: Vec<C64> =
            (0..m).map(|j| f.eval(&[C64::from_polar(r, TAU * j as f64 / m as f64)])).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        buf.iter_mut().for_each(|c| *c /= m as f64);
        buf
    };
    let probes: Vec<f64> = rule.iter().step_by(7).map(|&(u, _)| u).chain(rule.last().map(|x| x.0)).collect();
    let mut m = start.next_power_of_two();
    let tail_of = |spec: &[C64]| -> f64 {
        let len = spec.len();
        let lo = 3 * len / 8;
        (lo..len - lo).map(|d| spec[d].norm()).fold(0.0, f64::max)
    };
    let mut alias;
    loop {
        alias = probes.par_iter().map(|&u| tail_of(&sample(m, u))).reduce(|| 0.0, f64::max);
        if alias <= 1e-15 * sup.max(1.0) || m >= 1 << 15 {
            break;
        }
        m *= 2;
    }
    let coeffs: Vec<Vec<C64>> = rule
        .par_iter()
        .map(|&(u, _)| {
            let spec = sample(m, u);
            (-(nmax as i64)..=nmax as i64).map(|d| spec[d.rem_euclid(m as i64) as usize]).collect()
        })
        .collect();
    if coeffs.iter().flatten().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(f.try_eval(&[C64::new(0.0, 0.0)]).err().unwrap_or_else(|| {
            Error::Certification("symbol not finite on the quadrature nodes".into())
        }));
    }
    Ok((coeffs, m, alias))
}

fn generic_assembly(f: &SymbolSpec, basis: &Arc<MultiIndexBasis>) -> Result<Assembled> {
    let t = basis.t();
    let nmax = basis.max_degree();
    let sup = certified_sup(f)?;
    let assemble = |width: f64| -> Result<(DMatrix<C64>, f64)> {
        let scheme = QuadratureScheme::for_degree(t, nmax, sup, &f.radial_breakpoints(), width);
        check_extent(f, scheme.r_max)?;
        let (coeffs, _, alias) = angular_coefficients(f, t, nmax, &scheme.radial, scheme.angular_count, sup)?;
        let phi = phi_table(nmax, &scheme.radial);
        let rows: Vec<Vec<C64>> = (0..=nmax)
            .into_par_iter()
            .map(|m| {
                (0..=nmax)
                    .map(|k| {
                        let d = (m as i64 - k as i64 + nmax as i64) as usize;
                        scheme
                            .radial
                            .iter()
                            .enumerate()
                            .map(|(i, &(_, w))| coeffs[i][d] * (w * phi[i][k] * phi[i][m]))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let a = DMatrix::from_fn(nmax + 1, nmax + 1, |m, k| rows[m][k]);
        Ok((a, scheme.tail_bound + alias))
    };
    let (fine, tail) = assemble(0.125)?;
    let (coarse, _) = assemble(0.25)?;
    let residual = max_abs(&(&fine - &coarse)) + tail;
    Ok(Assembled { matrix: OperatorMatrix::new(basis.clone(), fine)?, path: AssemblyPath::Generic, residual })
}

/// Factor f(z) = prod_i f_i(z_i) for Gaussian-type symbols without the radial
/// power, so that n > 1 assemblies reduce to one-variable ones.
fn separable_factors(f: &SymbolSpec, n: usize) -> Option<Vec<SymbolSpec>> {
    let g = f.gauss_form()?;
    if g.power != 0 {
        return None;
    }
    let amp = g.amplitude;
    Some(
        (0..n)
            .map(|i| SymbolSpec::GaussianType {
                center: vec![g.center.get(i).copied().unwrap_or_default()],
                kappa: g.kappa,
                power: 0,
                amplitude: if i == 0 { amp } else { C64::new(1.0, 0.0) },
            })
            .collect(),
    )
}

fn separable_assembly(parts: &[SymbolSpec], basis: &Arc<MultiIndexBasis>) -> Result<Assembled> {
    let one = MultiIndexBasis::new(FockParams::hilbert(basis.t(), 1)?, basis.max_degree())?;
    let mut mats = Vec::new();
    let mut residual = 0.0;
    for p in parts {
        let a = toeplitz_assembled(p, &one)?;
        residual += a.residual;
        mats.push(a.matrix.into_entries());
    }
    let idx = basis.indices();
    let dim = basis.dim();
    let entries = DMatrix::from_fn(dim, dim, |r, c| {
        mats.iter().enumerate().map(|(i, m)| m[(idx[r][i] as usize, idx[c][i] as usize)]).product()
    });
    Ok(Assembled { matrix: OperatorMatrix::new(basis.clone(), entries)?, path: AssemblyPath::Separable, residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct BerezinValue {
    pub value: C64,
    /// 1 - ||P_N k_z||^2, the kernel mass lost to truncation.
    pub truncation_error: f64,
}

/// <A k_z, k_z> with the truncated kernel renormalized to unit length.
pub fn berezin(a: &OperatorMatrix, z: &[C64]) -> Result<BerezinValue> {
    check_point(a.basis(), z)?;
    let (k, deficit) = normalized_kernel(a.basis(), z);
    let mass = 1.0 - deficit;
    if !(mass > 1e-300) {
        return Err(Error::Certification(format!("kernel at |z|^2 = {} is lost to truncation", crate::fock::sq_norm(z))));
    }
    let ak = a.entries() * &k;
    let v = k.dotc(&ak) / mass;
    Ok(BerezinValue { value: v, truncation_error: deficit })
}

/// alpha_z(A) = W_z A W_{-z} on the truncation. Truncation error sits in the
/// high-degree rows and columns; compare on low-degree blocks.
pub fn shift(a: &OperatorMatrix, z: &[C64]) -> Result<OperatorMatrix> {
    if z.iter().all(|c| c.norm() == 0.0) {
        return Ok(a.clone());
    }
    // the truncated W_{-z} is exactly the adjoint of the truncated W_z
    let w = weyl_matrix(a.basis(), z)?;
    let e = w.entries() * a.entries() * w.entries().adjoint();
    OperatorMatrix::new(a.basis().clone(), e)
}

/// Normalized heat kernel g_s as a symbol.
pub fn heat_kernel_symbol(s: f64, n: usize) -> SymbolSpec {
    SymbolSpec::Gaussian { center: vec![], width: s, amplitude: C64::new((PI * s).powi(-(n as i32)), 0.0) }
}

#[derive(Clone, Debug)]
pub struct ModuleConv {
    pub matrix: OperatorMatrix,
    pub l1_norm: f64,
    /// Difference between two quadrature orders (max entry).
    pub residual: f64,
}

/// f * A = int f(z) alpha_z(A) dz.
///
/// Radial weights in one variable are integrated in polar form: rotating z
/// conjugates W_z by a diagonal phase, so the angular average keeps only the
/// terms with gamma - delta = beta - alpha in
/// sum W_r[beta, gamma] A[gamma, delta] conj(W_r[alpha, delta]),
/// and a one-dimensional radial rule remains. Off-centre Gaussians reduce to
/// this through alpha_c(f) * A = alpha_c(f * A). Other weights use tensor
/// Gauss-Hermite (Gaussians, any n) or a truncated trapezoid rule with a
/// closed-form L^1 tail certificate.
pub fn module_conv(f: &SymbolSpec, a: &OperatorMatrix) -> Result<ModuleConv> {
    let basis = a.basis();
    let n = basis.n();
    let t = basis.t();
    let nmax = basis.max_degree();
    let l1 = l1_norm_of(f, n)?;
    let mut tail_radius = 1.0;
    while f.l1_tail(tail_radius, n).is_some_and(|x| x > 1e-16 * l1.max(1.0)) && tail_radius < 1e3 {
        tail_radius += 0.5;
    }
    if n == 1 {
        if let Some(g) = f.gauss_form() {
            let c = g.center.first().copied().unwrap_or_default();
            if c.norm() > 0.0 {
                let centred = translate(f, &[-c]);
                let inner = module_conv(&centred, a)?;
                return Ok(ModuleConv { matrix: shift(&inner.matrix, &[c])?, ..inner });
            }
        }
        if f.is_radial() {
            let r_max = tail_radius;
            let fine = radial_module(f, a, r_max, 0.125 * t.sqrt())?;
            let coarse = radial_module(f, a, r_max, 0.25 * t.sqrt())?;
            let residual = max_abs(&(&fine - &coarse));
            return Ok(ModuleConv { matrix: OperatorMatrix::new(basis.clone(), fine)?, l1_norm: l1, residual });
        }
    }
    let run = |pts: &[(Vec<C64>, C64)]| -> Result<DMatrix<C64>> {
        let parts = pts
            .par_iter()
            .map(|(z, w)| shift(a, z).map(|m| m.into_entries() * *w))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().fold(DMatrix::zeros(a.dim(), a.dim()), |x, y| x + y))
    };
    let (fine, coarse) = if let Some(g) = f.gauss_form().filter(|g| g.power == 0 && g.kappa.im == 0.0 && g.kappa.re > 0.0) {
        let tensor = |order: usize| -> Vec<(Vec<C64>, C64)> {
            let sc = 1.0 / g.kappa.re.sqrt();
            let rule = gauss_hermite(order);
            let mut pts: Vec<(Vec<C64>, C64)> = vec![(vec![], g.amplitude)];
            for i in 0..n {
                let c = g.center.get(i).copied().unwrap_or_default();
                let mut next = Vec::with_capacity(pts.len() * order * order);
                for (p, w) in &pts {
                    for &(x, wx) in &rule {
                        for &(y, wy) in &rule {
                            let mut q = p.clone();
                            q.push(c + C64::new(x, y) * sc);
                            next.push((q, w * (wx * wy * sc * sc)));
                        }
                    }
                }
                pts = next;
            }
            pts
        };
        let order = nmax + 12;
        (run(&tensor(order))?, run(&tensor(order - 4))?)
    } else {
        if n != 1 {
            return Err(Error::Unsupported("non-Gaussian module weights are implemented for n = 1".into()));
        }
        let grid = |h: f64| -> Vec<(Vec<C64>, C64)> {
            let m = (tail_radius / h).ceil() as i64;
            let mut pts = Vec::new();
            for i in -m..=m {
                for j in -m..=m {
                    let z = C64::new(i as f64 * h, j as f64 * h);
                    let v = f.eval(&[z]);
                    if v.norm() > 0.0 {
                        pts.push((vec![z], v * h * h));
                    }
                }
            }
            pts
        };
        let h = t.sqrt() / 4.0;
        (run(&grid(h))?, run(&grid(2.0 * h))?)
    };
    let residual = max_abs(&(&fine - &coarse));
    Ok(ModuleConv { matrix: OperatorMatrix::new(basis.clone(), fine)?, l1_norm: l1, residual })
}

fn radial_module(f: &SymbolSpec, a: &OperatorMatrix, r_max: f64, width: f64) -> Result<DMatrix<C64>> {
    let dim = a.dim();
    let rule = composite_gl(0.0, r_max, width, 12, &f.radial_breakpoints());
    let ae = a.entries();
    let parts: Vec<DMatrix<C64>> = rule
        .par_iter()
        .map(|&(r, w)| -> Result<DMatrix<C64>> {
            let wr = weyl_matrix(a.basis(), &[C64::new(r, 0.0)])?.into_entries();
            let weight = f.radial_value(r) * (w * TAU * r);
            let mut out = DMatrix::zeros(dim, dim);
            for beta in 0..dim {
                for alpha in 0..dim {
                    let off = beta as i64 - alpha as i64;
                    let mut acc = C64::new(0.0, 0.0);
                    for gamma in 0..dim {
                        let delta = gamma as i64 - off;
                        if delta < 0 || delta as usize >= dim {
                            continue;
                        }
                        let delta = delta as usize;
                        acc += wr[(beta, gamma)] * ae[(gamma, delta)] * wr[(alpha, delta)].conj();
                    }
                    out[(beta, alpha)] = acc * weight;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(DMatrix::zeros(dim, dim), |x, y| x + y))
}

fn l1_norm_of(f: &SymbolSpec, n: usize) -> Result<f64> {
    f.l1_tail(0.0, n).ok_or_else(|| Error::Certification("no closed-form L^1 norm for this weight".into()))
}

/// (u (x) v) g = <g, v> u
pub fn rank_one(u: &TruncatedVector, v: &TruncatedVector) -> Result<OperatorMatrix> {
    check_same(u.basis(), v.basis())?;
    OperatorMatrix::new(u.basis().clone(), u.coeffs() * v.coeffs().adjoint())
}

/// The vacuum projection 1 (x) 1.
pub fn vacuum_projection(basis: &Arc<MultiIndexBasis>) -> OperatorMatrix {
    let mut e = DMatrix::zeros(basis.dim(), basis.dim());
    e[(0, 0)] = C64::new(1.0, 0.0);
    OperatorMatrix::new(basis.clone(), e).unwrap()
}

/// C_{1/lambda} A C_lambda: the same entries on the basis of scale t lambda^2.
pub fn dilation_conjugate(a: &OperatorMatrix, lambda: f64) -> Result<OperatorMatrix> {
    if !(lambda > 0.0) {
        return invalid("dilation factor must be positive");
    }
    let b = a.basis().rescaled(a.basis().t() * lambda * lambda)?;
    a.rebased(b)
}

/// K_s f(z) = f(s z): diagonal s^{|alpha|}.
pub fn k_s_matrix(basis: &Arc<MultiIndexBasis>, s: f64) -> Result<OperatorMatrix> {
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("K_s needs 0 < s < 1, got {s}"));
    }
    let d: Vec<C64> = (0..basis.dim()).map(|i| C64::new(s.powi(basis.degree(i) as i32), 0.0)).collect();
    OperatorMatrix::diagonal(basis.clone(), &d)
}

/// <A k_w, k_z> for an assembled matrix.
pub fn matrix_kernel(a: &OperatorMatrix, w: &[C64], z: &[C64]) -> C64 {
    let (kw, _) = normalized_kernel(a.basis(), w);
    let (kz, _) = normalized_kernel(a.basis(), z);
    kz.dotc(&(a.entries() * kw))
}

/// Af(z) = int f(w) <A K_w, K_z> dmu_t(w), with the kernel supplied in
/// normalized form (w, z) -> <A k_w, k_z>. The result is read back into the
/// basis from values on the circle |z|^2 = t N, where the monomials of
/// degree <= N are best conditioned. One variable.
pub fn integral_apply<F>(kernel: F, v: &TruncatedVector) -> Result<TruncatedVector>
where
    F: Fn(&[C64], &[C64]) -> C64 + Sync,
{
    let basis = v.basis();
    if basis.n() != 1 {
        return Err(Error::Unsupported("integral_apply is implemented for n = 1".into()));
    }
    let t = basis.t();
    let nmax = basis.max_degree();
    let rho = (t * nmax.max(1) as f64).sqrt();
    let a = 2.0 * nmax as f64 + 2.0;
    let mut u_max = a + 10.0;
    while gamma_q(a, u_max) > 1e-17 {
        u_max += 1.0;
    }
    let rule = gaussian_polar_rule(t, u_max, 8 * nmax + 64);
    let fvals: Vec<C64> = rule.iter().map(|(w, _)| v.eval(&[*w])).collect();
    let m = 2 * nmax + 2;
    let samples: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let z = C64::from_polar(rho, TAU * j as f64 / m as f64);
            rule.iter()
                .zip(&fvals)
                .map(|((w, wt), fw)| {
                    let scale = ((z.norm_sqr() + w.norm_sqr()) / (2.0 * t)).exp();
                    fw * kernel(&[*w], &[z]) * (wt * scale)
                })
                .sum()
        })
        .collect();
    let mut buf = samples;
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let coeffs = DVector::from_fn(nmax + 1, |k, _| {
        // e_k(rho e^{ith}) = rho^k e^{ikth} / sqrt(t^k k!)
        let ln_scale = 0.5 * (k as f64 * t.ln() + ln_factorial(k as u64)) - k as f64 * rho.ln();
        buf[k] / m as f64 * ln_scale.exp()
    });
    TruncatedVector::new(basis.clone(), coeffs)
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationFit {
    pub c: f64,
    pub beta: f64,
    /// Distances and the largest |<A k_z, k_w>| seen at each.
    pub profile: Vec<(f64, f64)>,
}

/// Fits |<A k_z, k_w>| <= C / (1 + |z - w|)^beta on a grid of points with
/// |z|^2 <= t N / 4, where the truncated kernels are reliable. beta is the
/// least-squares slope of the log-log upper envelope; C makes the bound hold
/// on every sampled pair.
pub fn localization_fit(a: &OperatorMatrix) -> Result<LocalizationFit> {
    let basis = a.basis();
    if basis.n() != 1 {
        return Err(Error::Unsupported("localization fits are implemented for n = 1".into()));
    }
    let r = (basis.t() * basis.max_degree() as f64 / 4.0).sqrt();
    let mut pts = Vec::new();
    for i in 0..=4 {
        let rr = r * i as f64 / 4.0;
        let count = if i == 0 { 1 } else { 4 * i };
        for j in 0..count {
            pts.push(C64::from_polar(rr, TAU * j as f64 / count as f64));
        }
    }
    let kernels: Vec<DVector<C64>> = pts.iter().map(|p| normalized_kernel(basis, &[*p]).0).collect();
    let images: Vec<DVector<C64>> = kernels.iter().map(|k| a.entries() * k).collect();
    let bins = 12;
    let dmax = 2.0 * r;
    let mut env = vec![0.0f64; bins + 1];
    let mut pairs = Vec::new();
    for (i, zi) in pts.iter().enumerate() {
        for (j, wj) in pts.iter().enumerate() {
            let d = (zi - wj).norm();
            let val = kernels[j].dotc(&images[i]).norm();
            let b = ((d / dmax) * bins as f64).round() as usize;
            env[b.min(bins)] = env[b.min(bins)].max(val);
            pairs.push((d, val));
        }
    }
    let profile: Vec<(f64, f64)> =
        env.iter().enumerate().map(|(b, &v)| (dmax * b as f64 / bins as f64, v)).filter(|p| p.1 > 0.0).collect();
    let usable: Vec<(f64, f64)> =
        profile.iter().filter(|p| p.1 > 1e-300).map(|&(d, v)| ((1.0 + d).ln(), v.ln())).collect();
    let k = usable.len() as f64;
    let (sx, sy) = usable.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / k, sy / k);
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let beta = if sxx > 0.0 { -sxy / sxx } else { 0.0 };
    let c = pairs.iter().map(|&(d, v)| v * (1.0 + d).powf(beta)).fold(0.0, f64::max);
    Ok(LocalizationFit { c, beta, profile })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    ExactSvd,
    ScalarIdentity,
    WitnessSearch,
    EntryBoundOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub p: Exponent,
    pub lower: f64,
    pub upper: f64,
    pub method: NormMethod,
}

/// Largest entry modulus.
pub fn max_abs<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, Cc>>(
    m: &nalgebra::Matrix<C64, R, Cc, S>,
) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Spectral norm of the difference on the degree <= d block.
pub fn block_distance(a: &OperatorMatrix, b: &OperatorMatrix, d: usize) -> Result<f64> {
    check_same(a.basis(), b.basis())?;
    Ok(spectral_norm(&(a.block(d) - b.block(d))))
}

fn scalar_identity(a: &DMatrix<C64>) -> Option<C64> {
    let c = a[(0, 0)];
    let tol = 1e-14 * c.norm().max(1e-300);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let want = if i == j { c } else { C64::new(0.0, 0.0) };
            if (a[(i, j)] - want).norm() > tol {
                return None;
            }
        }
    }
    Some(c)
}

/// Operator norm on the truncation. p = 2 is exact; for p in {1, inf} the
/// lower value is certified by an explicit witness and the upper value is the
/// weighted entry bound 2 sum |A_{ba}| ||e_b||_p ||e_a||_q.
pub fn norm_estimate(a: &OperatorMatrix, p: Exponent, seed: u64) -> Result<NormEstimate> {
    let e = a.entries();
    if let Some(c) = scalar_identity(e) {
        return Ok(NormEstimate { p, lower: c.norm(), upper: c.norm(), method: NormMethod::ScalarIdentity });
    }
    let pv = p.value();
    if pv == 2.0 {
        let s = spectral_norm(e);
        return Ok(NormEstimate { p, lower: s, upper: s, method: NormMethod::ExactSvd });
    }
    let p = if pv.is_infinite() { Exponent::Infinity } else { Exponent::One };
    let basis = a.basis();
    let params = basis.params().with_p(p);
    let q = p.conjugate();
    let np: Vec<f64> = basis.indices().iter().map(|al| bn(&params, al)).collect();
    let nq: Vec<f64> = basis.indices().iter().map(|al| bn(&params.with_p(q), al)).collect();
    let mut upper = 0.0;
    for r in 0..a.dim() {
        for c in 0..a.dim() {
            upper += 2.0 * e[(r, c)].norm() * np[r] * nq[c];
        }
    }
    if basis.n() != 1 {
        return Ok(NormEstimate { p, lower: 0.0, upper, method: NormMethod::EntryBoundOnly });
    }
    let ratio = |v: &DVector<C64>| -> Result<f64> {
        let x = TruncatedVector::new(basis.clone(), v.clone())?;
        let ax = TruncatedVector::new(basis.clone(), e * v)?;
        let nx = fp_norm(&x, p)?;
        let nax = fp_norm(&ax, p)?;
        let lo = (nax.value - nax.error).max(0.0);
        Ok(lo / (nx.value + nx.error))
    };
    let dim = a.dim();
    let mut cands: Vec<DVector<C64>> = (0..dim)
        .map(|i| {
            let mut v = DVector::zeros(dim);
            v[i] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    let r = (basis.t() * basis.max_degree() as f64 / 4.0).sqrt();
    for i in 0..8 {
        cands.push(normalized_kernel(basis, &[C64::from_polar(r * (i % 4) as f64 / 3.0, i as f64)]).0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        cands.push(DVector::from_fn(dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)));
    }
    let scored: Vec<(f64, DVector<C64>)> = cands
        .into_par_iter()
        .map(|v| ratio(&v).map(|s| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    let (mut best, mut v) = scored.into_iter().fold((0.0, DVector::zeros(dim)), |acc, x| if x.0 > acc.0 { x } else { acc });
    // coordinate ascent on the best witness
    let mut step = 0.25 * max_abs(&v).max(1e-3);
    for _ in 0..6 {
        let mut improved = false;
        for i in 0..dim {
            for dir in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
                let mut w = v.clone();
                w[i] += dir * step;
                let s = ratio(&w)?;
                if s > best {
                    best = s;
                    v = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(NormEstimate { p, lower: best, upper: upper.max(best), method: NormMethod::WitnessSearch })
}

fn bn(params: &FockParams, alpha: &[u32]) -> f64 {
    let al: Vec<i64> = alpha.iter().map(|&k| k as i64).collect();
    basis_norm(params, &al).unwrap()
}

/// Smallest N with P(N+1, R^2/t) <= 1e-13, i.e. kernels up to radius R are
/// resolved by the truncation.
pub fn working_degree(t: f64, radius: f64) -> usize {
    let x = radius * radius / t;
    let mut n = 0usize;
    while gamma_p(n as f64 + 1.0, x) > 1e-13 {
        n += 1;
    }
    n
}

/// Operators built from named pieces, so that Berezin symbols are known
/// exactly and assembly can happen on any basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    Toeplitz { symbol: SymbolSpec },
    /// The projection 1 (x) 1 onto constants.
    Vacuum,
    Ks { s: f64 },
    Shift { inner: Box<OperatorSpec>, #[serde(with = "crate::symbols::cnum::vec")] z: Vec<C64> },
    Scale { inner: Box<OperatorSpec>, #[serde(with = "crate::symbols::cnum")] c: C64 },
    Sum { terms: Vec<OperatorSpec> },
}

impl OperatorSpec {
    pub fn assemble(&self, basis: &Arc<MultiIndexBasis>) -> Result<OperatorMatrix> {
        match self {
            OperatorSpec::Identity => Ok(OperatorMatrix::identity(basis.clone())),
            OperatorSpec::Toeplitz { symbol } => toeplitz(symbol, basis),
            OperatorSpec::Vacuum => Ok(vacuum_projection(basis)),
            OperatorSpec::Ks { s } => k_s_matrix(basis, *s),
            OperatorSpec::Shift { inner, z } => match &**inner {
                // exact entries through the translated symbol
                OperatorSpec::Toeplitz { symbol } => toeplitz(&translate(symbol, z), basis),
                other => shift(&other.assemble(basis)?, z),
            },
            OperatorSpec::Scale { inner, c } => Ok(inner.assemble(basis)?.scale(*c)),
            OperatorSpec::Sum { terms } => {
                let mut acc = OperatorMatrix::zeros(basis.clone());
                for t in terms {
                    acc = acc.add(&t.assemble(basis)?)?;
                }
                Ok(acc)
            }
        }
    }

    /// The Berezin transform as a symbol, exact for every variant.
    pub fn berezin_symbol(&self, t: f64) -> SymbolSpec {
        match self {
            OperatorSpec::Identity => SymbolSpec::constant(1.0),
            OperatorSpec::Toeplitz { symbol } => heat_symbol(symbol, t),
            OperatorSpec::Vacuum => SymbolSpec::gaussian(t, vec![]),
            OperatorSpec::Ks { s } => SymbolSpec::gaussian(t / (1.0 - s), vec![]),
            OperatorSpec::Shift { inner, z } => translate(&inner.berezin_symbol(t), z),
            OperatorSpec::Scale { inner, c } => {
                SymbolSpec::product(vec![SymbolSpec::constant(*c), inner.berezin_symbol(t)])
            }
            OperatorSpec::Sum { terms } => SymbolSpec::sum(terms.iter().map(|x| x.berezin_symbol(t)).collect()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            OperatorSpec::Identity => "identity".into(),
            OperatorSpec::Toeplitz { .. } => "toeplitz".into(),
            OperatorSpec::Vacuum => "vacuum".into(),
            OperatorSpec::Ks { s } => format!("k_s({s})"),
            OperatorSpec::Shift { inner, .. } => format!("shift({})", inner.label()),
            OperatorSpec::Scale { inner, .. } => format!("scale({})", inner.label()),
            OperatorSpec::Sum { .. } => "sum".into(),
        }
    }
}

/// Writes a matrix as CSV: a `#` metadata header, then row,col,re,im lines.
pub fn write_matrix_csv(a: &OperatorMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, matrix_csv(a))?;
    Ok(())
}

pub fn matrix_csv(a: &OperatorMatrix) -> String {
    let b = a.basis();
    let mut s = String::new();
    let _ = writeln!(s, "# t={:?},n={},N={},ordering={}", b.t(), b.n(), b.max_degree(), ORDERING_TAG);
    s.push_str("row,col,re,im\n");
    let e = a.entries();
    for r in 0..a.dim() {
        for c in 0..a.dim() {
            let _ = writeln!(s, "{},{},{:?},{:?}", r, c, e[(r, c)].re, e[(r, c)].im);
        }
    }
    s
}

pub fn read_matrix_csv(path: &Path) -> Result<OperatorMatrix> {
    parse_matrix_csv(&std::fs::read_to_string(path)?)
}

pub fn parse_matrix_csv(text: &str) -> Result<OperatorMatrix> {
    let bad = |m: &str| Error::Config(format!("matrix csv: {m}"));
    let mut lines = text.lines();
    let header = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("missing header"))?;
    let (mut t, mut n, mut nmax, mut ord) = (None, None, None, None);
    for kv in header.split(',') {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("malformed header"))?;
        match k.trim() {
            "t" => t = v.parse::<f64>().ok(),
            "n" => n = v.parse::<usize>().ok(),
            "N" => nmax = v.parse::<usize>().ok(),
            "ordering" => ord = Some(v.to_string()),
            other => return Err(bad(&format!("unknown header key {other}"))),
        }
    }
    if ord.as_deref() != Some(ORDERING_TAG) {
        return Err(bad("unsupported ordering"));
    }
    let basis = MultiIndexBasis::new(
        FockParams::hilbert(t.ok_or_else(|| bad("t"))?, n.ok_or_else(|| bad("n"))?)?,
        nmax.ok_or_else(|| bad("N"))?,
    )?;
    if lines.next() != Some("row,col,re,im") {
        return Err(bad("missing column header"));
    }
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for l in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let r: usize = f[0].parse().map_err(|_| bad("row"))?;
        let c: usize = f[1].parse().map_err(|_| bad("col"))?;
        if r >= dim || c >= dim {
            return Err(bad("index out of range"));
        }
        let re: f64 = f[2].parse().map_err(|_| bad("re"))?;
        let im: f64 = f[3].parse().map_err(|_| bad("im"))?;
        m[(r, c)] = C64::new(re, im);
    }
    OperatorMatrix::new(basis, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::RadialProfile;

    fn b1(t: f64, n: usize) -> Arc<MultiIndexBasis> {
        MultiIndexBasis::new(FockParams::hilbert(t, 1).unwrap(), n).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_symbol_is_identity() {
        let b = b1(1.0, 8);
        let a = toeplitz(&SymbolSpec::constant(1.0), &b).unwrap();
        assert_eq!(a.entries(), OperatorMatrix::identity(b).entries());
    }

    #[test]
    fn gaussian_diagonal_closed_form() {
        for &t in &[0.5, 1.0, 2.0] {
            let b = b1(t, 20);
            let a = toeplitz(&SymbolSpec::gaussian(1.0, vec![]), &b).unwrap();
            for k in 0..=20 {
                let want = (t + 1.0).powi(-(k as i32 + 1));
                assert!((a.entries()[(k, k)].re - want).abs() < 1e-12 * want);
            }
        }
    }

    #[test]
    fn generic_path_matches_closed_form() {
        // a Gaussian hidden behind a product is assembled by full quadrature
        let b = b1(1.0, 16);
        let g = SymbolSpec::gaussian(0.8, vec![c(0.7, -0.4)]);
        let exact = toeplitz(&translate(&SymbolSpec::gaussian(0.8, vec![]), &[c(0.7, -0.4)]), &b).unwrap();
        let wrapped = SymbolSpec::product(vec![g.clone(), SymbolSpec::PlaneWave { xi: [0.0, 0.0], amplitude: c(1.0, 0.0) }]);
        let asm = toeplitz_assembled(&wrapped, &b).unwrap();
        assert_eq!(asm.path, AssemblyPath::Generic);
        assert!(max_abs(&(asm.matrix.entries() - exact.entries())) < 1e-12);
        // shifted radial symbol against the Weyl shift on a low block
        let big = b1(1.0, 60);
        let s = shift(&toeplitz(&SymbolSpec::gaussian(0.8, vec![]), &big).unwrap(), &[c(0.7, -0.4)]).unwrap();
        let t = toeplitz(&g, &big).unwrap();
        assert!(block_distance(&s, &t, 16).unwrap() < 1e-10);
    }

    #[test]
    fn radial_quadrature_matches_mode_path() {
        let b = b1(1.0, 20);
        let f = SymbolSpec::radial(RadialProfile::SinSqrt);
        let a = toeplitz_assembled(&f, &b).unwrap();
        assert_eq!(a.path, AssemblyPath::RadialQuadrature);
        assert!(a.residual < 1e-10);
        let m = mode_assembly(&f, &b).unwrap();
        assert!(max_abs(&(a.matrix.entries() - m.matrix.entries())) < 1e-10);
    }

    #[test]
    fn berezin_examples() {
        let b = b1(1.0, 40);
        let z = [c(0.6, -0.8)];
        assert!((berezin(&OperatorMatrix::identity(b.clone()), &z).unwrap().value - 1.0).norm() < 1e-14);
        let r = berezin(&vacuum_projection(&b), &z).unwrap().value;
        assert!((r.re - (-1.0f64).exp()).abs() < 1e-14);
        let ks = berezin(&k_s_matrix(&b, 0.5).unwrap(), &z).unwrap().value;
        assert!((ks.re - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn rank_one_trace() {
        let b = b1(1.0, 5);
        let u = TruncatedVector::new(b.clone(), DVector::from_fn(6, |i, _| c(i as f64, 1.0))).unwrap();
        let v = TruncatedVector::new(b.clone(), DVector::from_fn(6, |i, _| c(1.0, -(i as f64)))).unwrap();
        let r = rank_one(&u, &v).unwrap();
        assert!((r.trace() - u.inner(&v).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn dilation_is_entrywise() {
        let f = SymbolSpec::gaussian(1.0, vec![]);
        let a = toeplitz(&f, &b1(1.0, 12)).unwrap();
        let conj = dilation_conjugate(&a, 2.0).unwrap();
        let want = toeplitz(&dilate(&f, 0.5), &b1(4.0, 12)).unwrap();
        assert!(max_abs(&(conj.entries() - want.entries())) < 1e-12);
        assert_eq!(conj.basis().t(), 4.0);
    }

    #[test]
    fn norm_estimates() {
        let b = b1(1.0, 10);
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let e = norm_estimate(&OperatorMatrix::identity(b.clone()), p, 1).unwrap();
            assert_eq!((e.lower, e.upper), (1.0, 1.0));
        }
        let a = toeplitz(&SymbolSpec::gaussian(1.0, vec![]), &b).unwrap();
        let e = norm_estimate(&a, Exponent::Two, 1).unwrap();
        assert!((e.upper - 0.5).abs() < 1e-12);
        let e1 = norm_estimate(&a, Exponent::One, 1).unwrap();
        assert!(e1.lower <= e1.upper && e1.lower > 0.0);
    }

    #[test]
    fn csv_roundtrip() {
        let b = b1(0.5, 3);
        let a = toeplitz(&SymbolSpec::angular(&[(1, c(0.5, 0.25))], 1.0), &b).unwrap();
        let back = parse_matrix_csv(&matrix_csv(&a)).unwrap();
        assert_eq!(back.entries(), a.entries());
        assert_eq!(back.basis().t(), 0.5);
    }

    #[test]
    fn working_degree_grows_with_radius() {
        assert!(working_degree(1.0, 2.0) < working_degree(1.0, 4.0));
        let n = working_degree(1.0, 8.0);
        assert!((100..=200).contains(&n), "{n}");
    }
}
