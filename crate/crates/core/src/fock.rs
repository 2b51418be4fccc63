//! Truncated Fock space: parameters, the graded monomial basis, kernels,
//! Weyl matrices and F_t^p norms of truncated elements.
//!
//! Basis ordering is graded lexicographic: all multi-indices of degree 0,
//! then degree 1, ..., and inside one degree lexicographically descending in
//! the first coordinate, so (2,0) < (1,1) < (0,2). Matrices follow the
//! convention A[beta, alpha] = <A e_alpha, e_beta>.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{composite_gl, gamma_p, gamma_q, laguerre, ln_factorial, ln_gamma};

pub const ORDERING_TAG: &str = "graded-lex";

/// Norm exponent. `LittleInfinity` is the closed subspace f_t^infinity and
/// shares every numerical routine with `Infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exponent {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Infinity,
    #[serde(rename = "little-inf")]
    LittleInfinity,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Two => 2.0,
            Exponent::Infinity | Exponent::LittleInfinity => f64::INFINITY,
        }
    }

    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::One => Exponent::Infinity,
            Exponent::Two => Exponent::Two,
            Exponent::Infinity | Exponent::LittleInfinity => Exponent::One,
        }
    }

    fn numeric(self) -> Exponent {
        if self == Exponent::LittleInfinity {
            Exponent::Infinity
        } else {
            self
        }
    }

    pub fn parse(s: &str) -> Result<Exponent> {
        match s {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "inf" | "infinity" => Ok(Exponent::Infinity),
            "little-inf" => Ok(Exponent::LittleInfinity),
            _ => invalid(format!("unknown exponent {s:?}")),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Exponent::One => "1",
            Exponent::Two => "2",
            Exponent::Infinity => "inf",
            Exponent::LittleInfinity => "little-inf",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct FockParams {
    t: f64,
    n: usize,
    p: Exponent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    t: f64,
    n: usize,
    #[serde(default = "default_p")]
    p: Exponent,
}

fn default_p() -> Exponent {
    Exponent::Two
}

impl TryFrom<RawParams> for FockParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        FockParams::new(r.t, r.n, r.p)
    }
}

impl FockParams {
    pub fn new(t: f64, n: usize, p: Exponent) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return invalid(format!("t must be positive, got {t}"));
        }
        if n == 0 {
            return invalid("n must be at least 1");
        }
        Ok(Self { t, n, p })
    }

    /// Shorthand for p = 2.
    pub fn hilbert(t: f64, n: usize) -> Result<Self> {
        Self::new(t, n, Exponent::Two)
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn with_p(&self, p: Exponent) -> Self {
        Self { p, ..*self }
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(t, self.n, self.p)
    }
}

#[derive(Debug)]
pub struct MultiIndexBasis {
    params: FockParams,
    max_degree: usize,
    indices: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl MultiIndexBasis {
    pub fn new(params: FockParams, max_degree: usize) -> Result<Arc<Self>> {
        let n = params.n;
        let dim = dimension(n, max_degree);
        if dim > 200_000 {
            return invalid(format!("basis dimension {dim} too large"));
        }
        let mut indices = Vec::with_capacity(dim);
        for d in 0..=max_degree {
            let mut cur = vec![0u32; n];
            push_compositions(d as u32, 0, &mut cur, &mut indices);
        }
        let lookup = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Arc::new(Self { params, max_degree, indices, lookup }))
    }

    pub fn params(&self) -> FockParams {
        self.params
    }
    pub fn t(&self) -> f64 {
        self.params.t
    }
    pub fn n(&self) -> usize {
        self.params.n
    }
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }
    pub fn index(&self, i: usize) -> &[u32] {
        &self.indices[i]
    }
    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].iter().map(|&a| a as usize).sum()
    }
    pub fn position(&self, alpha: &[u32]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of leading basis elements of degree at most `d`.
    pub fn block_len(&self, d: usize) -> usize {
        dimension(self.params.n, d.min(self.max_degree))
    }

    /// Same indices, different Gaussian scale.
    pub fn rescaled(&self, t: f64) -> Result<Arc<Self>> {
        MultiIndexBasis::new(self.params.with_t(t)?, self.max_degree)
    }

    pub fn same_as(&self, other: &MultiIndexBasis) -> bool {
        self.params == other.params && self.max_degree == other.max_degree
    }
}

fn push_compositions(rest: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = rest;
        out.push(cur.clone());
        return;
    }
    for a in (0..=rest).rev() {
        cur[pos] = a;
        push_compositions(rest - a, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// binomial(N + n, n)
pub fn dimension(n: usize, max_degree: usize) -> usize {
    let mut d: u128 = 1;
    for i in 1..=n as u128 {
        d = d * (max_degree as u128 + i) / i;
    }
    d as usize
}

#[derive(Clone, Debug)]
pub struct TruncatedVector {
    basis: Arc<MultiIndexBasis>,
    coeffs: DVector<C64>,
}

impl TruncatedVector {
    pub fn new(basis: Arc<MultiIndexBasis>, coeffs: DVector<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "{} coefficients for a basis of dimension {}",
                coeffs.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis_element(basis: Arc<MultiIndexBasis>, alpha: &[u32]) -> Result<Self> {
        let i = basis
            .position(alpha)
            .ok_or_else(|| Error::InvalidParameter(format!("multi-index {alpha:?} not in basis")))?;
        let mut c = DVector::zeros(basis.dim());
        c[i] = C64::new(1.0, 0.0);
        Self::new(basis, c)
    }

    pub fn basis(&self) -> &Arc<MultiIndexBasis> {
        &self.basis
    }
    pub fn coeffs(&self) -> &DVector<C64> {
        &self.coeffs
    }

    /// <self, other> in F_t^2.
    pub fn inner(&self, other: &TruncatedVector) -> Result<C64> {
        check_same(&self.basis, &other.basis)?;
        Ok(self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Pointwise value f(z).
    pub fn eval(&self, z: &[C64]) -> C64 {
        let vals = basis_values(&self.basis, z, false);
        self.coeffs.iter().zip(vals).map(|(c, e)| c * e).sum()
    }
}

pub(crate) fn check_same(a: &MultiIndexBasis, b: &MultiIndexBasis) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::BasisMismatch(format!(
            "(t={}, n={}, N={}) vs (t={}, n={}, N={})",
            a.t(),
            a.n(),
            a.max_degree(),
            b.t(),
            b.n(),
            b.max_degree()
        )))
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<MultiIndexBasis>,
    entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn new(basis: Arc<MultiIndexBasis>, entries: DMatrix<C64>) -> Result<Self> {
        let d = basis.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::BasisMismatch(format!(
                "matrix {}x{} for basis dimension {d}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { basis, entries })
    }

    pub fn identity(basis: Arc<MultiIndexBasis>) -> Self {
        let d = basis.dim();
        Self { basis, entries: DMatrix::identity(d, d) }
    }

    pub fn zeros(basis: Arc<MultiIndexBasis>) -> Self {
        let d = basis.dim();
        Self { basis, entries: DMatrix::zeros(d, d) }
    }

    pub fn diagonal(basis: Arc<MultiIndexBasis>, diag: &[C64]) -> Result<Self> {
        if diag.len() != basis.dim() {
            return Err(Error::BasisMismatch("diagonal length".into()));
        }
        let entries = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        Ok(Self { basis, entries })
    }

    pub fn basis(&self) -> &Arc<MultiIndexBasis> {
        &self.basis
    }
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }
    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &TruncatedVector) -> Result<TruncatedVector> {
        check_same(&self.basis, v.basis())?;
        TruncatedVector::new(self.basis.clone(), &self.entries * v.coeffs())
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(&self.basis, &other.basis)?;
        Ok(Self { basis: self.basis.clone(), entries: &self.entries * &other.entries })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(&self.basis, &other.basis)?;
        Ok(Self { basis: self.basis.clone(), entries: &self.entries + &other.entries })
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_same(&self.basis, &other.basis)?;
        Ok(Self { basis: self.basis.clone(), entries: &self.entries - &other.entries })
    }

    pub fn scale(&self, c: C64) -> OperatorMatrix {
        Self { basis: self.basis.clone(), entries: &self.entries * c }
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        Self { basis: self.basis.clone(), entries: self.entries.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Leading block of all degrees <= d.
    pub fn block(&self, d: usize) -> DMatrix<C64> {
        let k = self.basis.block_len(d);
        self.entries.view((0, 0), (k, k)).into_owned()
    }

    /// Compression to the basis of degrees <= d.
    pub fn truncate(&self, d: usize) -> Result<OperatorMatrix> {
        let basis = MultiIndexBasis::new(self.basis.params(), d.min(self.basis.max_degree()))?;
        let entries = self.block(d);
        OperatorMatrix::new(basis, entries)
    }

    /// Same entries, reinterpreted on another basis with identical indices.
    pub fn rebased(&self, basis: Arc<MultiIndexBasis>) -> Result<OperatorMatrix> {
        if basis.n() != self.basis.n() || basis.max_degree() != self.basis.max_degree() {
            return Err(Error::BasisMismatch("rebasing needs identical index sets".into()));
        }
        OperatorMatrix::new(basis, self.entries.clone())
    }
}

/// Values e_alpha(z), optionally multiplied by e^{-|z|^2/2t}. Computed in the
/// log domain so large degrees and radii neither overflow nor underflow early.
pub fn basis_values(basis: &MultiIndexBasis, z: &[C64], normalized: bool) -> Vec<C64> {
    let n = basis.n();
    let t = basis.t();
    let nmax = basis.max_degree();
    let per: Vec<Vec<C64>> = (0..n).map(|i| basis_1d(t, z[i], nmax, normalized)).collect();
    basis
        .indices()
        .iter()
        .map(|a| a.iter().enumerate().map(|(i, &k)| per[i][k as usize]).product())
        .collect()
}

fn basis_1d(t: f64, z: C64, nmax: usize, normalized: bool) -> Vec<C64> {
    let r2 = z.norm_sqr();
    let shift = if normalized { -r2 / (2.0 * t) } else { 0.0 };
    let mut out = vec![C64::new(0.0, 0.0); nmax + 1];
    if r2 == 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    let lr = 0.5 * r2.ln();
    let th = z.arg();
    let lt = t.ln();
    for (k, o) in out.iter_mut().enumerate() {
        let kf = k as f64;
        let lm = kf * lr - 0.5 * (kf * lt + ln_factorial(k as u64)) + shift;
        *o = C64::from_polar(lm.exp(), kf * th);
    }
    out
}

/// Norm of a basis element e_alpha in F_t^p (t-independent). Negative
/// degrees are rejected.
pub fn basis_norm(params: &FockParams, alpha: &[i64]) -> Result<f64> {
    if alpha.len() != params.n() {
        return invalid(format!("multi-index of length {} for n = {}", alpha.len(), params.n()));
    }
    let mut log = 0.0;
    for &k in alpha {
        if k < 0 {
            return Err(Error::NegativeDegree(k));
        }
        log += ln_basis_norm_1d(params.p(), k as u64);
    }
    Ok(log.exp())
}

pub(crate) fn ln_basis_norm_1d(p: Exponent, k: u64) -> f64 {
    let kf = k as f64;
    match p.numeric() {
        Exponent::Two => 0.0,
        Exponent::One => 0.5 * kf * 2f64.ln() + ln_gamma(0.5 * kf + 1.0) - 0.5 * ln_factorial(k),
        _ => {
            if k == 0 {
                0.0
            } else {
                0.5 * kf * kf.ln() - 0.5 * kf - 0.5 * ln_factorial(k)
            }
        }
    }
}

/// K_z(w) = exp(w . conj(z) / t), or the normalized k_z(w) which carries the
/// extra factor exp(-|z|^2 / 2t).
pub fn kernel_eval(params: &FockParams, z: &[C64], w: &[C64], normalized: bool) -> C64 {
    let t = params.t();
    let mut e: C64 = z.iter().zip(w).map(|(zi, wi)| wi * zi.conj()).sum::<C64>() / t;
    if normalized {
        e -= sq_norm(z) / (2.0 * t);
    }
    e.exp()
}

pub(crate) fn sq_norm(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

#[derive(Clone, Debug)]
pub struct KernelExpansion {
    pub vector: TruncatedVector,
    /// F_t^2 norm of the discarded tail.
    pub truncation_error: f64,
}

/// Truncated expansion of K_z: coefficients conj(e_alpha(z)).
pub fn kernel_expand(basis: &Arc<MultiIndexBasis>, z: &[C64]) -> Result<KernelExpansion> {
    check_point(basis, z)?;
    let vals = basis_values(basis, z, false);
    let coeffs = DVector::from_iterator(vals.len(), vals.into_iter().map(|c| c.conj()));
    let x = sq_norm(z) / basis.t();
    let err2 = (x.exp()) * gamma_p(basis.max_degree() as f64 + 1.0, x);
    Ok(KernelExpansion {
        vector: TruncatedVector::new(basis.clone(), coeffs)?,
        truncation_error: err2.max(0.0).sqrt(),
    })
}

/// Coefficients of the normalized kernel k_z on the truncated basis, plus the
/// missing squared mass 1 - ||P_N k_z||^2.
pub fn normalized_kernel(basis: &MultiIndexBasis, z: &[C64]) -> (DVector<C64>, f64) {
    let vals = basis_values(basis, z, true);
    let x = sq_norm(z) / basis.t();
    let deficit = gamma_p(basis.max_degree() as f64 + 1.0, x);
    (DVector::from_iterator(vals.len(), vals.into_iter().map(|c| c.conj())), deficit)
}

pub(crate) fn check_point(basis: &MultiIndexBasis, z: &[C64]) -> Result<()> {
    if z.len() != basis.n() {
        return invalid(format!("point of dimension {} for n = {}", z.len(), basis.n()));
    }
    Ok(())
}

/// Matrix of the Weyl operator W_z g(w) = k_z(w) g(w - z). In one variable it
/// is the displacement operator D(a) with a = conj(z)/sqrt(t); for n > 1 each
/// entry is the product of one-variable entries over the coordinates, i.e. the
/// Kronecker product restricted to the graded index set.
pub fn weyl_matrix(basis: &Arc<MultiIndexBasis>, z: &[C64]) -> Result<OperatorMatrix> {
    check_point(basis, z)?;
    let nmax = basis.max_degree();
    let per: Vec<DMatrix<C64>> = z.iter().map(|&zi| weyl_1d(basis.t(), zi, nmax)).collect();
    let dim = basis.dim();
    let idx = basis.indices();
    let entries = DMatrix::from_fn(dim, dim, |r, c| {
        let (b, a) = (&idx[r], &idx[c]);
        per.iter().enumerate().map(|(i, m)| m[(b[i] as usize, a[i] as usize)]).product()
    });
    OperatorMatrix::new(basis.clone(), entries)
}

fn weyl_1d(t: f64, z: C64, nmax: usize) -> DMatrix<C64> {
    let a = z.conj() / t.sqrt();
    let x = a.norm_sqr();
    if x == 0.0 {
        return DMatrix::identity(nmax + 1, nmax + 1);
    }
    let la = 0.5 * x.ln();
    let ph = a / a.norm();
    let mph = -ph.conj();
    DMatrix::from_fn(nmax + 1, nmax + 1, |m, k| {
        let (lo, hi) = if m >= k { (k, m) } else { (m, k) };
        let d = (hi - lo) as f64;
        let mag = (0.5 * (ln_factorial(lo as u64) - ln_factorial(hi as u64)) + d * la - 0.5 * x).exp();
        let lag = laguerre(lo, d, x);
        let phase = if m >= k { ph.powu((m - k) as u32) } else { mph.powu((k - m) as u32) };
        phase * (mag * lag)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormValue {
    pub value: f64,
    /// Estimated error: rule-refinement difference plus certified tail.
    pub error: f64,
    pub radius: f64,
    pub radial_nodes: usize,
    pub angular_count: usize,
}

/// ||v||_{F_t^p}. Exact for p = 2; for p = 1 a polar quadrature with an
/// analytic tail bound; for p = infinity a refined polar grid search, polished
/// locally, with an analytic bound outside the search radius. The p = 1 and
/// p = infinity paths are implemented for n = 1.
pub fn fp_norm(v: &TruncatedVector, p: Exponent) -> Result<NormValue> {
    fp_norm_tol(v, p, 1e-12)
}

pub fn fp_norm_tol(v: &TruncatedVector, p: Exponent, tol: f64) -> Result<NormValue> {
    let p = p.numeric();
    if p == Exponent::Two {
        return Ok(NormValue { value: v.norm2(), error: 0.0, radius: 0.0, radial_nodes: 0, angular_count: 0 });
    }
    if v.basis().n() != 1 {
        return Err(Error::Unsupported("F^1 and F^infinity norms are implemented for n = 1".into()));
    }
    let c: Vec<C64> = v.coeffs().iter().copied().collect();
    if c.iter().all(|x| x.norm() == 0.0) {
        return Ok(NormValue { value: 0.0, error: 0.0, radius: 0.0, radial_nodes: 0, angular_count: 0 });
    }
    let profile = ScaledPoly::new(&c);
    match p {
        Exponent::One => l1_norm(&profile, tol),
        _ => sup_norm(&profile, tol),
    }
}

/// F(rho, th) = sum_k c_k rho^k e^{ik th} / sqrt(k!), the t-free form of a
/// truncated element evaluated at z = sqrt(t) rho e^{i th}.
struct ScaledPoly {
    c: Vec<C64>,
    lnfact: Vec<f64>,
    /// Indices of the nonzero coefficients.
    support: Vec<usize>,
}

impl ScaledPoly {
    fn new(c: &[C64]) -> Self {
        let lnfact = (0..c.len()).map(|k| 0.5 * ln_factorial(k as u64)).collect();
        let support = (0..c.len()).filter(|&k| c[k].norm() != 0.0).collect();
        Self { c: c.to_vec(), lnfact, support }
    }

    fn degree(&self) -> usize {
        self.c.len() - 1
    }

    /// Radial factors rho^k e^{-rho^2/2} / sqrt(k!).
    fn radial(&self, rho: f64) -> Vec<f64> {
        if rho == 0.0 {
            let mut v = vec![0.0; self.c.len()];
            v[0] = 1.0;
            return v;
        }
        let lr = rho.ln();
        let g = -0.5 * rho * rho;
        let mut v = vec![0.0; self.c.len()];
        for &k in &self.support {
            v[k] = (k as f64 * lr - self.lnfact[k] + g).exp();
        }
        v
    }

    /// |F| e^{-rho^2/2} at one point.
    fn weighted_abs(&self, rho: f64, th: f64) -> f64 {
        let r = self.radial(rho);
        let mut s = C64::new(0.0, 0.0);
        for &k in &self.support {
            if r[k] != 0.0 {
                s += self.c[k] * C64::from_polar(r[k], k as f64 * th);
            }
        }
        s.norm()
    }

    /// |F| e^{-rho^2/2} on a uniform angular grid.
    fn weighted_abs_ring(&self, rho: f64, twiddle: &[Vec<C64>]) -> Vec<f64> {
        let r = self.radial(rho);
        twiddle
            .iter()
            .map(|tw| {
                let mut s = C64::new(0.0, 0.0);
                for &k in &self.support {
                    if r[k] != 0.0 {
                        s += self.c[k] * tw[k] * r[k];
                    }
                }
                s.norm()
            })
            .collect()
    }
}

fn twiddles(count: usize, degree: usize) -> Vec<Vec<C64>> {
    (0..count)
        .map(|j| {
            let th = TAU * j as f64 / count as f64;
            (0..=degree).map(|k| C64::from_polar(1.0, k as f64 * th)).collect()
        })
        .collect()
}

fn l1_norm(f: &ScaledPoly, tol: f64) -> Result<NormValue> {
    let n = f.degree();
    // certified lower bound: |c_k| <= 2 ||f||_1 ||e_k||_inf
    let lower = f
        .c
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() / (2.0 * ln_basis_norm_1d(Exponent::Infinity, k as u64).exp()))
        .fold(0.0, f64::max);
    let tail = |r: f64| -> f64 {
        f.c.iter()
            .enumerate()
            .map(|(k, c)| {
                let a = 0.5 * k as f64 + 1.0;
                c.norm() * (ln_basis_norm_1d(Exponent::One, k as u64).exp()) * gamma_q(a, 0.5 * r * r)
            })
            .sum()
    };
    let mut radius = (2.0 * (n as f64 + 1.0)).sqrt() + 4.0;
    while tail(radius) > 0.25 * tol * lower {
        radius += 1.0;
        if radius > 1e4 {
            return Err(Error::Certification("F^1 tail bound could not be certified".into()));
        }
    }
    let integrate = |width: f64, count: usize| -> (f64, usize) {
        let rule = composite_gl(0.0, radius, width, 10, &[]);
        let tw = twiddles(count, n);
        let s: f64 = rule
            .iter()
            .map(|&(rho, w)| {
                let ring = f.weighted_abs_ring(rho, &tw);
                w * rho * ring.iter().sum::<f64>() / count as f64
            })
            .sum();
        (s, rule.len())
    };
    let m0 = (4 * n + 16).max(64);
    let (coarse, _) = integrate(0.5, m0);
    let (fine, nodes) = integrate(0.25, 2 * m0);
    let err = (fine - coarse).abs() + tail(radius);
    Ok(NormValue { value: fine, error: err, radius, radial_nodes: nodes, angular_count: 2 * m0 })
}

fn sup_norm(f: &ScaledPoly, tol: f64) -> Result<NormValue> {
    let n = f.degree();
    let lower = f
        .c
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() / (2.0 * ln_basis_norm_1d(Exponent::One, k as u64).exp()))
        .fold(0.0, f64::max);
    let sum_abs = |r: f64| -> f64 { f.radial(r).iter().zip(&f.c).map(|(a, c)| a * c.norm()).sum() };
    let mut radius = (n as f64).sqrt() + 4.0;
    while sum_abs(radius) > 0.25 * tol * lower {
        radius += 0.5;
        if radius > 1e4 {
            return Err(Error::Certification("F^infinity tail bound could not be certified".into()));
        }
    }
    let mut nr = 64usize;
    let mut nt = (4 * n + 8).max(64);
    let mut prev: Option<f64> = None;
    let mut best = 0.0;
    let mut diff = f64::INFINITY;
    for _ in 0..6 {
        best = grid_sup(f, radius, nr, nt);
        if let Some(p) = prev {
            diff = (best - p).abs();
            if diff <= tol * best {
                break;
            }
        }
        prev = Some(best);
        nr *= 2;
        nt *= 2;
    }
    let err = if diff.is_finite() { diff } else { best } + sum_abs(radius);
    Ok(NormValue { value: best, error: err, radius, radial_nodes: nr, angular_count: nt })
}

fn grid_sup(f: &ScaledPoly, radius: f64, nr: usize, nt: usize) -> f64 {
    let tw = twiddles(nt, f.degree());
    let dr = radius / nr as f64;
    let dt = TAU / nt as f64;
    let mut cands: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..=nr {
        let rho = i as f64 * dr;
        let ring = f.weighted_abs_ring(rho, &tw);
        for (j, v) in ring.into_iter().enumerate() {
            cands.push((v, rho, j as f64 * dt));
        }
    }
    cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut best = cands[0].0;
    for &(_, rho, th) in cands.iter().take(6) {
        best = best.max(polish(f, rho, th, dr, dt));
    }
    best
}

/// Alternating golden-section refinement in rho and theta around a grid point.
fn polish(f: &ScaledPoly, rho0: f64, th0: f64, dr: f64, dt: f64) -> f64 {
    let (mut rho, mut th) = (rho0, th0);
    let (mut hr, mut ht) = (dr, dt);
    let mut val = f.weighted_abs(rho, th);
    for _ in 0..40 {
        let (r1, v1) = golden(|r| f.weighted_abs(r, th), (rho - hr).max(0.0), rho + hr);
        if v1 >= val {
            rho = r1;
            val = v1;
        }
        let (t1, v2) = golden(|a| f.weighted_abs(rho, a), th - ht, th + ht);
        if v2 >= val {
            th = t1;
            val = v2;
        }
        hr *= 0.5;
        ht *= 0.5;
        if hr < 1e-10 && ht < 1e-10 {
            break;
        }
    }
    val
}

fn golden(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = g(x1);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Normalized Gaussian measure (1/pi t) e^{-|z|^2/t} dz in polar form, used by
/// tests and the integral-kernel code: returns (z, weight) pairs for n = 1.
pub fn gaussian_polar_rule(t: f64, u_max: f64, angular: usize) -> Vec<(C64, f64)> {
    let radial = composite_gl(0.0, u_max, 1.0, 12, &[]);
    let mut out = Vec::with_capacity(radial.len() * angular);
    for &(u, w) in &radial {
        let r = (t * u).sqrt();
        let wu = w * (-u).exp() / angular as f64;
        for j in 0..angular {
            let th = TAU * j as f64 / angular as f64;
            out.push((C64::from_polar(r, th), wu));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b1(t: f64, n: usize) -> Arc<MultiIndexBasis> {
        MultiIndexBasis::new(FockParams::hilbert(t, 1).unwrap(), n).unwrap()
    }

    #[test]
    fn graded_lex_order() {
        let b = MultiIndexBasis::new(FockParams::hilbert(1.0, 2).unwrap(), 2).unwrap();
        let want: Vec<Vec<u32>> = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
        assert_eq!(b.indices(), &want[..]);
        assert_eq!(b.dim(), dimension(2, 2));
        assert_eq!(dimension(3, 4), 35);
        assert_eq!(b.block_len(1), 3);
    }

    #[test]
    fn params_validation() {
        assert!(FockParams::hilbert(0.0, 1).is_err());
        assert!(FockParams::hilbert(1.0, 0).is_err());
        assert!(FockParams::hilbert(-1.0, 2).is_err());
    }

    #[test]
    fn basis_norm_examples() {
        let p1 = FockParams::new(1.0, 1, Exponent::One).unwrap();
        let pi = FockParams::new(1.0, 1, Exponent::Infinity).unwrap();
        let p2 = FockParams::new(3.0, 1, Exponent::Two).unwrap();
        assert_eq!(basis_norm(&p2, &[7]).unwrap(), 1.0);
        assert!((basis_norm(&p1, &[0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((basis_norm(&pi, &[0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((basis_norm(&p1, &[2]).unwrap() - 2f64.sqrt()).abs() < 1e-13);
        assert!((basis_norm(&pi, &[2]).unwrap() - 2f64.sqrt() / 1f64.exp()).abs() < 1e-13);
        assert!(matches!(basis_norm(&p1, &[-1]), Err(Error::NegativeDegree(-1))));
        // large degrees stay finite
        assert!(basis_norm(&pi, &[400]).unwrap().is_finite());
    }

    #[test]
    fn kernel_expansion_tail() {
        let b = b1(1.0, 0);
        let k = kernel_expand(&b, &[C64::new(1.0, 0.0)]).unwrap();
        assert!((k.truncation_error.powi(2) - (1f64.exp() - 1.0)).abs() < 1e-12);
        let b = b1(1.0, 10);
        let k = kernel_expand(&b, &[C64::new(0.0, 0.0)]).unwrap();
        assert_eq!(k.vector.coeffs()[0], C64::new(1.0, 0.0));
        assert!(k.vector.coeffs().iter().skip(1).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn weyl_identity_at_zero_and_corner() {
        let b = b1(0.7, 8);
        let w = weyl_matrix(&b, &[C64::new(0.0, 0.0)]).unwrap();
        assert!((w.entries() - DMatrix::identity(9, 9)).norm() < 1e-15);
        let z = C64::new(0.4, -1.1);
        let w = weyl_matrix(&b, &[z]).unwrap();
        let want = (-z.norm_sqr() / (2.0 * 0.7)).exp();
        assert!((w.entries()[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn p2_norm_is_coefficient_norm() {
        let b = b1(1.0, 3);
        let v = TruncatedVector::new(b, DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0), 0.0.into(), 0.0.into()])).unwrap();
        assert_eq!(fp_norm(&v, Exponent::Two).unwrap().value, 5.0);
    }
}
