//! Heat-kernel deconvolution witnesses, operator reconstruction from Berezin
//! symbols, the diagonal nuclear operator T_0 and Berger-Coburn ratios.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fock::{basis_norm, Exponent, MultiIndexBasis, OperatorMatrix};
use crate::operators::{
    block_distance, heat_kernel_symbol, module_conv, norm_estimate, shift, spectral_norm, toeplitz,
    working_degree, NormEstimate, OperatorSpec,
};
use crate::special::{binomial, composite_gl, erfc};
use crate::symbols::{check_tag, heat_sup, heat_symbol, heat_transform, translate, SymbolSpec, Tag, TagCheck};
use crate::C64;

/// Environment variable naming the directory for cached approximants.
pub const WIENER_CACHE_ENV: &str = "FOCKBENCH_WIENER_CACHE";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WienerSearch {
    /// Initial lattice spacing, in units of sqrt(t).
    pub spacing: f64,
    /// Initial half-width of the lattice box, in units of sqrt(t).
    pub extent: f64,
    /// Refinement rounds: each one shrinks the spacing and widens the box.
    pub rounds: usize,
    pub ridge: f64,
    pub irls_iterations: usize,
    /// Randomly perturbed restarts of the reweighting, per round.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for WienerSearch {
    fn default() -> Self {
        Self { spacing: 0.5, extent: 2.0, rounds: 4, ridge: 1e-12, irls_iterations: 40, restarts: 2, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerTerm {
    #[serde(with = "crate::symbols::cnum")]
    pub c: C64,
    #[serde(with = "crate::symbols::cnum")]
    pub z: C64,
}

/// Coefficients with g_{t/N} ~ sum_j c_j g_t(. - z_j) in L^1(C).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerApproximant {
    pub t: f64,
    pub level: usize,
    pub n: usize,
    pub terms: Vec<WienerTerm>,
    /// Certified upper bound on the L^1 error.
    pub l1_error: f64,
    pub spacing: f64,
    pub extent: f64,
    pub success: bool,
}

impl WienerApproximant {
    pub fn coefficient_sum(&self) -> C64 {
        self.terms.iter().map(|x| x.c).sum()
    }

    pub fn max_shift(&self) -> f64 {
        self.terms.iter().map(|x| x.z.norm()).fold(0.0, f64::max)
    }
}

fn gauss(s: f64, x: f64, y: f64) -> f64 {
    (-(x * x + y * y) / s).exp() / (PI * s)
}

/// Lattice points grouped by orbits of the symmetry group of the square.
fn orbits(m: i64) -> Vec<Vec<(i64, i64)>> {
    let mut out = Vec::new();
    for i in 0..=m {
        for j in 0..=i {
            let mut pts: Vec<(i64, i64)> = Vec::new();
            for (a, b) in [(i, j), (j, i)] {
                for sa in [1, -1] {
                    for sb in [1, -1] {
                        let p = (sa * a, sb * b);
                        if !pts.contains(&p) {
                            pts.push(p);
                        }
                    }
                }
            }
            out.push(pts);
        }
    }
    out
}

/// Inverse Fourier transform of exp(a |xi|^2) exp(-(|xi|/cut)^8) at radius r,
/// the band-limited deconvolution density used to seed the fit.
fn division_density(a: f64, cut: f64, r: f64) -> f64 {
    let rule = composite_gl(0.0, 1.6 * cut, cut / 40.0, 8, &[]);
    rule.iter()
        .map(|&(xi, w)| w * (a * xi * xi - (xi / cut).powi(8)).exp() * libm::j0(xi * r) * xi)
        .sum::<f64>()
        / (2.0 * PI)
}

struct Fit {
    coeffs: Vec<f64>,
    l1: f64,
}

/// Residual r(w) = g_{t/N}(w) - sum_o c_o sum_{z in o} g_t(w - z).
fn residual_at(t: f64, level: usize, pts: &[Vec<(f64, f64)>], c: &[f64], x: f64, y: f64) -> f64 {
    let mut v = gauss(t / level as f64, x, y);
    for (o, ps) in pts.iter().enumerate() {
        if c[o] == 0.0 {
            continue;
        }
        let s: f64 = ps.iter().map(|&(a, b)| gauss(t, x - a, y - b)).sum();
        v -= c[o] * s;
    }
    v
}

/// Certified L^1 norm of the residual: symmetric quadrature on [0, B]^2 at
/// two panel widths, plus erfc bounds for the mass outside the box.
fn certify(t: f64, level: usize, pts: &[Vec<(f64, f64)>], c: &[f64], half: f64) -> f64 {
    let s_min = t / level as f64;
    let run = |width: f64| -> f64 {
        let rule = composite_gl(0.0, half, width, 8, &[]);
        // collected in order so the sum does not depend on scheduling
        let rows: Vec<f64> = rule
            .par_iter()
            .map(|&(x, wx)| rule.iter().map(|&(y, wy)| wx * wy * residual_at(t, level, pts, c, x, y).abs()).sum::<f64>())
            .collect();
        rows.iter().sum::<f64>() * 4.0
    };
    let w = 0.25 * s_min.sqrt();
    let fine = run(w);
    let coarse = run(2.0 * w);
    // mass of g_s(. - z) outside the box, by a union bound over coordinates
    let outside = |s: f64, a: f64, b: f64| -> f64 {
        let one = |u: f64| 0.5 * erfc((half - u) / s.sqrt()) + 0.5 * erfc((half + u) / s.sqrt());
        (one(a) + one(b)).min(1.0)
    };
    let mut tail = outside(s_min, 0.0, 0.0);
    for (o, ps) in pts.iter().enumerate() {
        tail += c[o].abs() * ps.iter().map(|&(a, b)| outside(t, a, b)).sum::<f64>();
    }
    fine + (fine - coarse).abs() + tail
}

fn fit_round(t: f64, level: usize, h: f64, m: i64, search: &WienerSearch, rng: &mut ChaCha8Rng) -> Fit {
    let groups = orbits(m);
    let pts: Vec<Vec<(f64, f64)>> =
        groups.iter().map(|g| g.iter().map(|&(i, j)| (i as f64 * h, j as f64 * h)).collect()).collect();
    let s_min = t / level as f64;
    let half = m as f64 * h + 6.0 * t.sqrt();
    // fitting rows: a midpoint grid on the symmetric quarter
    let step = 0.25 * s_min.sqrt().min(h);
    let count = (half / step).ceil() as usize;
    let rows: Vec<(f64, f64)> = (0..count)
        .flat_map(|i| (0..count).map(move |j| ((i as f64 + 0.5) * step, (j as f64 + 0.5) * step)))
        .collect();
    let design = DMatrix::from_fn(rows.len(), pts.len(), |r, o| {
        let (x, y) = rows[r];
        pts[o].iter().map(|&(a, b)| gauss(t, x - a, y - b)).sum::<f64>() * step
    });
    let target = DVector::from_fn(rows.len(), |r, _| gauss(s_min, rows[r].0, rows[r].1) * step);

    // seed from the band-limited division density
    let a = (t - s_min) / 4.0;
    let cut = (4.0 * level as f64 * 30f64.ln() / t).sqrt().min(0.9 * PI / h);
    let seed: Vec<f64> = pts.iter().map(|ps| division_density(a, cut, (ps[0].0.powi(2) + ps[0].1.powi(2)).sqrt()) * h * h).collect();

    let solve = |weights: &DVector<f64>| -> Option<Vec<f64>> {
        let mut m = design.clone();
        let mut b = target.clone();
        for r in 0..rows.len() {
            m.row_mut(r).scale_mut(weights[r]);
            b[r] *= weights[r];
        }
        let scale = m.norm().max(1e-300);
        let mut normal = m.transpose() * &m;
        for i in 0..normal.nrows() {
            normal[(i, i)] += search.ridge * scale * scale;
        }
        let rhs = m.transpose() * b;
        normal.cholesky().map(|ch| ch.solve(&rhs).iter().copied().collect())
    };
    let residual = |c: &[f64]| -> DVector<f64> {
        let cv = DVector::from_column_slice(c);
        &target - &design * cv
    };
    let discrete_l1 = |r: &DVector<f64>| r.iter().map(|v| v.abs()).sum::<f64>() * step * 4.0;

    let mut best = seed.clone();
    let mut best_l1 = discrete_l1(&residual(&seed));
    for restart in 0..=search.restarts {
        let mut c = if restart == 0 {
            seed.clone()
        } else {
            best.iter().map(|v| v * (1.0 + 0.05 * (rng.random::<f64>() - 0.5))).collect()
        };
        for _ in 0..search.irls_iterations {
            let r = residual(&c);
            let floor = 1e-3 * r.amax().max(1e-300);
            let w = r.map(|v| 1.0 / v.abs().max(floor).sqrt());
            match solve(&w) {
                Some(next) => c = next,
                None => break,
            }
            let l1 = discrete_l1(&residual(&c));
            if l1 < best_l1 {
                best_l1 = l1;
                best = c.clone();
            }
        }
    }
    let l1 = certify(t, level, &pts, &best, half);
    Fit { coeffs: best, l1 }
}

/// Searches lattice translates of g_t whose combination approximates
/// g_{t/N} in L^1 to within 1/N. The L^1 error is always recomputed by
/// quadrature; the least-squares fit itself is not trusted.
pub fn wiener_coefficients(t: f64, level: usize, n: usize, search: &WienerSearch) -> Result<WienerApproximant> {
    if level == 0 {
        return invalid("the approximation level N must be at least 1");
    }
    if !(t > 0.0) {
        return invalid(format!("t must be positive, got {t}"));
    }
    if n != 1 {
        return Err(Error::Unsupported("deconvolution witnesses are computed for n = 1".into()));
    }
    if level == 1 {
        return Ok(WienerApproximant {
            t,
            level,
            n,
            terms: vec![WienerTerm { c: C64::new(1.0, 0.0), z: C64::new(0.0, 0.0) }],
            l1_error: 0.0,
            spacing: 0.0,
            extent: 0.0,
            success: true,
        });
    }
    let cache = cache_path(t, level, n, search);
    if let Some(p) = &cache {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(w) = serde_json::from_str::<WienerApproximant>(&text) {
                return Ok(w);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let goal = 1.0 / level as f64;
    let mut best: Option<(f64, f64, i64, Fit)> = None;
    let mut h = search.spacing * t.sqrt();
    let mut extent = search.extent * t.sqrt();
    for _ in 0..search.rounds.max(1) {
        let m = (extent / h).round().max(1.0) as i64;
        let fit = fit_round(t, level, h, m, search, &mut rng);
        let better = best.as_ref().is_none_or(|b| fit.l1 < b.3.l1);
        let done = fit.l1 <= goal;
        if better {
            best = Some((h, extent, m, fit));
        }
        if done {
            break;
        }
        h *= 0.75;
        extent += 0.5 * t.sqrt();
    }
    let (h, extent, m, fit) = best.unwrap();
    let mut terms = Vec::new();
    for (o, group) in orbits(m).iter().enumerate() {
        for &(i, j) in group {
            terms.push(WienerTerm { c: C64::new(fit.coeffs[o], 0.0), z: C64::new(i as f64 * h, j as f64 * h) });
        }
    }
    let out = WienerApproximant { t, level, n, terms, l1_error: fit.l1, spacing: h, extent, success: fit.l1 <= goal };
    if let Some(p) = &cache {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(p, serde_json::to_string_pretty(&out)?)?;
    }
    Ok(out)
}

fn cache_path(t: f64, level: usize, n: usize, search: &WienerSearch) -> Option<PathBuf> {
    let dir = std::env::var_os(WIENER_CACHE_ENV)?;
    let key = serde_json::json!({ "t": t, "level": level, "n": n, "search": search }).to_string();
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Some(PathBuf::from(dir).join(format!("wiener-{hex}.json")))
}

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub matrix: OperatorMatrix,
    /// ||A - R|| on the degree <= N/2 block.
    pub distance: f64,
    /// ||A - g_{t/N} * A|| on the same block.
    pub conv_distance: f64,
    /// l1_error * ||A||.
    pub l1_term: f64,
    /// Change of the reconstruction block between two working degrees.
    pub truncation: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub working_degree: usize,
}

/// sum_j c_j alpha_{z_j}(T_{A~}): the Berezin symbol of A is quantized once
/// on a padded basis and shifted by every lattice point.
pub fn reconstruct(op: &OperatorSpec, basis: &Arc<MultiIndexBasis>, approx: &WienerApproximant) -> Result<Reconstruction> {
    let t = basis.t();
    if (approx.t - t).abs() > 1e-12 * t || approx.n != basis.n() {
        return invalid("approximant was computed for a different space");
    }
    let nmax = basis.max_degree();
    let half = nmax / 2;
    // kernels of the block spread to radius |z| + sqrt(t * half)
    let reach = approx.max_shift() + (t * half as f64).sqrt();
    let base = (nmax + 8).max(working_degree(t, reach));
    let symbol = op.berezin_symbol(t);
    let run = |degree: usize| -> Result<(OperatorMatrix, OperatorMatrix)> {
        let wb = MultiIndexBasis::new(basis.params(), degree)?;
        let ta = toeplitz(&symbol, &wb)?;
        let dim = wb.dim();
        let parts = approx
            .terms
            .par_iter()
            .map(|term| shift(&ta, &[term.z]).map(|m| m.into_entries() * term.c))
            .collect::<Result<Vec<_>>>()?;
        let total = parts.into_iter().fold(DMatrix::zeros(dim, dim), |a, b| a + b);
        let r = OperatorMatrix::new(wb.clone(), total)?;
        Ok((r, op.assemble(&wb)?))
    };
    let (r_lo, _) = run(base)?;
    let (r_hi, a_hi) = run(base + 8)?;
    let r = r_hi.truncate(nmax)?;
    let a = a_hi.truncate(nmax)?;
    let truncation = spectral_norm(&(r_hi.block(half) - r_lo.block(half)));
    let distance = block_distance(&a, &r, half)?;
    let conv = module_conv(&heat_kernel_symbol(t / approx.level as f64, basis.n()), &a_hi)?;
    let conv_distance = block_distance(&a, &conv.matrix.truncate(nmax)?, half)?;
    let norm_a = spectral_norm(a_hi.entries());
    let l1_term = approx.l1_error * norm_a;
    let bound = conv_distance + l1_term + truncation + conv.residual;
    Ok(Reconstruction {
        matrix: r,
        distance,
        conv_distance,
        l1_term,
        truncation,
        bound,
        within_bound: distance <= bound + 1e-10,
        working_degree: base + 8,
    })
}

/// T_0 = sum_k (1 - t/s)^k P_k on the truncation.
#[derive(Clone, Debug, Serialize)]
pub struct T0Operator {
    pub s: f64,
    pub t: f64,
    #[serde(skip)]
    pub matrix: OperatorMatrix,
    /// sum_{k <= K} |q|^k sum_{|alpha| = k} ||e_alpha||_p ||e_alpha||_q' for each K.
    pub partial_nuclear: Vec<f64>,
    pub nuclear_norm_bound: f64,
    pub tail: f64,
}

fn norm_product(params: &crate::fock::FockParams, alpha: &[u32]) -> Result<f64> {
    let al: Vec<i64> = alpha.iter().map(|&k| k as i64).collect();
    let p = params.p();
    if p == Exponent::Two {
        return Ok(1.0);
    }
    let a = basis_norm(params, &al)?;
    let b = basis_norm(&params.with_p(p.conjugate()), &al)?;
    Ok(a * b)
}

/// Builds T_0^{(s)} with the nuclear-norm bound
/// sum_{k<=N} |1-t/s|^k C(k-1+n, k) sup_{|alpha|=k} ||e_alpha||_p ||e_alpha||_p'
/// plus a geometric tail.
pub fn t0_build(s: f64, basis: &Arc<MultiIndexBasis>) -> Result<T0Operator> {
    let t = basis.t();
    if !(s > t / 2.0) {
        return invalid(format!("T_0 needs s > t/2 (the series diverges at |1 - t/s| >= 1), got s = {s}, t = {t}"));
    }
    let n = basis.n();
    let q = 1.0 - t / s;
    let qa = q.abs();
    let params = basis.params();
    let nmax = basis.max_degree();
    let diag: Vec<C64> = (0..basis.dim()).map(|i| C64::new(q.powi(basis.degree(i) as i32), 0.0)).collect();
    let matrix = OperatorMatrix::diagonal(basis.clone(), &diag)?;
    let mut sums = vec![0.0; nmax + 1];
    let mut sups = vec![0.0f64; nmax + 1];
    for (i, alpha) in basis.indices().iter().enumerate() {
        let k = basis.degree(i);
        let prod = norm_product(&params, alpha)?;
        sums[k] += prod;
        sups[k] = sups[k].max(prod);
    }
    let mut partial = Vec::with_capacity(nmax + 1);
    let mut acc = 0.0;
    let mut bound = 0.0;
    for k in 0..=nmax {
        let w = qa.powi(k as i32);
        acc += w * sums[k];
        partial.push(acc);
        bound += w * binomial((k + n).saturating_sub(1) as u64, k as u64) * sups[k];
    }
    // one-variable products are bounded by their running maximum over a long
    // range; the n-variable sup is at most its n-th power
    let one = crate::fock::FockParams::new(t, 1, params.p())?;
    let mut s1: f64 = 1.0;
    for k in 0..=(nmax + 400) {
        s1 = s1.max(norm_product(&one, &[k as u32])?);
    }
    let sup_tail = s1.powi(n as i32);
    let mut tail = 0.0;
    let mut k = nmax + 1;
    loop {
        let term = qa.powi(k as i32) * binomial((k + n - 1) as u64, k as u64) * sup_tail;
        tail += term;
        if term < 1e-18 * tail.max(1e-300) || k > nmax + 100_000 {
            break;
        }
        k += 1;
    }
    if qa == 0.0 {
        tail = 0.0;
    }
    Ok(T0Operator { s, t, matrix, partial_nuclear: partial, nuclear_norm_bound: bound + tail, tail })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceIdentity {
    #[serde(with = "crate::symbols::cnum")]
    pub lhs: C64,
    #[serde(with = "crate::symbols::cnum")]
    pub rhs: C64,
    pub gap: f64,
    /// sup|f| (t/s)^n sum_{k > N} |1 - t/s|^k C(k+n-1, k).
    pub tail_bound: f64,
}

/// Compares the heat transform at z with (t/s)^n Tr(T_0 alpha_{-z}(T_f)).
pub fn trace_heat_identity(f: &SymbolSpec, s: f64, z: &[C64], basis: &Arc<MultiIndexBasis>) -> Result<TraceIdentity> {
    let t = basis.t();
    let n = basis.n();
    if !(s > t / 2.0 && s <= t) {
        return invalid(format!("the trace identity needs t/2 < s <= t, got s = {s}, t = {t}"));
    }
    let lhs = heat_transform(f, s, z)?.value;
    let t0 = t0_build(s, basis)?;
    let minus: Vec<C64> = z.iter().map(|c| -c).collect();
    let shifted = toeplitz(&translate(f, &minus), basis)?;
    let tr: C64 = (0..basis.dim()).map(|i| t0.matrix.entries()[(i, i)] * shifted.entries()[(i, i)]).sum();
    let rhs = tr * (t / s).powi(n as i32);
    let sup = f.sup_bound().unwrap_or(f64::INFINITY);
    let qa = (1.0 - t / s).abs();
    let mut tail = 0.0;
    let mut k = basis.max_degree() + 1;
    if qa > 0.0 {
        loop {
            let term = qa.powi(k as i32) * binomial((k + n - 1) as u64, k as u64);
            tail += term;
            if term < 1e-18 * tail || k > 1_000_000 {
                break;
            }
            k += 1;
        }
    }
    Ok(TraceIdentity { lhs, rhs, gap: (lhs - rhs).norm(), tail_bound: sup * (t / s).powi(n as i32) * tail })
}

#[derive(Clone, Debug, Serialize)]
pub struct BcRatio {
    pub s: f64,
    pub norm: NormEstimate,
    pub heat_sup: f64,
    pub ratio: f64,
}

/// ||T_f|| against sup |f~^{(s)}| for 0 < s < t/2.
pub fn berger_coburn_forward(f: &SymbolSpec, s: f64, basis: &Arc<MultiIndexBasis>, seed: u64) -> Result<BcRatio> {
    let t = basis.t();
    if !(s > 0.0 && s < t / 2.0) {
        return invalid(format!("the forward estimate needs 0 < s < t/2, got s = {s}"));
    }
    let norm = norm_estimate(&toeplitz(f, basis)?, basis.params().p(), seed)?;
    let hs = heat_sup(f, s, basis.n())?;
    Ok(BcRatio { s, ratio: norm.upper / hs, heat_sup: hs, norm })
}

/// sup |f~^{(s)}| against ||T_f|| for t/2 < s < 2t.
pub fn berger_coburn_reverse(f: &SymbolSpec, s: f64, basis: &Arc<MultiIndexBasis>, seed: u64) -> Result<BcRatio> {
    let t = basis.t();
    if !(s > t / 2.0 && s < 2.0 * t) {
        return invalid(format!("the reverse estimate needs t/2 < s < 2t, got s = {s}"));
    }
    let norm = norm_estimate(&toeplitz(f, basis)?, basis.params().p(), seed)?;
    let hs = heat_sup(f, s, basis.n())?;
    Ok(BcRatio { s, ratio: hs / norm.lower, heat_sup: hs, norm })
}

#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub class: Tag,
    /// Tag evidence for the heat transform f~^{(s)}.
    pub heat_tag: TagCheck,
    /// ||g_s * T_f - T_{f~^{(s)}}|| relative to ||T_{f~^{(s)}}||, degree <= N/2 block.
    pub identity_error: f64,
    pub identity_holds: bool,
    pub member: bool,
    pub verdict: String,
}

/// Numerical proxies for "T_f lies in the Toeplitz module generated by the
/// class": the heat transform carries the tag, and g_s * T_f = T_{f~^{(s)}}.
pub fn correspondence_membership(f: &SymbolSpec, class: Tag, s: f64, basis: &Arc<MultiIndexBasis>) -> Result<Membership> {
    if !matches!(class, Tag::C0 | Tag::VoBoundary | Tag::Buc) {
        return invalid("membership is tested for the classes c0, vo-boundary and buc");
    }
    if !(s > 0.0) {
        return invalid("heat time must be positive");
    }
    let n = basis.n();
    let nmax = basis.max_degree();
    let heat = heat_symbol(f, s);
    let heat_tag = check_tag(&heat, n, class);
    let wide = MultiIndexBasis::new(basis.params(), 2 * nmax.max(8))?;
    let conv = module_conv(&heat_kernel_symbol(s, n), &toeplitz(f, &wide)?)?.matrix.truncate(nmax)?;
    let th = toeplitz(&heat, basis)?;
    let scale = spectral_norm(&th.block(nmax / 2)).max(1e-300);
    let identity_error = block_distance(&conv, &th, nmax / 2)? / scale;
    let identity_holds = identity_error <= 1e-6;
    let member = heat_tag.passed && identity_holds;
    let verdict = match (heat_tag.passed, identity_holds) {
        (true, true) => "member: heat transform in class and module identity holds",
        (false, true) => "not a member: heat transform fails the class test",
        (true, false) => "inconclusive: module identity not resolved on the truncation",
        (false, false) => "not a member: both proxies fail",
    };
    Ok(Membership { class, heat_tag, identity_error, identity_holds, member, verdict: verdict.into() })
}

/// Records keyed by label, used by the experiment runner.
pub type RatioTable = BTreeMap<String, Vec<BcRatio>>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockParams;

    fn basis(n: usize) -> Arc<MultiIndexBasis> {
        MultiIndexBasis::new(FockParams::hilbert(1.0, 1).unwrap(), n).unwrap()
    }

    #[test]
    fn level_one_is_exact() {
        let w = wiener_coefficients(1.0, 1, 1, &WienerSearch::default()).unwrap();
        assert_eq!(w.terms.len(), 1);
        assert_eq!(w.l1_error, 0.0);
    }

    #[test]
    fn orbits_cover_the_square() {
        let o = orbits(3);
        let total: usize = o.iter().map(|g| g.len()).sum();
        assert_eq!(total, 49);
    }

    #[test]
    fn t0_geometric_bounds() {
        let b = basis(40);
        let t0 = t0_build(0.75, &b).unwrap();
        let want = 1.5;
        assert!((t0.nuclear_norm_bound - want).abs() < 1e-12, "{}", t0.nuclear_norm_bound);
        assert!(t0.partial_nuclear.windows(2).all(|w| w[1] >= w[0]));
        let one = t0_build(1.0, &b).unwrap();
        assert!((one.partial_nuclear.last().unwrap() - 1.0).abs() < 1e-15);
        assert!(t0_build(0.5, &b).is_err());
    }

    #[test]
    fn trace_identity_for_constants_and_gaussians() {
        let b = basis(60);
        let one = trace_heat_identity(&SymbolSpec::constant(1.0), 0.75, &[C64::new(0.0, 0.0)], &b).unwrap();
        assert!((one.rhs - 1.0).norm() < 1e-12);
        let g = trace_heat_identity(&SymbolSpec::gaussian(1.0, vec![]), 0.75, &[C64::new(0.0, 0.0)], &b).unwrap();
        assert!((g.lhs.re - 4.0 / 7.0).abs() < 1e-14);
        assert!(g.gap < 1e-8, "{}", g.gap);
    }

    #[test]
    fn berger_coburn_closed_forms() {
        let b = basis(24);
        let g = SymbolSpec::gaussian(1.0, vec![]);
        let f = berger_coburn_forward(&g, 0.4, &b, 0).unwrap();
        assert!((f.ratio - 0.7).abs() < 1e-12, "{}", f.ratio);
        let r = berger_coburn_reverse(&g, 1.5, &b, 0).unwrap();
        assert!((r.ratio - 0.8).abs() < 1e-12, "{}", r.ratio);
        let c = berger_coburn_forward(&SymbolSpec::constant(1.0), 0.4, &b, 0).unwrap();
        assert!((c.ratio - 1.0).abs() < 1e-14);
    }
}
