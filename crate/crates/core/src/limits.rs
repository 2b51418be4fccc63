//! Directional limits of symbols and operators, the essential spectrum of
//! VO-boundary symbols, Fredholm witnesses and compactness probes.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{FockParams, MultiIndexBasis, OperatorMatrix};
use crate::operators::{berezin, max_abs, singular_values, spectral_norm, toeplitz, working_degree};
use crate::symbols::{c0_tail, check_tag, heat_symbol, translate, vo_modulus, AngularMode, SymbolSpec, Tag, TagCheck};
use crate::C64;

/// A ray r_i * direction with r_i increasing, standing in for a net that
/// leaves every compact set.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionApproximant {
    #[serde(with = "crate::symbols::cnum::vec")]
    pub direction: Vec<C64>,
    pub radii: Vec<f64>,
    pub cauchy_tol: f64,
}

impl DirectionApproximant {
    pub fn new(direction: Vec<C64>, radii: Vec<f64>, cauchy_tol: f64) -> Result<Self> {
        let len = direction.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return invalid("direction must be nonzero");
        }
        if radii.len() < 3 {
            return invalid("at least three radii are needed for a Cauchy test");
        }
        if !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("radii must be positive and strictly increasing");
        }
        if !(cauchy_tol > 0.0) {
            return invalid("Cauchy tolerance must be positive");
        }
        Ok(Self { direction: direction.iter().map(|c| c / len).collect(), radii, cauchy_tol })
    }

    /// The ray at angle theta in one variable, radii 10^2 .. 10^8.
    pub fn angle(theta: f64) -> Self {
        let radii = (2..=8).map(|k| 10f64.powi(k)).collect();
        Self::new(vec![C64::from_polar(1.0, theta)], radii, 1e-6).unwrap()
    }

    pub fn point(&self, i: usize) -> Vec<C64> {
        self.direction.iter().map(|c| c * self.radii[i]).collect()
    }

    /// Evenly spaced angles in one variable.
    pub fn grid(count: usize) -> Vec<Self> {
        (0..count).map(|j| Self::angle(TAU * j as f64 / count as f64)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitVerdict {
    /// The limit when it is the same at every sample point w.
    #[serde(with = "crate::symbols::cnum::opt")]
    pub limit: Option<C64>,
    /// Last-radius values at each sample point w.
    #[serde(with = "crate::symbols::cnum::vec")]
    pub values: Vec<C64>,
    /// Successive differences (symbols) or distances to the limit (operators).
    pub profile: Vec<f64>,
    pub converged: bool,
    pub w_independent: bool,
    #[serde(skip)]
    pub matrix: Option<OperatorMatrix>,
}

/// Sample points for the compact w-grid: the origin and two rings.
pub fn compact_grid(n: usize) -> Vec<Vec<C64>> {
    let mut out = vec![vec![C64::new(0.0, 0.0); n]];
    for r in [0.5, 1.0] {
        for j in 0..8 {
            let mut w = vec![C64::new(0.0, 0.0); n];
            w[0] = C64::from_polar(r, TAU * j as f64 / 8.0);
            out.push(w);
        }
    }
    out
}

/// f(w - r_i u) along the ray, Cauchy-tested over the radii and compared
/// across the sample points.
pub fn limit_symbol(f: &SymbolSpec, dir: &DirectionApproximant, ws: &[Vec<C64>]) -> LimitVerdict {
    if ws.is_empty() {
        return LimitVerdict { limit: None, values: vec![], profile: vec![], converged: false, w_independent: false, matrix: None };
    }
    let at = |i: usize, w: &[C64]| -> C64 {
        let p = dir.point(i);
        let z: Vec<C64> = w.iter().enumerate().map(|(k, wk)| wk - p.get(k).copied().unwrap_or_default()).collect();
        f.eval(&z)
    };
    let m = dir.radii.len();
    let table: Vec<Vec<C64>> = (0..m).map(|i| ws.iter().map(|w| at(i, w)).collect()).collect();
    let profile: Vec<f64> = (1..m)
        .map(|i| table[i].iter().zip(&table[i - 1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let finite = table[m - 1].iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let converged = finite && profile.len() >= 2 && profile[profile.len() - 2..].iter().all(|&d| d < dir.cauchy_tol);
    let values = table[m - 1].clone();
    let spread = values.iter().map(|v| (v - values[0]).norm()).fold(0.0, f64::max);
    let w_independent = converged && spread < dir.cauchy_tol;
    LimitVerdict { limit: w_independent.then_some(values[0]), values, profile, converged, w_independent, matrix: None }
}

/// alpha_{r_i u}(T_f) = T_{f(. - r_i u)} on the degree <= N/2 block, against
/// the Toeplitz operator of the (constant) limit symbol.
pub fn limit_operator(
    f: &SymbolSpec,
    dir: &DirectionApproximant,
    basis: &Arc<MultiIndexBasis>,
    tol: f64,
) -> Result<LimitVerdict> {
    let sym = limit_symbol(f, dir, &compact_grid(basis.n()));
    let Some(c) = sym.limit else {
        return Err(Error::Unsupported(
            "limit operators are built for symbols with a converged, constant directional limit".into(),
        ));
    };
    let limit = OperatorMatrix::identity(basis.clone()).scale(c);
    let half = basis.max_degree() / 2;
    let mut profile = Vec::new();
    // the block of a shifted symbol differs from its limit by about
    // sqrt(N) |grad f| ~ sqrt(N) / r, so the radii grow geometrically
    let radii = operator_radii(basis);
    for r in &radii {
        let z: Vec<C64> = dir.direction.iter().map(|u| u * *r).collect();
        let a = toeplitz(&translate(f, &z), basis)?;
        profile.push(max_abs(&(a.block(half) - limit.block(half))));
    }
    let converged = profile[profile.len() - 2..].iter().all(|&d| d < tol);
    Ok(LimitVerdict {
        limit: Some(c),
        values: sym.values,
        profile,
        converged,
        w_independent: true,
        matrix: Some(limit),
    })
}

/// Shift radii used by `limit_operator`.
pub fn operator_radii(basis: &MultiIndexBasis) -> Vec<f64> {
    let base = (basis.t() * basis.max_degree() as f64).sqrt();
    [1e2, 1e4, 1e6, 1e8].iter().map(|k| k * base).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EssentialSpectrum {
    #[serde(with = "crate::symbols::cnum::vec")]
    pub points: Vec<C64>,
    /// Cauchy tolerance of the directions, the accuracy of each point.
    pub radius: f64,
    pub unconverged: Vec<usize>,
    pub vo_modulus: f64,
    pub excluded: bool,
    pub note: String,
}

/// {f_x(0)} over a grid of directions: the sampled f(boundary).
pub fn essential_spectrum_vo(f: &SymbolSpec, n: usize, directions: &[DirectionApproximant]) -> EssentialSpectrum {
    let r_max = directions.iter().flat_map(|d| d.radii.last().copied()).fold(0.0, f64::max);
    let vo = vo_modulus(f, n, r_max).value;
    let radius = directions.iter().map(|d| d.cauchy_tol).fold(0.0, f64::max);
    let mut points = Vec::new();
    let mut unconverged = Vec::new();
    for (i, d) in directions.iter().enumerate() {
        let v = limit_symbol(f, d, &compact_grid(n));
        match v.limit {
            Some(c) => points.push(c),
            None => unconverged.push(i),
        }
    }
    let excluded = !unconverged.is_empty();
    let note = if excluded && vo < 0.1 {
        "radial VO-boundary symbol with non-directional boundary: limits along rays do not exist".to_string()
    } else if excluded {
        "directional limits do not exist; not a VO-boundary symbol on this grid".to_string()
    } else {
        "all directions converged".to_string()
    };
    EssentialSpectrum { points, radius, unconverged, vo_modulus: vo, excluded, note }
}

#[derive(Clone, Debug, Serialize)]
pub struct FredholmWitness {
    #[serde(with = "crate::symbols::cnum")]
    pub lambda: C64,
    pub margin: f64,
    pub radii: Vec<f64>,
    /// sup over |z| = R of |D~(z)| for D = (T_f - lambda) T_{1/(f - lambda)} - I.
    pub tails: Vec<f64>,
    pub working_degree: usize,
    pub passed: bool,
}

fn margin_of(f: &SymbolSpec, lambda: C64, n: usize, patch_radius: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut r = patch_radius;
    while r < 1e6 {
        for z in ring(n, r, 256) {
            lo = lo.min((f.eval(&z) - lambda).norm());
        }
        r = if r < 64.0 { r + 0.25 } else { r * 1.25 };
    }
    lo
}

fn ring(n: usize, r: f64, count: usize) -> Vec<Vec<C64>> {
    (0..count)
        .map(|j| {
            let mut z = vec![C64::new(0.0, 0.0); n];
            z[0] = C64::from_polar(r, TAU * j as f64 / count as f64);
            z
        })
        .collect()
}

/// Builds B = T_{1/(f - lambda)} (patched inside `patch_radius`) and checks
/// that the Berezin transform of (T_f - lambda) B - I decays along the radii.
pub fn fredholm_witness(
    f: &SymbolSpec,
    lambda: C64,
    params: &FockParams,
    degree: usize,
    radii: &[f64],
    patch_radius: f64,
) -> Result<FredholmWitness> {
    let n = params.n();
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("the R-grid needs at least two increasing radii");
    }
    let margin = margin_of(f, lambda, n, patch_radius);
    let needed = 1e-3 * (1.0 + lambda.norm());
    if !(margin > needed) {
        return Err(Error::Patching(format!(
            "|f - lambda| gets down to {margin:.3e} outside radius {patch_radius}; lambda is too close to the range of f"
        )));
    }
    let r_max = *radii.last().unwrap();
    let wd = degree.max(working_degree(params.t(), r_max));
    let basis = MultiIndexBasis::new(params.clone(), wd)?;
    let recip = SymbolSpec::Reciprocal { inner: Box::new(f.clone()), lambda, patch_radius, margin };
    let b = toeplitz(&recip, &basis)?;
    let tf = toeplitz(f, &basis)?;
    let id = OperatorMatrix::identity(basis.clone());
    let d = tf.sub(&id.scale(lambda))?.compose(&b)?.sub(&id)?;
    let mut tails = Vec::new();
    for &r in radii {
        let mut worst: f64 = 0.0;
        for z in ring(n, r, 64) {
            worst = worst.max(berezin(&d, &z)?.value.norm());
        }
        tails.push(worst);
    }
    let passed = decreasing(&tails);
    Ok(FredholmWitness { lambda, margin, radii: radii.to_vec(), tails, working_degree: wd, passed })
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-14)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessProfile {
    pub ladder: Vec<usize>,
    /// Singular values of the full truncation at the largest N.
    pub singular_values: Vec<f64>,
    /// sigma at the middle of the block, per ladder entry.
    pub middle: Vec<f64>,
    /// ||block with its degree <= N/4 corner removed|| / ||block||, per ladder entry.
    pub band_ratio: Vec<f64>,
    /// Number of block singular values above a quarter of the largest, per ladder entry.
    pub counts: Vec<usize>,
    pub radii: Vec<f64>,
    pub berezin_tails: Vec<f64>,
    pub berezin_degree: usize,
    pub singular_decay: bool,
    pub tail_decay: bool,
    /// Heuristic: both indicators decay.
    pub compact_consistent: bool,
}

/// Singular values on the N-ladder together with Berezin tails. The tails
/// are read on a basis that resolves kernels out to the largest radius.
pub fn compactness_probe<F>(assemble: F, params: &FockParams, ladder: &[usize], radii: &[f64]) -> Result<CompactnessProfile>
where
    F: Fn(&Arc<MultiIndexBasis>) -> Result<OperatorMatrix>,
{
    if ladder.len() < 2 || ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("the N-ladder needs at least two increasing degrees");
    }
    if radii.is_empty() {
        return invalid("empty R-grid");
    }
    let mut middle = Vec::new();
    let mut bands = Vec::new();
    let mut counts = Vec::new();
    let mut last = Vec::new();
    let mut top = 0.0;
    for &deg in ladder {
        let basis = MultiIndexBasis::new(params.clone(), deg)?;
        let a = assemble(&basis)?;
        let block = a.block(deg / 2);
        let s = singular_values(&block);
        top = s.first().copied().unwrap_or(0.0);
        // the block minus its degree <= N/4 corner
        let mut outer = block.clone();
        let inner = a.basis().block_len(deg / 4);
        outer.view_mut((0, 0), (inner, inner)).fill(C64::new(0.0, 0.0));
        bands.push(spectral_norm(&outer) / top.max(1e-300));
        middle.push(s.get(s.len() / 2).copied().unwrap_or(0.0));
        counts.push(s.iter().filter(|&&x| x > 0.25 * top).count());
        last = singular_values(a.entries());
    }
    let tiny = |x: f64| x <= 1e-12 * top.max(1e-300);
    let m_last = *middle.last().unwrap();
    let shrinking = middle.windows(2).all(|w| w[1] < 0.99 * w[0] || tiny(w[1]));
    // slowly decaying spectra only show up as a shrinking middle value; fast
    // ones as a middle value well below the top
    let band = *bands.last().unwrap();
    let singular_decay =
        tiny(m_last) || m_last < 0.25 * top || (shrinking && m_last < 0.95 * top) || band < 0.9;

    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let bdeg = (*ladder.last().unwrap()).max(working_degree(params.t(), r_max));
    let basis = MultiIndexBasis::new(params.clone(), bdeg)?;
    let a = assemble(&basis)?;
    let mut tails = Vec::new();
    for &r in radii {
        let mut worst: f64 = 0.0;
        for z in ring(params.n(), r, 64) {
            worst = worst.max(berezin(&a, &z)?.value.norm());
        }
        tails.push(worst);
    }
    let tail_decay = decreasing(&tails) && tails[tails.len() - 1] < 0.95 * tails[0].max(1e-300) || tails.iter().all(|&x| x < 1e-14);
    Ok(CompactnessProfile {
        ladder: ladder.to_vec(),
        singular_values: last,
        middle,
        band_ratio: bands,
        counts,
        radii: radii.to_vec(),
        berezin_tails: tails,
        berezin_degree: bdeg,
        singular_decay,
        tail_decay,
        compact_consistent: singular_decay && tail_decay,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorProbe {
    pub f_tag: TagCheck,
    pub g_tag: TagCheck,
    pub profile: CompactnessProfile,
}

/// [T_f, T_g] through the compactness probe, with the tag evidence for
/// f (VO-boundary) and g (BUC) recorded alongside.
pub fn commutator_probe(
    f: &SymbolSpec,
    g: &SymbolSpec,
    params: &FockParams,
    ladder: &[usize],
    radii: &[f64],
) -> Result<CommutatorProbe> {
    let n = params.n();
    let f_tag = check_tag(f, n, Tag::VoBoundary);
    let g_tag = check_tag(g, n, Tag::Buc);
    let profile = compactness_probe(
        |b| {
            let tf = toeplitz(f, b)?;
            let tg = toeplitz(g, b)?;
            tf.compose(&tg)?.sub(&tg.compose(&tf)?)
        },
        params,
        ladder,
        radii,
    )?;
    Ok(CommutatorProbe { f_tag, g_tag, profile })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlowOscillation {
    pub tag: TagCheck,
    pub symbol_tails: Vec<f64>,
    pub heat_tails: Vec<f64>,
    pub symbol_vanishes: bool,
    pub heat_vanishes: bool,
    pub compact: CompactnessProfile,
    /// The three indicators give the same verdict.
    pub agree: bool,
}

/// For slowly oscillating f: f -> 0, f~ -> 0 and compactness of T_f should
/// agree.
pub fn slow_oscillation_equivalence(
    f: &SymbolSpec,
    params: &FockParams,
    ladder: &[usize],
    radii: &[f64],
) -> Result<SlowOscillation> {
    let n = params.n();
    let tag = check_tag(f, n, Tag::SlowlyOscillating);
    let heat = heat_symbol(f, params.t());
    let symbol_tails: Vec<f64> = radii.iter().map(|&r| c0_tail(f, n, r)).collect();
    let heat_tails: Vec<f64> = radii.iter().map(|&r| c0_tail(&heat, n, r)).collect();
    let vanish = |v: &[f64]| (decreasing(v) && v[v.len() - 1] < 0.95 * v[0]) || v.iter().all(|&x| x < 1e-14);
    let symbol_vanishes = vanish(&symbol_tails);
    let heat_vanishes = vanish(&heat_tails);
    let compact = compactness_probe(|b| toeplitz(f, b), params, ladder, radii)?;
    let agree = symbol_vanishes == heat_vanishes && heat_vanishes == compact.compact_consistent;
    Ok(SlowOscillation { tag, symbol_tails, heat_tails, symbol_vanishes, heat_vanishes, compact, agree })
}

/// chi(|z| / cutoff) phi(z / |z|) from boundary samples phi(2 pi j / m). The
/// samples are turned into their trigonometric interpolant; data with a jump
/// is rejected.
pub fn extend_boundary_symbol(samples: &[C64], cutoff: f64) -> Result<SymbolSpec> {
    let m = samples.len();
    if m < 4 {
        return invalid("need at least four boundary samples");
    }
    if !(cutoff > 0.0) {
        return invalid("cutoff radius must be positive");
    }
    let jumps: Vec<f64> = (0..m).map(|j| (samples[(j + 1) % m] - samples[j]).norm()).collect();
    let mean = jumps.iter().sum::<f64>() / m as f64;
    let worst = jumps.iter().copied().fold(0.0, f64::max);
    let range = samples.iter().flat_map(|a| samples.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    if worst > 4.0 * mean + 1e-9 && worst > 0.05 * range {
        return Err(Error::InvalidParameter("boundary data has a jump; a continuous extension does not exist".into()));
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mut modes = Vec::new();
    for (k, c) in buf.iter().enumerate() {
        let c = c / m as f64;
        if c.norm() <= 1e-15 * (1.0 + range) {
            continue;
        }
        // symmetric frequency range; the Nyquist term is split evenly
        let k = k as i64;
        let m = m as i64;
        if 2 * k == m {
            modes.push(AngularMode { m: k, c: c * 0.5 });
            modes.push(AngularMode { m: -k, c: c * 0.5 });
        } else {
            modes.push(AngularMode { m: if 2 * k < m { k } else { k - m }, c });
        }
    }
    if modes.is_empty() {
        modes.push(AngularMode { m: 0, c: C64::new(0.0, 0.0) });
    }
    Ok(SymbolSpec::Angular { modes, r0: cutoff })
}

/// Largest entry of a matrix difference; re-exported for report tables.
pub fn max_entry(m: &DMatrix<C64>) -> f64 {
    max_abs(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    fn angular() -> SymbolSpec {
        SymbolSpec::angular(&[(1, c(1.0, 0.0))], 1.0)
    }

    #[test]
    fn directional_limits() {
        let th = 0.7;
        let d = DirectionApproximant::angle(th);
        let v = limit_symbol(&angular(), &d, &compact_grid(1));
        assert!(v.converged && v.w_independent);
        assert!((v.limit.unwrap() - C64::from_polar(1.0, th + std::f64::consts::PI)).norm() < 1e-6);
        let g = limit_symbol(&SymbolSpec::gaussian(1.0, vec![]), &d, &compact_grid(1));
        assert_eq!(g.limit, Some(c(0.0, 0.0)));
        let k = limit_symbol(&SymbolSpec::constant(c(2.0, 1.0)), &d, &compact_grid(1));
        assert_eq!(k.profile[0], 0.0);
        assert!(DirectionApproximant::new(vec![c(1.0, 0.0)], vec![1.0, 2.0], 1e-3).is_err());
    }

    #[test]
    fn radial_oscillation_has_no_directional_limit() {
        let f = SymbolSpec::radial(crate::symbols::RadialProfile::SinSqrt);
        let es = essential_spectrum_vo(&f, 1, &DirectionApproximant::grid(4));
        assert!(es.excluded);
        assert!(es.note.contains("non-directional"), "{}", es.note);
    }

    #[test]
    fn fredholm_trivial_and_negative_control() {
        let p = FockParams::hilbert(1.0, 1).unwrap();
        let w = fredholm_witness(&SymbolSpec::constant(0.0), c(1.0, 0.0), &p, 8, &[1.0, 2.0], 1.0).unwrap();
        assert!(w.tails.iter().all(|&x| x < 1e-14));
        assert!(fredholm_witness(&angular(), c(1.0, 0.0), &p, 32, &[4.0, 6.0, 8.0], 1.0).is_err());
    }

    #[test]
    fn compactness_of_simple_operators() {
        let p = FockParams::hilbert(1.0, 1).unwrap();
        let g = SymbolSpec::gaussian(1.0, vec![]);
        let pr = compactness_probe(|b| toeplitz(&g, b), &p, &[16, 32], &[2.0, 3.0, 4.0]).unwrap();
        assert!(pr.compact_consistent, "{pr:?}");
        let id = compactness_probe(|b| Ok(OperatorMatrix::identity(b.clone())), &p, &[16, 32], &[2.0, 3.0, 4.0]).unwrap();
        assert!(!id.compact_consistent);
    }

    #[test]
    fn boundary_extension() {
        let m = 16;
        let samples: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, TAU * j as f64 / m as f64)).collect();
        let f = extend_boundary_symbol(&samples, 1.0).unwrap();
        let v = limit_symbol(&f, &DirectionApproximant::angle(0.3), &compact_grid(1));
        assert!((v.limit.unwrap() - C64::from_polar(1.0, 0.3 + std::f64::consts::PI)).norm() < 1e-6);
        let g = extend_boundary_symbol(&samples, 2.0).unwrap();
        let diff = SymbolSpec::sum(vec![f, SymbolSpec::product(vec![SymbolSpec::constant(-1.0), g])]);
        assert!(c0_tail(&diff, 1, 6.0) < 1e-12);
        let step: Vec<C64> = (0..m).map(|j| if j < m / 2 { c(1.0, 0.0) } else { c(-1.0, 0.0) }).collect();
        assert!(extend_boundary_symbol(&step, 1.0).is_err());
    }
}
