//! Symbol families f: C^n -> C with regularity tags, the translation,
//! reflection and dilation actions, and heat transforms g_s * f.
//!
//! Group actions are applied symbolically: a translated Gaussian is again a
//! Gaussian, a reflected angular symbol is again angular, and anything without
//! a closed form is wrapped, never resampled.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::sq_norm;
use crate::special::{binomial, composite_gl, ln_factorial, scaled_bessel_i, smooth_step, Pchip};

/// Complex numbers in configuration files: either a bare real number or a
/// two-element array [re, im]. Always written back as the array form.
pub mod cnum {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => C64::new(x, 0.0),
            Repr::Pair([a, b]) => C64::new(a, b),
        })
    }

    pub mod vec {
        use super::*;

        #[derive(Deserialize)]
        struct Item(#[serde(with = "super")] C64);

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
            pairs.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            Ok(Vec::<Item>::deserialize(d)?.into_iter().map(|i| i.0).collect())
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(|c| [c.re, c.im]).serialize(s)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Bounded,
    C0,
    Buc,
    VoBoundary,
    SlowlyOscillating,
}

impl Tag {
    pub fn all() -> [Tag; 5] {
        [Tag::Bounded, Tag::C0, Tag::Buc, Tag::VoBoundary, Tag::SlowlyOscillating]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularMode {
    pub m: i64,
    #[serde(with = "cnum")]
    pub c: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialProfile {
    /// sin(sqrt(1 + r))
    SinSqrt,
    /// 1 / (1 + log(1 + r))
    InvLog,
    /// tanh((r - radius) / width), a smoothed sign step
    Step { radius: f64, width: f64 },
    /// Monotone cubic interpolation of samples; undefined outside the range.
    Sampled(SampledProfile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampled", into = "RawSampled")]
pub struct SampledProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    interp: Pchip,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampled {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawSampled> for SampledProfile {
    type Error = Error;
    fn try_from(r: RawSampled) -> Result<Self> {
        SampledProfile::new(r.radii, r.values)
    }
}

impl From<SampledProfile> for RawSampled {
    fn from(s: SampledProfile) -> Self {
        RawSampled { radii: s.radii, values: s.values }
    }
}

impl SampledProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let interp = Pchip::new(&radii, &values)
            .ok_or_else(|| Error::InvalidParameter("sampled profile needs >= 2 strictly increasing radii".into()))?;
        if radii[0] < 0.0 {
            return invalid("sampled radii must be nonnegative");
        }
        Ok(Self { radii, values, interp })
    }

    pub fn range(&self) -> (f64, f64) {
        self.interp.range()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        self.interp.eval(r).ok_or_else(|| {
            let (lo, hi) = self.range();
            Error::Extrapolation { r, lo, hi }
        })
    }
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::SinSqrt => (1.0 + r).sqrt().sin(),
            RadialProfile::InvLog => 1.0 / (1.0 + (1.0 + r).ln()),
            RadialProfile::Step { radius, width } => ((r - radius) / width).tanh(),
            RadialProfile::Sampled(s) => s.eval(r).unwrap_or(f64::NAN),
        }
    }
}

/// A symbol. Centers left empty mean the origin in any dimension; centers
/// shorter than n are padded with zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    Constant {
        #[serde(with = "cnum")]
        value: C64,
    },
    /// amplitude * exp(-|w - center|^2 / width)
    Gaussian {
        #[serde(default, with = "cnum::vec")]
        center: Vec<C64>,
        width: f64,
        #[serde(default = "one", with = "cnum")]
        amplitude: C64,
    },
    /// amplitude * |w - center|^{2 power} * exp(-|w - center|^2 / width)
    PolyGaussian {
        #[serde(default, with = "cnum::vec")]
        center: Vec<C64>,
        width: f64,
        power: u32,
        #[serde(default = "one", with = "cnum")]
        amplitude: C64,
    },
    /// amplitude * exp(i a |w - center|^2)
    Oscillatory {
        a: f64,
        #[serde(default, with = "cnum::vec")]
        center: Vec<C64>,
        #[serde(default = "one", with = "cnum")]
        amplitude: C64,
    },
    /// amplitude * |w - center|^{2 power} * exp(-kappa |w - center|^2), Re kappa >= 0.
    /// Closed under heat flow; the other Gaussian families reduce to it.
    GaussianType {
        #[serde(default, with = "cnum::vec")]
        center: Vec<C64>,
        #[serde(with = "cnum")]
        kappa: C64,
        #[serde(default)]
        power: u32,
        #[serde(default = "one", with = "cnum")]
        amplitude: C64,
    },
    /// chi(|z| / r0) * sum_m c_m e^{i m arg z} with a C-infinity cutoff chi
    /// that vanishes at 0 and equals 1 from r0 on. One complex variable.
    Angular { modes: Vec<AngularMode>, r0: f64 },
    /// amplitude * exp(i (xi0 Re z + xi1 Im z)). One complex variable.
    PlaneWave {
        xi: [f64; 2],
        #[serde(default = "one", with = "cnum")]
        amplitude: C64,
    },
    Radial { profile: RadialProfile },
    Sum { terms: Vec<SymbolSpec> },
    Product { factors: Vec<SymbolSpec> },
    /// w -> inner(w - by)
    Translate {
        inner: Box<SymbolSpec>,
        #[serde(with = "cnum::vec")]
        by: Vec<C64>,
    },
    /// w -> inner(-w)
    Reflect { inner: Box<SymbolSpec> },
    /// w -> inner(lambda w)
    Dilate { inner: Box<SymbolSpec>, lambda: f64 },
    /// g_s * inner
    Heat { inner: Box<SymbolSpec>, s: f64 },
    /// chi * 1/(inner - lambda) + (1 - chi) * (-1/lambda), chi a smooth radial
    /// switch from 0 (|z| <= patch_radius) to 1 (|z| >= patch_radius + 1).
    Reciprocal {
        inner: Box<SymbolSpec>,
        #[serde(with = "cnum")]
        lambda: C64,
        patch_radius: f64,
        margin: f64,
    },
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Normalized Gaussian-type data.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussForm {
    pub amplitude: C64,
    pub center: Vec<C64>,
    pub kappa: C64,
    pub power: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatMethod {
    ClosedForm,
    ModeQuadrature,
    Quadrature,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatValue {
    pub value: C64,
    pub method: HeatMethod,
    pub error_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatTransformResult {
    pub s: f64,
    pub values: Vec<(Vec<C64>, C64)>,
    pub method: HeatMethod,
    pub error_bound: f64,
}

fn point_at(center: &[C64], i: usize) -> C64 {
    center.get(i).copied().unwrap_or_default()
}

fn dist2(z: &[C64], center: &[C64]) -> f64 {
    z.iter().enumerate().map(|(i, zi)| (zi - point_at(center, i)).norm_sqr()).sum()
}

fn is_origin(c: &[C64]) -> bool {
    c.iter().all(|x| x.norm() == 0.0)
}

impl SymbolSpec {
    pub fn constant(c: impl Into<C64>) -> Self {
        SymbolSpec::Constant { value: c.into() }
    }

    pub fn gaussian(width: f64, center: Vec<C64>) -> Self {
        SymbolSpec::Gaussian { center, width, amplitude: one() }
    }

    pub fn oscillatory(a: f64) -> Self {
        SymbolSpec::Oscillatory { a, center: vec![], amplitude: one() }
    }

    pub fn angular(modes: &[(i64, C64)], r0: f64) -> Self {
        SymbolSpec::Angular { modes: modes.iter().map(|&(m, c)| AngularMode { m, c }).collect(), r0 }
    }

    pub fn radial(profile: RadialProfile) -> Self {
        SymbolSpec::Radial { profile }
    }

    pub fn sum(terms: Vec<SymbolSpec>) -> Self {
        SymbolSpec::Sum { terms }
    }

    pub fn product(factors: Vec<SymbolSpec>) -> Self {
        SymbolSpec::Product { factors }
    }

    /// Checks parameters that serde cannot.
    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolSpec::Gaussian { width, .. } | SymbolSpec::PolyGaussian { width, .. } => {
                if !(*width > 0.0) {
                    return invalid(format!("gaussian width must be positive, got {width}"));
                }
            }
            SymbolSpec::GaussianType { kappa, .. } => {
                if kappa.re < 0.0 {
                    return invalid("gaussian-type needs Re kappa >= 0");
                }
            }
            SymbolSpec::Angular { r0, .. } => {
                if !(*r0 > 0.0) {
                    return invalid("angular cutoff r0 must be positive");
                }
            }
            SymbolSpec::Radial { profile: RadialProfile::Step { width, .. } } => {
                if !(*width > 0.0) {
                    return invalid("step width must be positive");
                }
            }
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => {
                for s in v {
                    s.validate()?;
                }
            }
            SymbolSpec::Translate { inner, .. } | SymbolSpec::Reflect { inner } => inner.validate()?,
            SymbolSpec::Dilate { inner, lambda } => {
                if !(*lambda > 0.0) {
                    return invalid("dilation factor must be positive");
                }
                inner.validate()?
            }
            SymbolSpec::Heat { inner, s } => {
                if !(*s > 0.0) {
                    return invalid("heat time must be positive");
                }
                inner.validate()?
            }
            SymbolSpec::Reciprocal { inner, .. } => inner.validate()?,
            _ => {}
        }
        Ok(())
    }

    pub fn gauss_form(&self) -> Option<GaussForm> {
        match self {
            SymbolSpec::Gaussian { center, width, amplitude } => Some(GaussForm {
                amplitude: *amplitude,
                center: center.clone(),
                kappa: C64::new(1.0 / width, 0.0),
                power: 0,
            }),
            SymbolSpec::PolyGaussian { center, width, power, amplitude } => Some(GaussForm {
                amplitude: *amplitude,
                center: center.clone(),
                kappa: C64::new(1.0 / width, 0.0),
                power: *power,
            }),
            SymbolSpec::Oscillatory { a, center, amplitude } => Some(GaussForm {
                amplitude: *amplitude,
                center: center.clone(),
                kappa: C64::new(0.0, -a),
                power: 0,
            }),
            SymbolSpec::GaussianType { center, kappa, power, amplitude } => Some(GaussForm {
                amplitude: *amplitude,
                center: center.clone(),
                kappa: *kappa,
                power: *power,
            }),
            _ => None,
        }
    }

    fn from_gauss(g: GaussForm) -> SymbolSpec {
        SymbolSpec::GaussianType { center: g.center, kappa: g.kappa, power: g.power, amplitude: g.amplitude }
    }

    /// Pointwise value. Sampled profiles evaluate to NaN outside their range;
    /// use [`SymbolSpec::try_eval`] for a typed error.
    pub fn eval(&self, z: &[C64]) -> C64 {
        match self {
            SymbolSpec::Constant { value } => *value,
            SymbolSpec::Gaussian { .. }
            | SymbolSpec::PolyGaussian { .. }
            | SymbolSpec::Oscillatory { .. }
            | SymbolSpec::GaussianType { .. } => {
                let g = self.gauss_form().unwrap();
                let r2 = dist2(z, &g.center);
                g.amplitude * r2.powi(g.power as i32) * (-g.kappa * r2).exp()
            }
            SymbolSpec::Angular { modes, r0 } => {
                let r = z[0].norm();
                let chi = smooth_step(r / r0);
                if chi == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let th = z[0].arg();
                modes.iter().map(|m| m.c * C64::from_polar(1.0, m.m as f64 * th)).sum::<C64>() * chi
            }
            SymbolSpec::PlaneWave { xi, amplitude } => {
                amplitude * C64::from_polar(1.0, xi[0] * z[0].re + xi[1] * z[0].im)
            }
            SymbolSpec::Radial { profile } => C64::new(profile.eval(sq_norm(z).sqrt()), 0.0),
            SymbolSpec::Sum { terms } => terms.iter().map(|s| s.eval(z)).sum(),
            SymbolSpec::Product { factors } => factors.iter().map(|s| s.eval(z)).product(),
            SymbolSpec::Translate { inner, by } => {
                let w: Vec<C64> = z.iter().enumerate().map(|(i, zi)| zi - point_at(by, i)).collect();
                inner.eval(&w)
            }
            SymbolSpec::Reflect { inner } => {
                let w: Vec<C64> = z.iter().map(|zi| -zi).collect();
                inner.eval(&w)
            }
            SymbolSpec::Dilate { inner, lambda } => {
                let w: Vec<C64> = z.iter().map(|zi| zi * *lambda).collect();
                inner.eval(&w)
            }
            SymbolSpec::Heat { inner, s } => match heat_transform(inner, *s, z) {
                Ok(h) => h.value,
                Err(_) => C64::new(f64::NAN, f64::NAN),
            },
            SymbolSpec::Reciprocal { inner, lambda, patch_radius, .. } => {
                let r = sq_norm(z).sqrt();
                let chi = smooth_step(r - patch_radius);
                let patch = if lambda.norm() > 0.0 { -1.0 / lambda } else { C64::new(0.0, 0.0) };
                if chi == 0.0 {
                    patch
                } else {
                    chi / (inner.eval(z) - lambda) + (1.0 - chi) * patch
                }
            }
        }
    }

    pub fn try_eval(&self, z: &[C64]) -> Result<C64> {
        let v = self.eval(z);
        if v.re.is_finite() && v.im.is_finite() {
            return Ok(v);
        }
        if let Some(e) = self.find_extrapolation(z) {
            return Err(e);
        }
        Err(Error::InvalidParameter(format!("symbol not finite at {z:?}")))
    }

    fn find_extrapolation(&self, z: &[C64]) -> Option<Error> {
        match self {
            SymbolSpec::Radial { profile: RadialProfile::Sampled(s) } => s.eval(sq_norm(z).sqrt()).err(),
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => {
                v.iter().find_map(|s| s.find_extrapolation(z))
            }
            SymbolSpec::Translate { inner, by } => {
                let w: Vec<C64> = z.iter().enumerate().map(|(i, zi)| zi - point_at(by, i)).collect();
                inner.find_extrapolation(&w)
            }
            SymbolSpec::Reflect { inner } => {
                let w: Vec<C64> = z.iter().map(|zi| -zi).collect();
                inner.find_extrapolation(&w)
            }
            SymbolSpec::Dilate { inner, lambda } => {
                let w: Vec<C64> = z.iter().map(|zi| zi * *lambda).collect();
                inner.find_extrapolation(&w)
            }
            SymbolSpec::Reciprocal { inner, .. } => inner.find_extrapolation(z),
            _ => None,
        }
    }

    /// Tags asserted by the family. Each has a numeric check in [`check_tag`].
    pub fn tags(&self) -> BTreeSet<Tag> {
        use Tag::*;
        let all: BTreeSet<Tag> = Tag::all().into_iter().collect();
        let set = |v: &[Tag]| v.iter().copied().collect::<BTreeSet<Tag>>();
        match self {
            SymbolSpec::Constant { value } => {
                if value.norm() == 0.0 {
                    all
                } else {
                    set(&[Bounded, Buc, VoBoundary, SlowlyOscillating])
                }
            }
            SymbolSpec::Gaussian { .. }
            | SymbolSpec::PolyGaussian { .. }
            | SymbolSpec::Oscillatory { .. }
            | SymbolSpec::GaussianType { .. } => {
                let g = self.gauss_form().unwrap();
                if g.kappa.re > 0.0 {
                    all
                } else if g.power == 0 {
                    set(&[Bounded])
                } else {
                    BTreeSet::new()
                }
            }
            SymbolSpec::Angular { .. } => set(&[Bounded, Buc, VoBoundary, SlowlyOscillating]),
            SymbolSpec::PlaneWave { .. } => set(&[Bounded, Buc]),
            SymbolSpec::Radial { profile } => match profile {
                RadialProfile::SinSqrt | RadialProfile::Step { .. } => {
                    set(&[Bounded, Buc, VoBoundary, SlowlyOscillating])
                }
                RadialProfile::InvLog => all,
                RadialProfile::Sampled(_) => set(&[Bounded]),
            },
            SymbolSpec::Sum { terms } => {
                terms.iter().map(|s| s.tags()).reduce(|a, b| &a & &b).unwrap_or(all)
            }
            SymbolSpec::Product { factors } => {
                let mut common = factors.iter().map(|s| s.tags()).reduce(|a, b| &a & &b).unwrap_or_else(|| all.clone());
                if common.contains(&Bounded) && factors.iter().any(|s| s.tags().contains(&C0)) {
                    common.insert(C0);
                }
                common
            }
            SymbolSpec::Translate { inner, .. } | SymbolSpec::Reflect { inner } | SymbolSpec::Dilate { inner, .. } => {
                inner.tags()
            }
            SymbolSpec::Heat { inner, .. } => {
                let mut t = inner.tags();
                if t.contains(&Bounded) {
                    t.insert(Buc);
                }
                t
            }
            SymbolSpec::Reciprocal { inner, .. } => {
                let it = inner.tags();
                let mut t = set(&[Bounded]);
                for tag in [Buc, VoBoundary, SlowlyOscillating] {
                    if it.contains(&tag) {
                        t.insert(tag);
                    }
                }
                t
            }
        }
    }

    /// Certified bound on sup |f|, when the family provides one.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            SymbolSpec::Constant { value } => Some(value.norm()),
            SymbolSpec::Gaussian { .. }
            | SymbolSpec::PolyGaussian { .. }
            | SymbolSpec::Oscillatory { .. }
            | SymbolSpec::GaussianType { .. } => {
                let g = self.gauss_form().unwrap();
                if g.power == 0 && g.kappa.re >= 0.0 {
                    Some(g.amplitude.norm())
                } else if g.kappa.re > 0.0 {
                    let j = g.power as f64;
                    Some(g.amplitude.norm() * (j / (std::f64::consts::E * g.kappa.re)).powf(j))
                } else {
                    None
                }
            }
            SymbolSpec::Angular { modes, .. } => Some(modes.iter().map(|m| m.c.norm()).sum()),
            SymbolSpec::PlaneWave { amplitude, .. } => Some(amplitude.norm()),
            SymbolSpec::Radial { profile } => match profile {
                RadialProfile::SinSqrt | RadialProfile::InvLog | RadialProfile::Step { .. } => Some(1.0),
                RadialProfile::Sampled(s) => Some(s.values.iter().fold(0.0, |a: f64, v| a.max(v.abs()))),
            },
            SymbolSpec::Sum { terms } => terms.iter().map(|s| s.sup_bound()).sum(),
            SymbolSpec::Product { factors } => factors.iter().map(|s| s.sup_bound()).product(),
            SymbolSpec::Translate { inner, .. }
            | SymbolSpec::Reflect { inner }
            | SymbolSpec::Dilate { inner, .. }
            | SymbolSpec::Heat { inner, .. } => inner.sup_bound(),
            SymbolSpec::Reciprocal { lambda, margin, .. } => {
                let patch = if lambda.norm() > 0.0 { 1.0 / lambda.norm() } else { 0.0 };
                Some((1.0 / margin).max(0.0) + patch)
            }
        }
    }

    /// Structurally real-valued (used to symmetrize Toeplitz truncations).
    pub fn is_real(&self) -> bool {
        match self {
            SymbolSpec::Constant { value } => value.im == 0.0,
            SymbolSpec::Gaussian { amplitude, .. } | SymbolSpec::PolyGaussian { amplitude, .. } => amplitude.im == 0.0,
            SymbolSpec::GaussianType { amplitude, kappa, .. } => amplitude.im == 0.0 && kappa.im == 0.0,
            SymbolSpec::Oscillatory { a, amplitude, .. } => *a == 0.0 && amplitude.im == 0.0,
            SymbolSpec::Angular { modes, .. } => modes.iter().all(|x| {
                let partner: C64 = modes.iter().filter(|y| y.m == -x.m).map(|y| y.c).sum();
                (partner - x.c.conj()).norm() == 0.0 || (x.m == 0 && x.c.im == 0.0)
            }),
            SymbolSpec::PlaneWave { .. } => false,
            SymbolSpec::Radial { .. } => true,
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => v.iter().all(|s| s.is_real()),
            SymbolSpec::Translate { inner, .. }
            | SymbolSpec::Reflect { inner }
            | SymbolSpec::Dilate { inner, .. }
            | SymbolSpec::Heat { inner, .. } => inner.is_real(),
            SymbolSpec::Reciprocal { inner, lambda, .. } => inner.is_real() && lambda.im == 0.0,
        }
    }

    /// True when the symbol needs a single complex variable.
    pub fn one_variable_only(&self) -> bool {
        match self {
            SymbolSpec::Angular { .. } | SymbolSpec::PlaneWave { .. } => true,
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => v.iter().any(|s| s.one_variable_only()),
            SymbolSpec::Translate { inner, .. }
            | SymbolSpec::Reflect { inner }
            | SymbolSpec::Dilate { inner, .. }
            | SymbolSpec::Heat { inner, .. }
            | SymbolSpec::Reciprocal { inner, .. } => inner.one_variable_only(),
            _ => false,
        }
    }

    /// Set of angular Fourier modes m such that f(r e^{i th}) = sum h_m(r) e^{i m th}
    /// (one variable), or None when the expansion is not finite.
    pub fn mode_set(&self) -> Option<BTreeSet<i64>> {
        let zero: BTreeSet<i64> = [0].into_iter().collect();
        match self {
            SymbolSpec::Constant { .. } | SymbolSpec::Radial { .. } => Some(zero),
            SymbolSpec::Gaussian { .. }
            | SymbolSpec::PolyGaussian { .. }
            | SymbolSpec::Oscillatory { .. }
            | SymbolSpec::GaussianType { .. } => {
                let g = self.gauss_form().unwrap();
                is_origin(&g.center).then_some(zero)
            }
            SymbolSpec::Angular { modes, .. } => Some(modes.iter().map(|m| m.m).collect()),
            SymbolSpec::Sum { terms } => {
                let mut out = BTreeSet::new();
                for s in terms {
                    out.extend(s.mode_set()?);
                }
                Some(out)
            }
            SymbolSpec::Product { factors } => {
                let sets: Vec<BTreeSet<i64>> = factors.iter().map(|s| s.mode_set()).collect::<Option<_>>()?;
                let nonradial: Vec<&BTreeSet<i64>> = sets.iter().filter(|s| **s != zero).collect();
                match nonradial.len() {
                    0 => Some(zero),
                    1 => Some(nonradial[0].clone()),
                    _ => None,
                }
            }
            SymbolSpec::Translate { inner, by } => {
                if is_origin(by) {
                    inner.mode_set()
                } else {
                    None
                }
            }
            SymbolSpec::Reflect { inner } | SymbolSpec::Dilate { inner, .. } | SymbolSpec::Heat { inner, .. } => {
                inner.mode_set()
            }
            _ => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.mode_set(), Some(s) if s.len() == 1 && s.contains(&0))
    }

    /// h_m(r) in the angular expansion. Only meaningful when `mode_set` is Some.
    pub fn mode_value(&self, m: i64, r: f64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        match self {
            SymbolSpec::Constant { .. }
            | SymbolSpec::Radial { .. }
            | SymbolSpec::Gaussian { .. }
            | SymbolSpec::PolyGaussian { .. }
            | SymbolSpec::Oscillatory { .. }
            | SymbolSpec::GaussianType { .. } => {
                if m == 0 {
                    self.radial_value(r)
                } else {
                    zero
                }
            }
            SymbolSpec::Angular { modes, r0 } => {
                let chi = smooth_step(r / r0);
                modes.iter().filter(|x| x.m == m).map(|x| x.c).sum::<C64>() * chi
            }
            SymbolSpec::Sum { terms } => terms
                .iter()
                .filter(|s| s.mode_set().is_some_and(|set| set.contains(&m)))
                .map(|s| s.mode_value(m, r))
                .sum(),
            SymbolSpec::Product { factors } => {
                let mut acc = C64::new(1.0, 0.0);
                for f in factors {
                    if f.is_radial() {
                        acc *= f.mode_value(0, r);
                    } else {
                        acc *= f.mode_value(m, r);
                    }
                }
                if factors.iter().all(|f| f.is_radial()) && m != 0 {
                    zero
                } else {
                    acc
                }
            }
            SymbolSpec::Translate { inner, .. } => inner.mode_value(m, r),
            SymbolSpec::Reflect { inner } => {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                inner.mode_value(m, r) * sign
            }
            SymbolSpec::Dilate { inner, lambda } => inner.mode_value(m, lambda * r),
            SymbolSpec::Heat { inner, s } => {
                if inner.is_radial() {
                    if m != 0 {
                        return zero;
                    }
                    if let Some(v) = heat_closed(inner, *s, &[C64::new(r, 0.0)]) {
                        return v;
                    }
                }
                heat_mode(inner, m, *s, r).0
            }
            _ => C64::new(f64::NAN, f64::NAN),
        }
    }

    /// f evaluated at (r, 0, ..., 0).
    pub fn radial_value(&self, r: f64) -> C64 {
        self.eval(&[C64::new(r, 0.0)])
    }

    /// Radii where the radial dependence is only piecewise smooth; quadrature
    /// panels are aligned with them.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        match self {
            SymbolSpec::Angular { r0, .. } => vec![*r0],
            SymbolSpec::Radial { profile: RadialProfile::Sampled(s) } => s.radii.clone(),
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => {
                v.iter().flat_map(|s| s.radial_breakpoints()).collect()
            }
            SymbolSpec::Reflect { inner } => inner.radial_breakpoints(),
            SymbolSpec::Translate { inner, by } if is_origin(by) => inner.radial_breakpoints(),
            SymbolSpec::Dilate { inner, lambda } => inner.radial_breakpoints().into_iter().map(|r| r / lambda).collect(),
            SymbolSpec::Reciprocal { inner, patch_radius, .. } => {
                let mut v = inner.radial_breakpoints();
                v.push(*patch_radius);
                v.push(patch_radius + 1.0);
                v
            }
            _ => vec![],
        }
    }

    /// Largest radius on which the symbol is defined (sampled profiles).
    pub fn radial_extent(&self) -> Option<f64> {
        match self {
            SymbolSpec::Radial { profile: RadialProfile::Sampled(s) } => Some(s.range().1),
            SymbolSpec::Sum { terms: v } | SymbolSpec::Product { factors: v } => {
                v.iter().filter_map(|s| s.radial_extent()).reduce(f64::min)
            }
            SymbolSpec::Dilate { inner, lambda } => inner.radial_extent().map(|r| r / lambda),
            SymbolSpec::Reflect { inner } | SymbolSpec::Reciprocal { inner, .. } => inner.radial_extent(),
            SymbolSpec::Translate { inner, by } => inner.radial_extent().map(|r| r - sq_norm(by).sqrt()),
            _ => None,
        }
    }

    /// L^1 mass of |f| outside the ball of radius R (about the origin), when
    /// it can be certified in closed form. Used by module convolutions.
    pub fn l1_tail(&self, r: f64, n: usize) -> Option<f64> {
        match self {
            SymbolSpec::Gaussian { .. } | SymbolSpec::PolyGaussian { .. } | SymbolSpec::GaussianType { .. } => {
                let g = self.gauss_form().unwrap();
                if g.kappa.re <= 0.0 {
                    return None;
                }
                let k = g.kappa.re;
                let rr = (r - sq_norm(&g.center).sqrt()).max(0.0);
                // integral over |w|>rr of |w|^{2j} e^{-k|w|^2} dw in R^{2n}
                let a = g.power as f64 + n as f64;
                let mass = std::f64::consts::PI.powi(n as i32) / crate::special::ln_gamma(n as f64).exp()
                    * (crate::special::ln_gamma(a)).exp()
                    / k.powf(a);
                Some(g.amplitude.norm() * mass * crate::special::gamma_q(a, k * rr * rr))
            }
            SymbolSpec::Sum { terms } => terms.iter().map(|s| s.l1_tail(r, n)).sum(),
            _ => None,
        }
    }
}

/// w -> f(w - z), simplified inside closed families.
pub fn translate(f: &SymbolSpec, z: &[C64]) -> SymbolSpec {
    if is_origin(z) {
        return f.clone();
    }
    let add = |c: &[C64]| -> Vec<C64> {
        let n = c.len().max(z.len());
        (0..n).map(|i| point_at(c, i) + point_at(z, i)).collect()
    };
    match f {
        SymbolSpec::Constant { .. } => f.clone(),
        SymbolSpec::Gaussian { .. }
        | SymbolSpec::PolyGaussian { .. }
        | SymbolSpec::Oscillatory { .. }
        | SymbolSpec::GaussianType { .. } => {
            let mut g = f.gauss_form().unwrap();
            g.center = add(&g.center);
            match f {
                SymbolSpec::Gaussian { width, amplitude, .. } => {
                    SymbolSpec::Gaussian { center: g.center, width: *width, amplitude: *amplitude }
                }
                SymbolSpec::PolyGaussian { width, power, amplitude, .. } => {
                    SymbolSpec::PolyGaussian { center: g.center, width: *width, power: *power, amplitude: *amplitude }
                }
                SymbolSpec::Oscillatory { a, amplitude, .. } => {
                    SymbolSpec::Oscillatory { a: *a, center: g.center, amplitude: *amplitude }
                }
                _ => SymbolSpec::from_gauss(g),
            }
        }
        SymbolSpec::PlaneWave { xi, amplitude } => {
            let ph = C64::from_polar(1.0, -(xi[0] * z[0].re + xi[1] * z[0].im));
            SymbolSpec::PlaneWave { xi: *xi, amplitude: amplitude * ph }
        }
        SymbolSpec::Sum { terms } => SymbolSpec::Sum { terms: terms.iter().map(|s| translate(s, z)).collect() },
        SymbolSpec::Translate { inner, by } => {
            let total = add(by);
            if is_origin(&total) {
                (**inner).clone()
            } else {
                SymbolSpec::Translate { inner: inner.clone(), by: total }
            }
        }
        SymbolSpec::Heat { inner, s } => SymbolSpec::Heat { inner: Box::new(translate(inner, z)), s: *s },
        _ => SymbolSpec::Translate { inner: Box::new(f.clone()), by: z.to_vec() },
    }
}

/// w -> f(-w)
pub fn reflect(f: &SymbolSpec) -> SymbolSpec {
    let neg = |c: &[C64]| -> Vec<C64> { c.iter().map(|x| -x).collect() };
    match f {
        SymbolSpec::Constant { .. } | SymbolSpec::Radial { .. } => f.clone(),
        SymbolSpec::Gaussian { center, width, amplitude } => {
            SymbolSpec::Gaussian { center: neg(center), width: *width, amplitude: *amplitude }
        }
        SymbolSpec::PolyGaussian { center, width, power, amplitude } => {
            SymbolSpec::PolyGaussian { center: neg(center), width: *width, power: *power, amplitude: *amplitude }
        }
        SymbolSpec::Oscillatory { a, center, amplitude } => {
            SymbolSpec::Oscillatory { a: *a, center: neg(center), amplitude: *amplitude }
        }
        SymbolSpec::GaussianType { center, kappa, power, amplitude } => {
            SymbolSpec::GaussianType { center: neg(center), kappa: *kappa, power: *power, amplitude: *amplitude }
        }
        SymbolSpec::Angular { modes, r0 } => SymbolSpec::Angular {
            modes: modes
                .iter()
                .map(|m| AngularMode { m: m.m, c: if m.m.rem_euclid(2) == 0 { m.c } else { -m.c } })
                .collect(),
            r0: *r0,
        },
        SymbolSpec::PlaneWave { xi, amplitude } => SymbolSpec::PlaneWave { xi: [-xi[0], -xi[1]], amplitude: *amplitude },
        SymbolSpec::Sum { terms } => SymbolSpec::Sum { terms: terms.iter().map(reflect).collect() },
        SymbolSpec::Product { factors } => SymbolSpec::Product { factors: factors.iter().map(reflect).collect() },
        SymbolSpec::Reflect { inner } => (**inner).clone(),
        SymbolSpec::Translate { inner, by } => SymbolSpec::Translate { inner: Box::new(reflect(inner)), by: neg(by) },
        SymbolSpec::Dilate { inner, lambda } => SymbolSpec::Dilate { inner: Box::new(reflect(inner)), lambda: *lambda },
        SymbolSpec::Heat { inner, s } => SymbolSpec::Heat { inner: Box::new(reflect(inner)), s: *s },
        _ => SymbolSpec::Reflect { inner: Box::new(f.clone()) },
    }
}

/// w -> f(lambda w)
pub fn dilate(f: &SymbolSpec, lambda: f64) -> SymbolSpec {
    if lambda == 1.0 {
        return f.clone();
    }
    let scale = |c: &[C64]| -> Vec<C64> { c.iter().map(|x| x / lambda).collect() };
    let l2 = lambda * lambda;
    match f {
        SymbolSpec::Constant { .. } => f.clone(),
        SymbolSpec::Gaussian { center, width, amplitude } => {
            SymbolSpec::Gaussian { center: scale(center), width: width / l2, amplitude: *amplitude }
        }
        SymbolSpec::PolyGaussian { center, width, power, amplitude } => SymbolSpec::PolyGaussian {
            center: scale(center),
            width: width / l2,
            power: *power,
            amplitude: amplitude * l2.powi(*power as i32),
        },
        SymbolSpec::Oscillatory { a, center, amplitude } => {
            SymbolSpec::Oscillatory { a: a * l2, center: scale(center), amplitude: *amplitude }
        }
        SymbolSpec::GaussianType { center, kappa, power, amplitude } => SymbolSpec::GaussianType {
            center: scale(center),
            kappa: kappa * l2,
            power: *power,
            amplitude: amplitude * l2.powi(*power as i32),
        },
        SymbolSpec::Angular { modes, r0 } => SymbolSpec::Angular { modes: modes.clone(), r0: r0 / lambda },
        SymbolSpec::PlaneWave { xi, amplitude } => {
            SymbolSpec::PlaneWave { xi: [xi[0] * lambda, xi[1] * lambda], amplitude: *amplitude }
        }
        SymbolSpec::Sum { terms } => SymbolSpec::Sum { terms: terms.iter().map(|s| dilate(s, lambda)).collect() },
        SymbolSpec::Product { factors } => {
            SymbolSpec::Product { factors: factors.iter().map(|s| dilate(s, lambda)).collect() }
        }
        SymbolSpec::Dilate { inner, lambda: mu } => {
            let total = mu * lambda;
            if total == 1.0 {
                (**inner).clone()
            } else {
                SymbolSpec::Dilate { inner: inner.clone(), lambda: total }
            }
        }
        SymbolSpec::Translate { inner, by } => {
            SymbolSpec::Translate { inner: Box::new(dilate(inner, lambda)), by: scale(by) }
        }
        SymbolSpec::Reflect { inner } => reflect(&dilate(inner, lambda)),
        SymbolSpec::Heat { inner, s } => SymbolSpec::Heat { inner: Box::new(dilate(inner, lambda)), s: s / l2 },
        _ => SymbolSpec::Dilate { inner: Box::new(f.clone()), lambda },
    }
}

/// The heat-smoothed symbol g_s * f, in closed form when the family allows.
pub fn heat_symbol(f: &SymbolSpec, s: f64) -> SymbolSpec {
    match f {
        SymbolSpec::Constant { .. } => f.clone(),
        SymbolSpec::Gaussian { .. }
        | SymbolSpec::PolyGaussian { .. }
        | SymbolSpec::Oscillatory { .. }
        // the (1+ks)^{-n} prefactor depends on the dimension, which is only known
        // at evaluation time; evaluation of the wrapper is still closed form
        | SymbolSpec::GaussianType { .. } => SymbolSpec::Heat { inner: Box::new(f.clone()), s },
        SymbolSpec::PlaneWave { xi, amplitude } => SymbolSpec::PlaneWave {
            xi: *xi,
            amplitude: amplitude * (-s * (xi[0] * xi[0] + xi[1] * xi[1]) / 4.0).exp(),
        },
        SymbolSpec::Sum { terms } => SymbolSpec::Sum { terms: terms.iter().map(|x| heat_symbol(x, s)).collect() },
        SymbolSpec::Heat { inner, s: s0 } => SymbolSpec::Heat { inner: inner.clone(), s: s0 + s },
        _ => SymbolSpec::Heat { inner: Box::new(f.clone()), s },
    }
}

/// Closed-form heat transform of a Gaussian-type term in n variables:
/// (-d/dk)^j of A (1+ks)^{-n} exp(-k rho / (1+ks)), by truncated power-series
/// arithmetic in the perturbation of kappa.
pub fn gauss_heat(g: &GaussForm, s: f64, z: &[C64]) -> C64 {
    let n = z.len().max(g.center.len()).max(1);
    let rho = dist2(z, &g.center);
    let k = g.kappa;
    let d = 1.0 + k * s;
    let j = g.power as usize;
    let base = d.powc(C64::new(-(n as f64), 0.0));
    if j == 0 {
        return g.amplitude * base * (-k * rho / d).exp();
    }
    let sigma = s / d;
    // (1 + sigma e)^{-n}
    let pre: Vec<C64> = (0..=j)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sigma.powu(i as u32) * (sign * binomial((n + i - 1) as u64, i as u64))
        })
        .collect();
    // exponent -rho q(e), q_0 = k/d, q_i = (-1)^{i+1} s^{i-1} / d^{i+1}
    let a: Vec<C64> = (0..=j)
        .map(|i| {
            if i == 0 {
                -rho * k / d
            } else {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                -rho * sign * s.powi(i as i32 - 1) / d.powu(i as u32 + 1)
            }
        })
        .collect();
    let mut e = vec![C64::new(0.0, 0.0); j + 1];
    e[0] = a[0].exp();
    for i in 1..=j {
        let mut acc = C64::new(0.0, 0.0);
        for m in 1..=i {
            acc += a[m] * e[i - m] * m as f64;
        }
        e[i] = acc / i as f64;
    }
    let fj: C64 = (0..=j).map(|i| pre[i] * e[j - i]).sum();
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    g.amplitude * base * fj * (sign * ln_factorial(j as u64).exp())
}

/// (g_s * f)(z) with an error bound.
pub fn heat_transform(f: &SymbolSpec, s: f64, z: &[C64]) -> Result<HeatValue> {
    if !(s > 0.0) {
        return invalid(format!("heat time must be positive, got {s}"));
    }
    if let Some(v) = heat_closed(f, s, z) {
        return Ok(HeatValue { value: v, method: HeatMethod::ClosedForm, error_bound: 0.0 });
    }
    if let SymbolSpec::Heat { inner, s: s0 } = f {
        return heat_transform(inner, s0 + s, z);
    }
    if z.len() != 1 {
        return Err(Error::Unsupported("numerical heat transforms are implemented for n = 1".into()));
    }
    if let Some(modes) = f.mode_set() {
        let rho = z[0].norm();
        let th = z[0].arg();
        let mut total = C64::new(0.0, 0.0);
        let mut err = 0.0;
        for m in modes {
            let (v, e) = heat_mode(f, m, s, rho);
            total += v * C64::from_polar(1.0, m as f64 * th);
            err += e;
        }
        return Ok(HeatValue { value: total, method: HeatMethod::ModeQuadrature, error_bound: err });
    }
    heat_polar(f, s, z[0])
}

fn heat_closed(f: &SymbolSpec, s: f64, z: &[C64]) -> Option<C64> {
    match f {
        SymbolSpec::Constant { value } => Some(*value),
        SymbolSpec::Gaussian { .. }
        | SymbolSpec::PolyGaussian { .. }
        | SymbolSpec::Oscillatory { .. }
        | SymbolSpec::GaussianType { .. } => {
            let g = f.gauss_form().unwrap();
            if g.kappa.re < 0.0 || (1.0 + g.kappa * s).norm() == 0.0 {
                return None;
            }
            Some(gauss_heat(&g, s, z))
        }
        SymbolSpec::PlaneWave { xi, .. } => {
            Some(f.eval(z) * (-s * (xi[0] * xi[0] + xi[1] * xi[1]) / 4.0).exp())
        }
        SymbolSpec::Sum { terms } => terms.iter().map(|x| heat_closed(x, s, z)).sum(),
        SymbolSpec::Translate { inner, by } => {
            let w: Vec<C64> = z.iter().enumerate().map(|(i, zi)| zi - point_at(by, i)).collect();
            heat_closed(inner, s, &w)
        }
        SymbolSpec::Reflect { inner } => {
            let w: Vec<C64> = z.iter().map(|x| -x).collect();
            heat_closed(inner, s, &w)
        }
        SymbolSpec::Dilate { inner, lambda } => {
            let w: Vec<C64> = z.iter().map(|x| x * *lambda).collect();
            heat_closed(inner, s * lambda * lambda, &w)
        }
        SymbolSpec::Heat { inner, s: s0 } => heat_closed(inner, s0 + s, z),
        _ => None,
    }
}

/// Heat transform of the single mode h_m(r) e^{i m th} at the real point rho:
/// int (2r/s) e^{-(rho-r)^2/s} h_m(r) [e^{-x} I_m(x)](x = 2 rho r / s) dr.
fn heat_mode(f: &SymbolSpec, m: i64, s: f64, rho: f64) -> (C64, f64) {
    let sq = s.sqrt();
    let lo = (rho - 10.0 * sq).max(0.0);
    let hi = rho + 10.0 * sq;
    // the cutoffs inside breakpoints are smooth but steep; resolve them finer
    let breaks: Vec<f64> = f
        .radial_breakpoints()
        .iter()
        .flat_map(|&b| (1..=8).map(move |k| b * k as f64 / 8.0))
        .collect();
    let integrate = |width: f64| -> C64 {
        composite_gl(lo, hi, width, 10, &breaks)
            .into_iter()
            .map(|(r, w)| {
                let x = 2.0 * rho * r / s;
                let kern = 2.0 * r / s * (-(rho - r) * (rho - r) / s).exp() * scaled_bessel_i(m, x);
                f.mode_value(m, r) * (w * kern)
            })
            .sum()
    };
    let fine = integrate(0.5 * sq);
    let coarse = integrate(sq);
    let tail = f.sup_bound().unwrap_or(1.0) * (-100.0f64).exp();
    (fine, (fine - coarse).norm() + tail)
}

/// Generic polar quadrature about z: int_0^U e^{-u} (1/2pi) int f(z - sqrt(su) e^{ith}) dth du.
pub fn heat_polar(f: &SymbolSpec, s: f64, z: C64) -> Result<HeatValue> {
    let bound = f
        .sup_bound()
        .ok_or_else(|| Error::Certification("heat transform needs a certified bound on |f|".into()))?;
    let u_max = 40.0;
    let count = 96usize;
    let rule = |width: f64| composite_gl(0.0, u_max, width, 12, &[]);
    let eval = |rule: &[(f64, f64)], stride: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(u, w) in rule {
            let r = (s * u).sqrt();
            let mut ring = C64::new(0.0, 0.0);
            let mut cnt = 0;
            for j in (0..count).step_by(stride) {
                let th = TAU * j as f64 / count as f64;
                ring += f.eval(&[z - C64::from_polar(r, th)]);
                cnt += 1;
            }
            acc += ring / cnt as f64 * (w * (-u).exp());
        }
        acc
    };
    let fine_rule = rule(1.0);
    let fine = eval(&fine_rule, 1);
    if !(fine.re.is_finite() && fine.im.is_finite()) {
        return Err(f.try_eval(&[z]).err().unwrap_or(Error::Certification("non-finite heat integrand".into())));
    }
    let coarse_a = eval(&fine_rule, 2);
    let coarse_r = eval(&rule(2.0), 1);
    let err = (fine - coarse_a).norm() + (fine - coarse_r).norm() + bound * (-u_max).exp();
    Ok(HeatValue { value: fine, method: HeatMethod::Quadrature, error_bound: err })
}

pub fn heat_transform_many(f: &SymbolSpec, s: f64, points: &[Vec<C64>]) -> Result<HeatTransformResult> {
    let mut values = Vec::with_capacity(points.len());
    let mut method = HeatMethod::ClosedForm;
    let mut err: f64 = 0.0;
    for p in points {
        let h = heat_transform(f, s, p)?;
        if h.method != HeatMethod::ClosedForm {
            method = h.method;
        }
        err = err.max(h.error_bound);
        values.push((p.clone(), h.value));
    }
    Ok(HeatTransformResult { s, values, method, error_bound: err })
}

fn circle_points(n: usize, r: f64, count: usize) -> Vec<Vec<C64>> {
    let mut pts = Vec::new();
    for j in 0..count {
        let th = TAU * j as f64 / count as f64;
        let u = C64::from_polar(r, th);
        for i in 0..n {
            let mut p = vec![C64::new(0.0, 0.0); n];
            p[i] = u;
            pts.push(p);
        }
        if n > 1 {
            pts.push(vec![u / (n as f64).sqrt(); n]);
        }
    }
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct Oscillation {
    pub value: f64,
    pub coarse: f64,
    pub converged: bool,
}

/// max over |z| = R and |w| <= delta of |f(z) - f(z - w)|, on a grid that is
/// refined once; `converged` compares the two grids.
pub fn oscillation(f: &SymbolSpec, n: usize, radius: f64, delta: f64) -> Oscillation {
    let run = |zc: usize, wr: usize, wa: usize| -> f64 {
        let mut best: f64 = 0.0;
        for z in circle_points(n, radius, zc) {
            let fz = f.eval(&z);
            for i in 1..=wr {
                let rr = delta * i as f64 / wr as f64;
                for j in 0..wa {
                    let u = C64::from_polar(rr, TAU * j as f64 / wa as f64);
                    for k in 0..n {
                        let mut w = z.clone();
                        w[k] -= u;
                        best = best.max((fz - f.eval(&w)).norm());
                    }
                }
            }
        }
        best
    };
    let coarse = run(64, 4, 12);
    let value = run(128, 8, 24);
    let converged = (value - coarse).abs() <= 0.1 * value + 1e-12;
    Oscillation { value, coarse, converged }
}

/// sup over |z| = R, |w| <= 1 of |f(z) - f(z - w)|.
pub fn vo_modulus(f: &SymbolSpec, n: usize, radius: f64) -> Oscillation {
    oscillation(f, n, radius, 1.0)
}

/// sup over a grid on |z| = R of |f(z)|.
pub fn c0_tail(f: &SymbolSpec, n: usize, radius: f64) -> f64 {
    circle_points(n, radius, 256).iter().map(|z| f.eval(z).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct TagCheck {
    pub tag: Tag,
    pub passed: bool,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Numeric evidence for a tag. Decay checks require strictly decreasing
/// values along the radii with the last one small; boundedness compares
/// sampled values with the certified bound.
pub fn check_tag(f: &SymbolSpec, n: usize, tag: Tag) -> TagCheck {
    let decreasing = |v: &[f64], last_max: f64| v.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-14) && v[v.len() - 1] < last_max;
    match tag {
        Tag::Bounded => {
            let radii = vec![0.0, 1.0, 4.0, 16.0, 64.0];
            let values: Vec<f64> = radii.iter().map(|&r| c0_tail(f, n, r)).collect();
            let passed = f.sup_bound().is_some_and(|b| values.iter().all(|&v| v <= b * (1.0 + 1e-9) + 1e-12));
            TagCheck { tag, passed, radii, values }
        }
        Tag::C0 => {
            let radii = vec![8.0, 16.0, 32.0];
            let values: Vec<f64> = radii.iter().map(|&r| c0_tail(f, n, r)).collect();
            let passed = decreasing(&values, 0.5);
            TagCheck { tag, passed, radii, values }
        }
        Tag::VoBoundary => {
            let radii = vec![10.0, 40.0, 160.0];
            let values: Vec<f64> = radii.iter().map(|&r| vo_modulus(f, n, r).value).collect();
            let passed = decreasing(&values, 0.5);
            TagCheck { tag, passed, radii, values }
        }
        Tag::Buc => {
            // modulus of continuity at a small scale, uniform over radii
            let radii = vec![1.0, 8.0, 64.0];
            let values: Vec<f64> = radii.iter().map(|&r| oscillation(f, n, r, 1e-3).value).collect();
            let passed = values.iter().all(|&v| v < 0.05);
            TagCheck { tag, passed, radii, values }
        }
        Tag::SlowlyOscillating => {
            // oscillation over shrinking shifts far out
            let radii = vec![16.0, 64.0, 256.0];
            let values: Vec<f64> = radii.iter().map(|&r| oscillation(f, n, r, 0.25).value).collect();
            let passed = values[values.len() - 1] < 0.1 && values.windows(2).all(|w| w[1] <= w[0] * 1.5 + 1e-12);
            TagCheck { tag, passed, radii, values }
        }
    }
}

/// Supremum of |g_s * f| over C^n: closed form for Gaussian-type terms,
/// otherwise a polar grid search combined with the boundary values of the
/// angular part (heat flow preserves limits along rays).
pub fn heat_sup(f: &SymbolSpec, s: f64, n: usize) -> Result<f64> {
    match f {
        SymbolSpec::Constant { value } => return Ok(value.norm()),
        _ => {}
    }
    if let Some(g) = f.gauss_form() {
        if g.power == 0 && g.kappa.re >= 0.0 {
            return Ok(g.amplitude.norm() * (1.0 + g.kappa * s).norm().powi(-(n as i32)));
        }
    }
    if n != 1 {
        return Err(Error::Unsupported("numerical heat suprema are implemented for n = 1".into()));
    }
    let mut best: f64 = boundary_sup(f).unwrap_or(0.0);
    let radii: Vec<f64> = (0..=48).map(|i| 0.25 * i as f64).chain((1..=8).map(|i| 12.0 * i as f64)).collect();
    if let Some(modes) = f.mode_set() {
        // radius and angle separate: one radial integral per mode and radius
        let modes: Vec<i64> = modes.into_iter().collect();
        let ring_sup = |rho: f64| -> f64 {
            let h: Vec<C64> = modes.iter().map(|&m| heat_mode(f, m, s, rho).0).collect();
            (0..720)
                .map(|j| {
                    let th = TAU * j as f64 / 720.0;
                    modes.iter().zip(&h).map(|(&m, v)| v * C64::from_polar(1.0, m as f64 * th)).sum::<C64>().norm()
                })
                .fold(0.0, f64::max)
        };
        let (mut r, mut cur) = (0.0, 0.0);
        for &rho in &radii {
            let v = ring_sup(rho);
            if v > cur {
                (r, cur) = (rho, v);
            }
        }
        let mut step = 0.125;
        for _ in 0..30 {
            let mut improved = false;
            for dr in [step, -step] {
                let rr = (r + dr).max(0.0);
                let v = ring_sup(rr);
                if v > cur {
                    (r, cur) = (rr, v);
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        return Ok(best.max(cur));
    }
    let mut top = (0.0, 0.0, 0.0);
    for &r in &radii {
        for j in 0..48 {
            let th = TAU * j as f64 / 48.0;
            let v = heat_transform(f, s, &[C64::from_polar(r, th)])?.value.norm();
            if v > top.0 {
                top = (v, r, th);
            }
        }
    }
    best = best.max(top.0);
    // local refinement around the best grid point
    let (mut r, mut th) = (top.1, top.2);
    let mut step = (0.125, TAU / 96.0);
    let mut cur = top.0;
    for _ in 0..30 {
        let mut improved = false;
        for (dr, dt) in [(step.0, 0.0), (-step.0, 0.0), (0.0, step.1), (0.0, -step.1)] {
            let rr = (r + dr).max(0.0);
            let v = heat_transform(f, s, &[C64::from_polar(rr, th + dt)])?.value.norm();
            if v > cur {
                cur = v;
                r = rr;
                th += dt;
                improved = true;
            }
        }
        if !improved {
            step = (step.0 * 0.5, step.1 * 0.5);
        }
    }
    Ok(best.max(cur))
}

/// sup of |f| "at infinity" along rays, for symbols whose limits along rays
/// are known in closed form (angular part of mode expansions).
fn boundary_sup(f: &SymbolSpec) -> Option<f64> {
    let modes = f.mode_set()?;
    let mut best: f64 = 0.0;
    for j in 0..2048 {
        let th = TAU * j as f64 / 2048.0;
        let v: C64 = modes
            .iter()
            .map(|&m| boundary_mode(f, m) * C64::from_polar(1.0, m as f64 * th))
            .sum();
        best = best.max(v.norm());
    }
    Some(best)
}

/// lim_{r -> infinity} h_m(r) for the families where it is explicit.
fn boundary_mode(f: &SymbolSpec, m: i64) -> C64 {
    match f {
        SymbolSpec::Angular { modes, .. } => modes.iter().filter(|x| x.m == m).map(|x| x.c).sum(),
        SymbolSpec::Constant { value } => {
            if m == 0 {
                *value
            } else {
                C64::new(0.0, 0.0)
            }
        }
        SymbolSpec::Sum { terms } => terms
            .iter()
            .filter(|s| s.mode_set().is_some_and(|set| set.contains(&m)))
            .map(|s| boundary_mode(s, m))
            .sum(),
        SymbolSpec::Heat { inner, .. } | SymbolSpec::Dilate { inner, .. } => boundary_mode(inner, m),
        SymbolSpec::Reflect { inner } => {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            boundary_mode(inner, m) * sign
        }
        _ => C64::new(0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(SymbolSpec::constant(1.0).eval(&[c(3.0, 2.0)]), c(1.0, 0.0));
        assert_eq!(SymbolSpec::gaussian(1.0, vec![]).eval(&[c(0.0, 0.0)]), c(1.0, 0.0));
        let ang = SymbolSpec::angular(&[(1, c(1.0, 0.0))], 1.0);
        assert!((ang.eval(&[c(2.0, 0.0)]) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(ang.eval(&[c(0.0, 0.0)]), c(0.0, 0.0));
    }

    #[test]
    fn gaussian_heat_closed_form() {
        let a = 1.3;
        let f = SymbolSpec::gaussian(a, vec![]);
        for &(s, z) in &[(0.4, c(0.3, -0.2)), (1.5, c(2.0, 1.0))] {
            let h = heat_transform(&f, s, &[z]).unwrap();
            let want = a / (a + s) * (-z.norm_sqr() / (a + s)).exp();
            assert!((h.value - want).norm() < 1e-14);
            assert_eq!(h.method, HeatMethod::ClosedForm);
        }
    }

    #[test]
    fn poly_gaussian_heat_matches_quadrature() {
        let f = SymbolSpec::PolyGaussian { center: vec![c(0.5, 0.0)], width: 0.8, power: 2, amplitude: c(1.0, 0.5) };
        let wrapped = SymbolSpec::Product { factors: vec![f.clone(), SymbolSpec::constant(1.0)] };
        for z in [c(0.1, 0.2), c(-1.0, 0.7)] {
            let exact = heat_transform(&f, 0.6, &[z]).unwrap().value;
            let num = heat_polar(&wrapped, 0.6, z).unwrap().value;
            assert!((exact - num).norm() < 1e-10, "{exact} vs {num}");
        }
    }

    #[test]
    fn group_actions_are_exact() {
        let f = SymbolSpec::gaussian(0.7, vec![c(0.3, 0.1)]);
        let z = [c(1.0, -0.5)];
        let w = [c(0.2, 0.9)];
        let tf = translate(&f, &z);
        assert!((tf.eval(&w) - f.eval(&[w[0] - z[0]])).norm() < 1e-15);
        let rr = reflect(&reflect(&f));
        assert!((rr.eval(&w) - f.eval(&w)).norm() < 1e-15);
        let d = dilate(&SymbolSpec::gaussian(2.0, vec![]), 2.0);
        assert!((d.eval(&w) - SymbolSpec::gaussian(0.5, vec![]).eval(&w)).norm() < 1e-15);
        let ang = SymbolSpec::angular(&[(1, c(1.0, 0.0)), (-2, c(0.5, 0.0))], 1.0);
        let ra = reflect(&ang);
        assert!((ra.eval(&w) - ang.eval(&[-w[0]])).norm() < 1e-14);
        let da = dilate(&ang, 3.0);
        assert!((da.eval(&w) - ang.eval(&[w[0] * 3.0])).norm() < 1e-14);
    }

    #[test]
    fn heat_of_angular_tends_to_boundary_values() {
        let ang = SymbolSpec::angular(&[(1, c(1.0, 0.0))], 1.0);
        let far = heat_transform(&ang, 0.5, &[c(0.0, 40.0)]).unwrap();
        assert!((far.value - c(0.0, 1.0)).norm() < 0.5 / 1600.0, "{:?}", far);
        assert_eq!(far.method, HeatMethod::ModeQuadrature);
    }

    #[test]
    fn mode_heat_matches_brute_force_grid() {
        let ang = SymbolSpec::angular(&[(1, c(1.0, 0.0)), (-2, c(0.5, 0.0))], 1.0);
        let s = 0.7;
        for z in [c(0.4, 0.3), c(-1.2, 0.8)] {
            let a = heat_transform(&ang, s, &[z]).unwrap().value;
            let (h, l) = (0.005, 7.0);
            let n = (2.0 * l / h) as i64;
            let mut grid = c(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let w = c(-l + (i as f64 + 0.5) * h, -l + (j as f64 + 0.5) * h);
                    grid += ang.eval(&[z - w]) * ((-w.norm_sqr() / s).exp() / (std::f64::consts::PI * s) * h * h);
                }
            }
            assert!((a - grid).norm() < 1e-9, "{a} vs {grid}");
            let p = heat_polar(&ang, s, z).unwrap();
            assert!((p.value - grid).norm() <= p.error_bound);
        }
    }

    #[test]
    fn sampled_profile_refuses_extrapolation() {
        let p = SampledProfile::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25]).unwrap();
        let f = SymbolSpec::radial(RadialProfile::Sampled(p));
        assert!(f.try_eval(&[c(1.5, 0.0)]).is_ok());
        assert!(matches!(f.try_eval(&[c(3.0, 0.0)]), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn serde_roundtrip_and_unknown_keys() {
        let f = SymbolSpec::sum(vec![
            SymbolSpec::gaussian(1.0, vec![c(0.5, -0.5)]),
            SymbolSpec::angular(&[(1, c(1.0, 0.0))], 1.0),
        ]);
        let s = toml::to_string(&f).unwrap();
        let back: SymbolSpec = toml::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = "family = \"gaussian\"\nwidth = 1.0\nwdith = 2.0\n";
        assert!(toml::from_str::<SymbolSpec>(bad).is_err());
        let plain: SymbolSpec = toml::from_str("family = \"constant\"\nvalue = 2.5\n").unwrap();
        assert_eq!(plain, SymbolSpec::constant(2.5));
    }

    #[test]
    fn tails_and_moduli() {
        let g = SymbolSpec::gaussian(1.0, vec![]);
        assert!(c0_tail(&g, 1, 6.0) < 1e-15);
        assert_eq!(c0_tail(&SymbolSpec::constant(1.0), 1, 6.0), 1.0);
        let vo = SymbolSpec::radial(RadialProfile::SinSqrt);
        let v: Vec<f64> = [10.0, 40.0, 160.0].iter().map(|&r| vo_modulus(&vo, 1, r).value).collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert_eq!(vo_modulus(&SymbolSpec::constant(3.0), 1, 10.0).value, 0.0);
    }
}
