//! Two independent constructions of the random monochromatic wave.
//!
//! The plane-wave superposition `√(2/K) Σ cos(x·θ_k + η_k)` has exactly the
//! monochromatic covariance kernel for any K and is asymptotically Gaussian;
//! the truncated Bessel–Fourier expansion with i.i.d. standard normal
//! coefficients is exactly Gaussian with the kernel truncated at the degree
//! cap. Each construction's weakness is the other's strength, so both are
//! kept and cross-validated statistically.

use crate::jets::{multi_indices, Jet, JetSpace, MAX_ORDER};
use crate::special::{degree_multiplicity, radial_profile_derivs, split_order};
use crate::stats::{derive_seed, rng_from_seed};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {requested} exceeds cap {cap}")]
    DerivativeDepth { requested: usize, cap: usize },
}

/// Values are clipped to this band before covariance products, keeping the
/// pair product inside the bounded-functional framework; the Gaussian tail
/// beyond contributes less than 1e-14.
pub const COVARIANCE_CLIP: f64 = 8.0;

/// Tested derivative depth cap of the public evaluation operations.
pub const EVAL_DERIVATIVE_CAP: usize = 4;

/// Anything that can be evaluated, with analytic derivatives, at points of
/// R^d. Derivatives are returned in the canonical multi-index enumeration of
/// [`crate::jets::multi_indices`].
pub trait FieldSource {
    fn dim(&self) -> usize;
    /// Highest supported derivative order.
    fn derivative_cap(&self) -> usize;
    /// Radius of the ball on which evaluations are accepted.
    fn domain_radius(&self) -> f64;
    /// All derivatives ∂^α at `y` for |α| ≤ order.
    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError>;

    /// Value only.
    fn value_at(&self, y: &[f64]) -> Result<f64, FieldError> {
        Ok(self.eval_derivs(y, 0)?[0])
    }
}

/// A source read through a fixed offset: evaluating at y reads the inner
/// source at y + offset. [`ShiftedSource::then`] adds offsets coordinate-wise
/// before any evaluation happens, so a shift followed by its negation is the
/// identity bit for bit.
pub struct ShiftedSource<'a> {
    inner: &'a dyn FieldSource,
    offset: Vec<f64>,
}

impl<'a> ShiftedSource<'a> {
    pub fn new(inner: &'a dyn FieldSource, offset: &[f64]) -> Self {
        ShiftedSource { inner, offset: offset.to_vec() }
    }

    /// Compose with a further shift.
    pub fn then(&self, extra: &[f64]) -> ShiftedSource<'a> {
        let offset = self.offset.iter().zip(extra).map(|(a, b)| a + b).collect();
        ShiftedSource { inner: self.inner, offset }
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
}

impl FieldSource for ShiftedSource<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn derivative_cap(&self) -> usize {
        self.inner.derivative_cap()
    }

    fn domain_radius(&self) -> f64 {
        let shift: f64 = self.offset.iter().map(|v| v * v).sum::<f64>().sqrt();
        (self.inner.domain_radius() - shift).max(0.0)
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        let shifted: Vec<f64> = y.iter().zip(&self.offset).map(|(a, b)| a + b).collect();
        self.inner.eval_derivs(&shifted, order)
    }
}

/// One cosine wave A·cos(k·y + η).
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTerm {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    pub phase: f64,
}

/// A finite superposition of cosine waves. Plane-wave field samples and
/// localized torus eigenfunctions both take this form, and every derivative
/// is closed-form: ∂^α picks up Π θ_i^{α_i} and a quarter-period phase shift
/// per derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSum {
    dim: usize,
    terms: Vec<CosineTerm>,
}

impl CosineSum {
    pub fn new(dim: usize, terms: Vec<CosineTerm>) -> Self {
        debug_assert!(terms.iter().all(|t| t.wavevector.len() == dim));
        CosineSum { dim, terms }
    }

    pub fn terms(&self) -> &[CosineTerm] {
        &self.terms
    }
}

impl FieldSource for CosineSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivative_cap(&self) -> usize {
        MAX_ORDER
    }

    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        if order > MAX_ORDER {
            return Err(FieldError::DerivativeDepth { requested: order, cap: MAX_ORDER });
        }
        if y.len() != self.dim {
            return Err(FieldError::Domain(format!(
                "point has {} coordinates, field dimension is {}",
                y.len(),
                self.dim
            )));
        }
        let indices = multi_indices(self.dim, order);
        let mut out = vec![0.0f64; indices.len()];
        for t in &self.terms {
            let arg = t.wavevector.iter().zip(y).map(|(k, v)| k * v).sum::<f64>() + t.phase;
            let (s, c) = arg.sin_cos();
            // cos(arg + mπ/2) for m = |α| mod 4
            let quarter = [c, -s, -c, s];
            for (slot, alpha) in out.iter_mut().zip(&indices) {
                let total = (alpha[0] + alpha[1] + alpha[2]) as usize;
                let mut factor = t.amplitude * quarter[total % 4];
                for (i, &a) in alpha.iter().enumerate().take(self.dim) {
                    for _ in 0..a {
                        factor *= t.wavevector[i];
                    }
                }
                *slot += factor;
            }
        }
        Ok(out)
    }
}

/// Sampler state for the plane-wave construction: K unit directions and K
/// phases, regenerated bit-identically from (seed, d, K).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveEnsemble {
    dim: usize,
    directions: Vec<Vec<f64>>,
    phases: Vec<f64>,
    seed: Option<u64>,
}

/// Draw K directions i.i.d. uniform on S^{d−1} (normalized Gaussians) and K
/// uniform phases. The induced field √(2/K) Σ cos(x·θ_k + η_k) has exactly
/// the monochromatic kernel as its two-point covariance for every K, and is
/// approximately Gaussian for large K.
pub fn sample_plane_wave(dim: usize, count: usize, seed: u64) -> Result<PlaneWaveEnsemble, FieldError> {
    if dim != 2 && dim != 3 {
        return Err(FieldError::InvalidParameter(format!("dimension {dim} not in {{2,3}}")));
    }
    if count == 0 {
        return Err(FieldError::InvalidParameter("direction count K must be ≥ 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut directions = Vec::with_capacity(count);
    let mut phases = Vec::with_capacity(count);
    for _ in 0..count {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                directions.push(v.into_iter().map(|x| x / norm).collect());
                break;
            }
        }
        phases.push(rng.gen::<f64>() * 2.0 * PI);
    }
    Ok(PlaneWaveEnsemble { dim, directions, phases, seed: Some(seed) })
}

impl PlaneWaveEnsemble {
    /// Build an ensemble from explicit unit directions and phases.
    pub fn explicit(dim: usize, directions: Vec<Vec<f64>>, phases: Vec<f64>) -> Result<Self, FieldError> {
        if directions.is_empty() || directions.len() != phases.len() {
            return Err(FieldError::InvalidParameter(
                "need K ≥ 1 directions with matching phases".into(),
            ));
        }
        for d in &directions {
            if d.len() != dim {
                return Err(FieldError::InvalidParameter("direction dimension mismatch".into()));
            }
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(FieldError::InvalidParameter(format!(
                    "direction norm {norm} not 1 within 1e-12"
                )));
            }
        }
        Ok(PlaneWaveEnsemble { dim, directions, phases, seed: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The field as an explicit cosine superposition with amplitude √(2/K).
    pub fn cosine_sum(&self) -> CosineSum {
        let amp = (2.0 / self.count() as f64).sqrt();
        let terms = self
            .directions
            .iter()
            .zip(&self.phases)
            .map(|(d, &p)| CosineTerm { amplitude: amp, wavevector: d.clone(), phase: p })
            .collect();
        CosineSum::new(self.dim, terms)
    }
}

impl FieldSource for PlaneWaveEnsemble {
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivative_cap(&self) -> usize {
        MAX_ORDER
    }

    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        self.cosine_sum().eval_derivs(y, order)
    }
}

/// Evaluate the ensemble field and all partial derivatives up to `order ≤ 4`
/// at each point. Rows follow `points`, columns the canonical multi-indices.
pub fn eval_plane_wave(
    ens: &PlaneWaveEnsemble,
    points: &[Vec<f64>],
    order: usize,
) -> Result<Vec<Vec<f64>>, FieldError> {
    if order > EVAL_DERIVATIVE_CAP {
        return Err(FieldError::DerivativeDepth { requested: order, cap: EVAL_DERIVATIVE_CAP });
    }
    let sum = ens.cosine_sum();
    points.iter().map(|p| sum.eval_derivs(p, order)).collect()
}

/// A Helmholtz solution (or truncated monochromatic sample) as coefficients
/// over Bessel × spherical-harmonic modes.
///
/// The evaluated field is `Σ_{l≤L} Σ_m c_{lm} u_{lm}` where `u_{lm}` is the
/// covariance-calibrated mode `σ_d · J_{l+d/2−1}(|x|)/|x|^{d/2−1} · Y_lm(x̂)`
/// with σ_d² = 2π in d = 2 and 2π² in d = 3. With this normalization,
/// i.i.d. standard normal coefficients reproduce the monochromatic kernel
/// truncated at degree L (per-degree variances match the addition-theorem
/// decomposition of the kernel), and the single mode c_00 = 1 is J₀(|x|) in
/// d = 2 and sin|x|/|x| in d = 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselFourierFunction {
    dim: usize,
    degree_cap: usize,
    coeffs: Vec<f64>,
}

/// Truncation keeps the expansion accurate on a ball of this radius for the
/// default degree caps; evaluations outside are rejected.
pub const BESSEL_FOURIER_DOMAIN: f64 = 10.0;

impl BesselFourierFunction {
    pub fn zero(dim: usize, degree_cap: usize) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::InvalidParameter(format!("dimension {dim} not in {{2,3}}")));
        }
        let len = mode_count(dim, degree_cap);
        Ok(BesselFourierFunction { dim, degree_cap, coeffs: vec![0.0; len] })
    }

    pub fn from_coeffs(dim: usize, degree_cap: usize, coeffs: Vec<f64>) -> Result<Self, FieldError> {
        let mut f = BesselFourierFunction::zero(dim, degree_cap)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(FieldError::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                f.coeffs.len(),
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(FieldError::InvalidParameter("non-finite coefficient".into()));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    /// A single unit mode c_{l,order} = 1.
    pub fn unit_mode(dim: usize, degree_cap: usize, l: usize, order: usize) -> Result<Self, FieldError> {
        let mut f = BesselFourierFunction::zero(dim, degree_cap)?;
        f.set_coeff(l, order, 1.0)?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize, order: usize) -> f64 {
        self.coeffs[mode_offset(self.dim, l) + order - 1]
    }

    pub fn set_coeff(&mut self, l: usize, order: usize, v: f64) -> Result<(), FieldError> {
        if l > self.degree_cap || order == 0 || order > degree_multiplicity(self.dim, l) {
            return Err(FieldError::InvalidParameter(format!(
                "mode (l={l}, order={order}) outside the coefficient table"
            )));
        }
        self.coeffs[mode_offset(self.dim, l) + order - 1] = v;
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    fn eval_jet_2d(&self, space: &'static JetSpace, coords: &[Jet], usq: &Jet, order: usize) -> Jet {
        let t0 = usq.value();
        let l_max = self.degree_cap;
        // C_l + i S_l = (x + iy)^l
        let mut cm = Jet::constant(space, 1.0);
        let mut sm = Jet::zero(space);
        let mut total = Jet::zero(space);
        let inv_sqrt_pi = 1.0 / PI.sqrt();
        for l in 0..=l_max {
            let mut combo = Jet::zero(space);
            let mut any = false;
            if l == 0 {
                let c = self.coeff(0, 1);
                if c != 0.0 {
                    combo.add_assign(&Jet::constant(space, c / (2.0 * PI).sqrt()));
                    any = true;
                }
            } else {
                let (ccos, csin) = (self.coeff(l, 1), self.coeff(l, 2));
                if ccos != 0.0 {
                    combo.axpy(ccos * inv_sqrt_pi, &cm);
                    any = true;
                }
                if csin != 0.0 {
                    combo.axpy(csin * inv_sqrt_pi, &sm);
                    any = true;
                }
            }
            if any {
                let radial = radial_profile_derivs(l as f64, t0, order);
                let fl = usq.compose(&radial);
                total.add_assign(&fl.mul(&combo));
            }
            if l < l_max {
                let new_c = cm.mul(&coords[0]).sub(&sm.mul(&coords[1]));
                let new_s = cm.mul(&coords[1]).add(&sm.mul(&coords[0]));
                cm = new_c;
                sm = new_s;
            }
        }
        total.scale(calibration(2))
    }

    fn eval_jet_3d(&self, space: &'static JetSpace, coords: &[Jet], usq: &Jet, order: usize) -> Jet {
        let t0 = usq.value();
        let l_max = self.degree_cap;
        let solid = SolidHarmonics::compute(space, coords, usq, l_max);
        let mut total = Jet::zero(space);
        for l in 0..=l_max {
            let mut combo = Jet::zero(space);
            let mut any = false;
            for m in 1..=degree_multiplicity(3, l) {
                let c = self.coeff(l, m);
                if c != 0.0 {
                    combo.axpy(c, &solid.harmonic(l, m));
                    any = true;
                }
            }
            if any {
                let radial = radial_profile_derivs(l as f64 + 0.5, t0, order);
                let fl = usq.compose(&radial);
                total.add_assign(&fl.mul(&combo));
            }
        }
        total.scale(calibration(3))
    }
}

fn mode_count(dim: usize, degree_cap: usize) -> usize {
    (0..=degree_cap).map(|l| degree_multiplicity(dim, l)).sum()
}

fn mode_offset(dim: usize, l: usize) -> usize {
    (0..l).map(|k| degree_multiplicity(dim, k)).sum()
}

fn calibration(dim: usize) -> f64 {
    if dim == 2 {
        (2.0 * PI).sqrt()
    } else {
        PI * std::f64::consts::SQRT_2
    }
}

/// Draw a truncated monochromatic sample: i.i.d. standard normal
/// coefficients over all modes with l ≤ L.
pub fn sample_bessel_fourier(
    dim: usize,
    degree_cap: usize,
    seed: u64,
) -> Result<BesselFourierFunction, FieldError> {
    let mut f = BesselFourierFunction::zero(dim, degree_cap)?;
    let mut rng = rng_from_seed(seed);
    for c in &mut f.coeffs {
        *c = rng.sample(StandardNormal);
    }
    Ok(f)
}

/// Evaluate a Bessel–Fourier function with derivatives up to `order ≤ 4` at
/// each point. Points must lie in the truncation-accuracy ball of radius 10.
pub fn eval_bessel_fourier(
    f: &BesselFourierFunction,
    points: &[Vec<f64>],
    order: usize,
) -> Result<Vec<Vec<f64>>, FieldError> {
    if order > EVAL_DERIVATIVE_CAP {
        return Err(FieldError::DerivativeDepth { requested: order, cap: EVAL_DERIVATIVE_CAP });
    }
    points.iter().map(|p| f.eval_derivs(p, order)).collect()
}

impl FieldSource for BesselFourierFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivative_cap(&self) -> usize {
        MAX_ORDER
    }

    fn domain_radius(&self) -> f64 {
        BESSEL_FOURIER_DOMAIN
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        if y.len() != self.dim {
            return Err(FieldError::Domain("point dimension mismatch".into()));
        }
        if order > MAX_ORDER {
            return Err(FieldError::DerivativeDepth { requested: order, cap: MAX_ORDER });
        }
        let r2: f64 = y.iter().map(|v| v * v).sum();
        if r2.sqrt() > BESSEL_FOURIER_DOMAIN {
            return Err(FieldError::Domain(format!(
                "point at radius {} outside the accuracy domain (≤ {BESSEL_FOURIER_DOMAIN})",
                r2.sqrt()
            )));
        }
        let space = JetSpace::get(self.dim, order);
        let coords: Vec<Jet> = (0..self.dim).map(|i| Jet::variable(space, i, y[i])).collect();
        let mut usq = Jet::zero(space);
        for c in &coords {
            usq.add_assign(&c.mul(c));
        }
        let jet = if self.dim == 2 {
            self.eval_jet_2d(space, &coords, &usq, order)
        } else {
            self.eval_jet_3d(space, &coords, &usq, order)
        };
        let indices = multi_indices(self.dim, order);
        Ok(indices.iter().map(|a| jet.derivative(a)).collect())
    }
}

/// Regular real solid harmonics r^l Y_lm(x̂) evaluated on jets, shared by the
/// Bessel–Fourier evaluator and the sphere eigenfunctions. The azimuthal part
/// is the complex power (x + iy)^m; the polar part is the homogenized
/// normalized-Legendre recurrence in (z, r²), which is polynomial and so
/// needs no division by |x|.
pub(crate) struct SolidHarmonics {
    /// g[m][l − m] = G_l^m jets
    g: Vec<Vec<Jet>>,
    cm: Vec<Jet>,
    sm: Vec<Jet>,
}

impl SolidHarmonics {
    pub(crate) fn compute(
        space: &'static JetSpace,
        coords: &[Jet],
        usq: &Jet,
        l_max: usize,
    ) -> Self {
        let (x, y, z) = (&coords[0], &coords[1], &coords[2]);
        let mut cm = vec![Jet::constant(space, 1.0)];
        let mut sm = vec![Jet::zero(space)];
        for m in 1..=l_max {
            let c = cm[m - 1].mul(x).sub(&sm[m - 1].mul(y));
            let s = cm[m - 1].mul(y).add(&sm[m - 1].mul(x));
            cm.push(c);
            sm.push(s);
        }
        let mut g: Vec<Vec<Jet>> = Vec::with_capacity(l_max + 1);
        let mut seed = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=l_max {
            if m > 0 {
                seed *= (((2 * m + 1) as f64) / ((2 * m) as f64)).sqrt();
            }
            let mut row = vec![Jet::constant(space, seed)];
            if l_max >= m + 1 {
                row.push(z.scale(((2 * m + 3) as f64).sqrt() * seed));
            }
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let next = z.mul(&row[l - m - 1]).sub(&usq.mul(&row[l - m - 2]).scale(b)).scale(a);
                row.push(next);
            }
            g.push(row);
        }
        SolidHarmonics { g, cm, sm }
    }

    /// r^l Y_{l,order}(x̂) in the real orthonormal convention.
    pub(crate) fn harmonic(&self, l: usize, order: usize) -> Jet {
        let (m, is_sin) = split_order(order);
        let gpart = &self.g[m][l - m];
        if m == 0 {
            gpart.clone()
        } else {
            let azim = if is_sin { &self.sm[m] } else { &self.cm[m] };
            gpart.mul(azim).scale(std::f64::consts::SQRT_2)
        }
    }
}

/// Which sampler realizes the monochromatic law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerSpec {
    PlaneWave { dim: usize, directions: usize },
    BesselFourier { dim: usize, degree_cap: usize },
}

impl SamplerSpec {
    pub fn dim(&self) -> usize {
        match self {
            SamplerSpec::PlaneWave { dim, .. } => *dim,
            SamplerSpec::BesselFourier { dim, .. } => *dim,
        }
    }

    pub fn draw(&self, seed: u64) -> Result<BerrySample, FieldError> {
        match self {
            SamplerSpec::PlaneWave { dim, directions } => {
                Ok(BerrySample::PlaneWave(sample_plane_wave(*dim, *directions, seed)?))
            }
            SamplerSpec::BesselFourier { dim, degree_cap } => {
                Ok(BerrySample::BesselFourier(sample_bessel_fourier(*dim, *degree_cap, seed)?))
            }
        }
    }
}

/// One field sample from either construction.
pub enum BerrySample {
    PlaneWave(PlaneWaveEnsemble),
    BesselFourier(BesselFourierFunction),
}

impl FieldSource for BerrySample {
    fn dim(&self) -> usize {
        match self {
            BerrySample::PlaneWave(e) => e.dim(),
            BerrySample::BesselFourier(f) => f.dim(),
        }
    }

    fn derivative_cap(&self) -> usize {
        match self {
            BerrySample::PlaneWave(e) => e.derivative_cap(),
            BerrySample::BesselFourier(f) => f.derivative_cap(),
        }
    }

    fn domain_radius(&self) -> f64 {
        match self {
            BerrySample::PlaneWave(e) => e.domain_radius(),
            BerrySample::BesselFourier(f) => f.domain_radius(),
        }
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        match self {
            BerrySample::PlaneWave(e) => e.eval_derivs(y, order),
            BerrySample::BesselFourier(f) => f.eval_derivs(y, order),
        }
    }
}

/// Empirical covariance profile with per-separation confidence radii and the
/// exact kernel alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceProfile {
    pub separations: Vec<f64>,
    pub estimate: Vec<f64>,
    pub ci: Vec<f64>,
    pub kernel: Vec<f64>,
    pub samples: usize,
}

impl CovarianceProfile {
    pub fn sup_deviation(&self) -> f64 {
        self.estimate
            .iter()
            .zip(&self.kernel)
            .map(|(e, k)| (e - k).abs())
            .fold(0.0, f64::max)
    }
}

/// Number of (base point, direction) pairs averaged per field draw; base
/// points are spread over a radius-4 ball so the pair products decorrelate.
const PAIRS_PER_DRAW: usize = 8;

/// Estimate Ĉ(r) over `m ≥ 100` seeded field draws at the given separations,
/// with a 3·SE confidence radius per separation.
pub fn empirical_covariance(
    spec: &SamplerSpec,
    m: usize,
    r_grid: &[f64],
    seed: u64,
) -> Result<CovarianceProfile, FieldError> {
    if m < 100 {
        return Err(FieldError::InvalidParameter(format!("need M ≥ 100 samples, got {m}")));
    }
    let dim = spec.dim();
    if let Some(r) = r_grid.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(FieldError::InvalidParameter(format!("bad separation {r}")));
    }
    let mut per_r: Vec<Vec<f64>> = vec![Vec::with_capacity(m); r_grid.len()];
    for i in 0..m {
        let field = spec.draw(derive_seed(seed, "covariance-field", i as u64))?;
        let mut geo = rng_from_seed(derive_seed(seed, "covariance-geometry", i as u64));
        let mut bases = Vec::with_capacity(PAIRS_PER_DRAW);
        for _ in 0..PAIRS_PER_DRAW {
            let x: Vec<f64> = loop {
                let cand: Vec<f64> = (0..dim).map(|_| geo.gen_range(-4.0..4.0)).collect();
                if cand.iter().map(|v| v * v).sum::<f64>() <= 16.0 {
                    break cand;
                }
            };
            let e: Vec<f64> = loop {
                let v: Vec<f64> = (0..dim).map(|_| geo.sample(StandardNormal)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-6 {
                    break v.into_iter().map(|x| x / n).collect();
                }
            };
            let v0 = field.value_at(&x)?.clamp(-COVARIANCE_CLIP, COVARIANCE_CLIP);
            bases.push((x, e, v0));
        }
        for (slot, &r) in per_r.iter_mut().zip(r_grid) {
            let mut acc = 0.0;
            for (x, e, v0) in &bases {
                let shifted: Vec<f64> = x.iter().zip(e).map(|(a, b)| a + b * r).collect();
                let v1 = field.value_at(&shifted)?.clamp(-COVARIANCE_CLIP, COVARIANCE_CLIP);
                acc += v0 * v1;
            }
            slot.push(acc / PAIRS_PER_DRAW as f64);
        }
    }
    let mut estimate = Vec::with_capacity(r_grid.len());
    let mut ci = Vec::with_capacity(r_grid.len());
    let mut kernel = Vec::with_capacity(r_grid.len());
    for (vals, &r) in per_r.iter().zip(r_grid) {
        let mc = crate::stats::mean_with_ci(vals);
        estimate.push(mc.mean);
        ci.push(mc.radius);
        kernel.push(
            crate::special::berry_kernel(dim, r)
                .map_err(|e| FieldError::InvalidParameter(e.to_string()))?,
        );
    }
    Ok(CovarianceProfile { separations: r_grid.to_vec(), estimate, ci, kernel, samples: m })
}

/// Values of independent field draws at a fixed point, for marginal tests.
pub fn sample_marginal_values(
    spec: &SamplerSpec,
    point: &[f64],
    m: usize,
    seed: u64,
) -> Result<Vec<f64>, FieldError> {
    (0..m)
        .map(|i| spec.draw(derive_seed(seed, "marginal", i as u64))?.value_at(point))
        .collect()
}
