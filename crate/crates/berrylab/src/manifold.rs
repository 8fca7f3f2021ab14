//! Flat tori and the round sphere: closed-form spectra, eigenfunctions,
//! exponential maps, orthonormal frames, and chart covers.
//!
//! Conventions: Δψ + λψ = 0 with the geometer's Laplace–Beltrami operator;
//! torus modes e^{2πi m·x/a} have λ = 4π²|m/a|²; eigenfunctions are
//! normalized so that ‖ψ‖²_{L²} = Vol(M).

use crate::field::{CosineSum, CosineTerm, FieldError, FieldSource, SolidHarmonics};
use crate::jets::{multi_indices, Jet, JetSpace, MAX_ORDER};
use crate::special::{radial_profile_derivs, spherical_harmonic, HarmonicIndex};
use crate::stats::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("invalid manifold: {0}")]
    InvalidSpec(String),
    #[error("enumeration cap exceeded: {0} modes (limit {1})")]
    EnumerationCap(usize, usize),
    #[error("invalid eigenfunction: {0}")]
    InvalidEigenfunction(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Explicit compact manifolds with closed-form spectra. The `irrational`
/// flag on tori declares that some squared side ratio is irrational; it is
/// set by the experiment configuration, never detected from the floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldSpec {
    Torus { sides: Vec<f64>, irrational: bool },
    Sphere,
}

impl ManifoldSpec {
    /// Intrinsic dimension (the sphere is S², so d = 2).
    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Torus { sides, .. } => sides.len(),
            ManifoldSpec::Sphere => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ManifoldSpec::Torus { sides, .. } => sides.iter().product(),
            ManifoldSpec::Sphere => 4.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<(), ManifoldError> {
        if let ManifoldSpec::Torus { sides, .. } = self {
            if sides.len() != 2 && sides.len() != 3 {
                return Err(ManifoldError::InvalidSpec(format!(
                    "torus dimension {} not in {{2,3}}",
                    sides.len()
                )));
            }
            if !sides.iter().all(|a| a.is_finite() && *a > 0.0) {
                return Err(ManifoldError::InvalidSpec("side lengths must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn square_torus(d: usize) -> ManifoldSpec {
        ManifoldSpec::Torus { sides: vec![1.0; d], irrational: false }
    }

    /// The standard irrational example: sides (1, 2^{1/4}), so the squared
    /// side ratio is √2.
    pub fn irrational_torus() -> ManifoldSpec {
        ManifoldSpec::Torus { sides: vec![1.0, 2.0f64.powf(0.25)], irrational: true }
    }
}

/// Mode descriptors of one eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModeSet {
    /// All dual-lattice vectors m (both signs) with 4π²|m/a|² = λ.
    Torus { vectors: Vec<Vec<i64>> },
    /// Degree l with λ = l(l+1).
    Sphere { degree: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub modes: ModeSet,
}

impl EigenvalueEntry {
    /// Canonical ± representatives (first nonzero coordinate positive),
    /// sorted; each contributes a cosine and a sine real mode.
    pub fn torus_representatives(&self) -> Vec<Vec<i64>> {
        match &self.modes {
            ModeSet::Torus { vectors } => {
                let mut reps: Vec<Vec<i64>> = vectors
                    .iter()
                    .filter(|v| {
                        let first = v.iter().find(|x| **x != 0).copied().unwrap_or(0);
                        first > 0
                    })
                    .cloned()
                    .collect();
                reps.sort();
                reps
            }
            ModeSet::Sphere { .. } => Vec::new(),
        }
    }
}

const ENUMERATION_CAP: usize = 1_000_000;

/// Complete spectrum enumeration below `lambda_max`: lattice-point search
/// within the dual ellipsoid on tori, all degrees with l(l+1) ≤ Λ on the
/// sphere. Entries are sorted non-decreasingly in λ.
pub fn eigenvalues_up_to(
    spec: &ManifoldSpec,
    lambda_max: f64,
) -> Result<Vec<EigenvalueEntry>, ManifoldError> {
    spec.validate()?;
    if !(lambda_max > 0.0) {
        return Err(ManifoldError::InvalidSpec("lambda_max must be positive".into()));
    }
    match spec {
        ManifoldSpec::Sphere => {
            let mut out = Vec::new();
            let mut l = 1usize;
            while (l * (l + 1)) as f64 <= lambda_max {
                out.push(EigenvalueEntry {
                    lambda: (l * (l + 1)) as f64,
                    multiplicity: 2 * l + 1,
                    modes: ModeSet::Sphere { degree: l },
                });
                l += 1;
            }
            Ok(out)
        }
        ManifoldSpec::Torus { sides, .. } => {
            let d = sides.len();
            let weights: Vec<f64> = sides.iter().map(|a| 1.0 / (a * a)).collect();
            let bounds: Vec<i64> = sides
                .iter()
                .map(|a| (a * lambda_max.sqrt() / (2.0 * PI)).floor() as i64)
                .collect();
            let mut by_lambda: Vec<(f64, Vec<Vec<i64>>)> = Vec::new();
            let mut count = 0usize;
            let mut visit = |m: Vec<i64>| -> Result<(), ManifoldError> {
                let q: f64 =
                    m.iter().zip(&weights).map(|(mi, w)| (mi * mi) as f64 * w).sum();
                let lambda = 4.0 * PI * PI * q;
                if lambda > lambda_max || lambda == 0.0 {
                    return Ok(());
                }
                count += 1;
                if count > ENUMERATION_CAP {
                    return Err(ManifoldError::EnumerationCap(count, ENUMERATION_CAP));
                }
                match by_lambda.binary_search_by(|probe| probe.0.partial_cmp(&lambda).unwrap()) {
                    Ok(i) => by_lambda[i].1.push(m),
                    Err(i) => by_lambda.insert(i, (lambda, vec![m])),
                }
                Ok(())
            };
            for m0 in -bounds[0]..=bounds[0] {
                for m1 in -bounds[1]..=bounds[1] {
                    if d == 2 {
                        visit(vec![m0, m1])?;
                    } else {
                        for m2 in -bounds[2]..=bounds[2] {
                            visit(vec![m0, m1, m2])?;
                        }
                    }
                }
            }
            Ok(by_lambda
                .into_iter()
                .map(|(lambda, mut vectors)| {
                    vectors.sort();
                    EigenvalueEntry {
                        lambda,
                        multiplicity: vectors.len(),
                        modes: ModeSet::Torus { vectors },
                    }
                })
                .collect())
        }
    }
}

/// A manifold point with its chart id and orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint {
    /// Torus: physical coordinates in Π[0, a_i); sphere: unit 3-vector.
    pub point: Vec<f64>,
    pub chart: usize,
    /// d frame vectors; ambient 3-vectors on the sphere, coordinate axes on tori.
    pub frame: Vec<Vec<f64>>,
}

/// Chart catalogue: tori are parallelizable (one global chart); the sphere
/// splits into two open hemispheres whose shared equator has measure zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub id: usize,
    pub name: String,
}

pub fn chart_cover(spec: &ManifoldSpec) -> Vec<Chart> {
    match spec {
        ManifoldSpec::Torus { .. } => vec![Chart { id: 0, name: "global".into() }],
        ManifoldSpec::Sphere => vec![
            Chart { id: 0, name: "northern hemisphere".into() },
            Chart { id: 1, name: "southern hemisphere".into() },
        ],
    }
}

/// Which chart contains the point; `None` exactly on the sphere's equator.
pub fn chart_of(spec: &ManifoldSpec, point: &[f64]) -> Option<usize> {
    match spec {
        ManifoldSpec::Torus { .. } => Some(0),
        ManifoldSpec::Sphere => {
            if point[2] > 0.0 {
                Some(0)
            } else if point[2] < 0.0 {
                Some(1)
            } else {
                None
            }
        }
    }
}

/// The chart's frame field at a point. On the sphere this normalizes the
/// pushforwards of the azimuthal-equidistant coordinate fields from the
/// hemisphere's pole and Gram–Schmidts them; at the pole itself the smooth
/// limit (e₁, e₂) is used.
pub fn frame_at(spec: &ManifoldSpec, point: &[f64]) -> Result<Vec<Vec<f64>>, ManifoldError> {
    match spec {
        ManifoldSpec::Torus { sides, .. } => {
            let d = sides.len();
            Ok((0..d)
                .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
                .collect())
        }
        ManifoldSpec::Sphere => {
            let q = point;
            let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(ManifoldError::Domain(format!("sphere point norm {norm} ≠ 1")));
            }
            let north = q[2] >= 0.0;
            let pole = if north { [0.0, 0.0, 1.0] } else { [0.0, 0.0, -1.0] };
            let cos_rho = (q[0] * pole[0] + q[1] * pole[1] + q[2] * pole[2]).clamp(-1.0, 1.0);
            let s = q[0].hypot(q[1]);
            if s < 1e-14 {
                return Ok(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
            }
            let what = [q[0] / s, q[1] / s, 0.0];
            let rho = cos_rho.acos();
            let sin_rho = rho.sin();
            // V_ρ = cosρ·ŵ − sinρ·n̂ ; V_α = n̂ × ŵ
            let v_rho = [
                cos_rho * what[0] - sin_rho * pole[0],
                cos_rho * what[1] - sin_rho * pole[1],
                cos_rho * what[2] - sin_rho * pole[2],
            ];
            let v_alpha = [
                pole[1] * what[2] - pole[2] * what[1],
                pole[2] * what[0] - pole[0] * what[2],
                pole[0] * what[1] - pole[1] * what[0],
            ];
            let (cos_a, sin_a) = (what[0], what[1]);
            let sinc = sin_rho / rho;
            // pushforwards of the AE coordinate fields ∂/∂u₁, ∂/∂u₂
            let p1: Vec<f64> =
                (0..3).map(|i| cos_a * v_rho[i] - sin_a * sinc * v_alpha[i]).collect();
            let p2: Vec<f64> =
                (0..3).map(|i| sin_a * v_rho[i] + cos_a * sinc * v_alpha[i]).collect();
            let n1 = p1.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v1: Vec<f64> = p1.iter().map(|x| x / n1).collect();
            let dot = p2.iter().zip(&v1).map(|(a, b)| a * b).sum::<f64>();
            let o2: Vec<f64> = p2.iter().zip(&v1).map(|(a, b)| a - dot * b).collect();
            let n2 = o2.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v2: Vec<f64> = o2.iter().map(|x| x / n2).collect();
            Ok(vec![v1, v2])
        }
    }
}

/// Exp_p(v) = exp_p(Σ v_j V_j): flat wrap-around on tori, the great-circle
/// formula on the sphere (where |v| < π is required).
pub fn exp_map(spec: &ManifoldSpec, base: &BasePoint, v: &[f64]) -> Result<Vec<f64>, ManifoldError> {
    if v.len() != spec.dim() {
        return Err(ManifoldError::Domain("tangent vector dimension mismatch".into()));
    }
    match spec {
        ManifoldSpec::Torus { sides, .. } => {
            let d = sides.len();
            let mut out = base.point.clone();
            for j in 0..d {
                for i in 0..d {
                    out[i] += v[j] * base.frame[j][i];
                }
            }
            for (x, a) in out.iter_mut().zip(sides) {
                *x = x.rem_euclid(*a);
            }
            Ok(out)
        }
        ManifoldSpec::Sphere => {
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm >= PI {
                return Err(ManifoldError::Domain(format!(
                    "|v| = {vnorm} outside the sphere's injectivity radius π"
                )));
            }
            let mut w = [0.0f64; 3];
            for j in 0..2 {
                for i in 0..3 {
                    w[i] += v[j] * base.frame[j][i];
                }
            }
            let t = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            let (c, sinc) = if t < 1e-12 {
                (1.0 - t * t / 2.0, 1.0 - t * t / 6.0)
            } else {
                (t.cos(), t.sin() / t)
            };
            Ok((0..3).map(|i| c * base.point[i] + sinc * w[i]).collect())
        }
    }
}

/// Chart restriction for base-point sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartPolicy {
    AnyChart,
    Chart(usize),
}

/// Uniform base point w.r.t. the volume measure (restricted to a chart if
/// requested), with the chart's frame attached. Sphere points use normalized
/// Gaussian triples; the measure-zero equator and poles are resampled.
pub fn random_base_point(
    spec: &ManifoldSpec,
    policy: ChartPolicy,
    seed: u64,
) -> Result<BasePoint, ManifoldError> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    match spec {
        ManifoldSpec::Torus { sides, .. } => {
            if let ChartPolicy::Chart(c) = policy {
                if c != 0 {
                    return Err(ManifoldError::Domain(format!("torus has no chart {c}")));
                }
            }
            let point: Vec<f64> = sides.iter().map(|a| a * rng.gen::<f64>()).collect();
            let frame = frame_at(spec, &point)?;
            Ok(BasePoint { point, chart: 0, frame })
        }
        ManifoldSpec::Sphere => {
            if let ChartPolicy::Chart(c) = policy {
                if c > 1 {
                    return Err(ManifoldError::Domain(format!("sphere has no chart {c}")));
                }
            }
            loop {
                let v: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n < 1e-6 {
                    continue;
                }
                let q: Vec<f64> = v.iter().map(|x| x / n).collect();
                if q[2].abs() < 1e-12 || q[0].hypot(q[1]) < 1e-12 {
                    // equator (chart boundary) or pole (frame singularity)
                    continue;
                }
                let chart = if q[2] > 0.0 { 0 } else { 1 };
                if let ChartPolicy::Chart(c) = policy {
                    if c != chart {
                        continue;
                    }
                }
                let frame = frame_at(spec, &q)?;
                return Ok(BasePoint { point: q, chart, frame });
            }
        }
    }
}

/// A Laplacian eigenfunction as coefficients over the real mode basis:
/// cos/sin pairs per canonical lattice representative on tori, the real
/// degree-l harmonics on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    manifold: ManifoldSpec,
    lambda: f64,
    repr: EigenRepr,
    coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum EigenRepr {
    /// Coefficient layout [rep0·cos, rep0·sin, rep1·cos, ...].
    Torus { reps: Vec<Vec<i64>> },
    Sphere { degree: usize },
}

/// Normalized eigenfunction: the coefficient vector is scaled to unit length
/// so that ‖ψ‖²_{L²} = Vol(M). A zero vector is rejected.
pub fn make_eigenfunction(
    spec: &ManifoldSpec,
    entry: &EigenvalueEntry,
    coefficients: &[f64],
) -> Result<Eigenfunction, ManifoldError> {
    let mut f = Eigenfunction::raw(spec, entry, coefficients)?;
    let norm = f.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(ManifoldError::InvalidEigenfunction("zero coefficient vector".into()));
    }
    for c in &mut f.coefficients {
        *c /= norm;
    }
    Ok(f)
}

impl Eigenfunction {
    /// Unnormalized eigenfunction (used by least-squares fits, whose
    /// minimizers carry meaningful amplitudes).
    pub fn raw(
        spec: &ManifoldSpec,
        entry: &EigenvalueEntry,
        coefficients: &[f64],
    ) -> Result<Eigenfunction, ManifoldError> {
        spec.validate()?;
        if coefficients.len() != entry.multiplicity {
            return Err(ManifoldError::InvalidEigenfunction(format!(
                "coefficient vector length {} does not match multiplicity {}",
                coefficients.len(),
                entry.multiplicity
            )));
        }
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(ManifoldError::InvalidEigenfunction("non-finite coefficient".into()));
        }
        let repr = match &entry.modes {
            ModeSet::Torus { .. } => {
                let reps = entry.torus_representatives();
                if 2 * reps.len() != entry.multiplicity {
                    return Err(ManifoldError::InvalidEigenfunction(
                        "multiplicity does not match the listed modes".into(),
                    ));
                }
                EigenRepr::Torus { reps }
            }
            ModeSet::Sphere { degree } => {
                if entry.multiplicity != 2 * degree + 1 {
                    return Err(ManifoldError::InvalidEigenfunction(
                        "sphere multiplicity must be 2l+1".into(),
                    ));
                }
                EigenRepr::Sphere { degree: *degree }
            }
        };
        Ok(Eigenfunction {
            manifold: spec.clone(),
            lambda: entry.lambda,
            repr,
            coefficients: coefficients.to_vec(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Value at a manifold point (torus coordinates or unit 3-vector).
    pub fn value_at(&self, point: &[f64]) -> Result<f64, ManifoldError> {
        match &self.repr {
            EigenRepr::Torus { reps } => {
                let sides = match &self.manifold {
                    ManifoldSpec::Torus { sides, .. } => sides,
                    _ => unreachable!(),
                };
                let mut total = 0.0;
                for (j, rep) in reps.iter().enumerate() {
                    let arg: f64 = rep
                        .iter()
                        .zip(point)
                        .zip(sides)
                        .map(|((m, x), a)| 2.0 * PI * (*m as f64) * x / a)
                        .sum();
                    let (s, c) = arg.sin_cos();
                    total += std::f64::consts::SQRT_2
                        * (self.coefficients[2 * j] * c + self.coefficients[2 * j + 1] * s);
                }
                Ok(total)
            }
            EigenRepr::Sphere { degree } => {
                let mut total = 0.0;
                for (i, c) in self.coefficients.iter().enumerate() {
                    if *c != 0.0 {
                        let idx = HarmonicIndex::new(3, *degree, i + 1)
                            .map_err(|e| ManifoldError::Domain(e.to_string()))?;
                        total += c
                            * spherical_harmonic(idx, point)
                                .map_err(|e| ManifoldError::Domain(e.to_string()))?;
                    }
                }
                Ok((4.0 * PI).sqrt() * total)
            }
        }
    }

    /// The localized field φ(y) = ψ(Exp_p(y/√λ)) as an evaluable source with
    /// analytic derivatives. Pass `scale_lambda = 1.0` to view ψ(Exp_p(y))
    /// without the wavelength rescaling.
    pub fn localized_source(
        &self,
        base: &BasePoint,
        scale_lambda: f64,
    ) -> Result<LocalizedSource, ManifoldError> {
        let sqrt_lambda = scale_lambda.sqrt();
        if !(sqrt_lambda > 0.0) {
            return Err(ManifoldError::Domain("localization scale must be positive".into()));
        }
        match &self.repr {
            EigenRepr::Torus { reps } => {
                let sides = match &self.manifold {
                    ManifoldSpec::Torus { sides, .. } => sides,
                    _ => unreachable!(),
                };
                let d = sides.len();
                let mut terms = Vec::with_capacity(2 * reps.len());
                for (j, rep) in reps.iter().enumerate() {
                    let xi: Vec<f64> =
                        rep.iter().zip(sides).map(|(m, a)| 2.0 * PI * (*m as f64) / a).collect();
                    let phase0: f64 = xi.iter().zip(&base.point).map(|(k, x)| k * x).sum();
                    // wavevector in chart coordinates: (ξ·V_j)/√λ
                    let wave: Vec<f64> = (0..d)
                        .map(|jj| {
                            xi.iter().zip(&base.frame[jj]).map(|(k, v)| k * v).sum::<f64>()
                                / sqrt_lambda
                        })
                        .collect();
                    let (ccos, csin) = (self.coefficients[2 * j], self.coefficients[2 * j + 1]);
                    if ccos != 0.0 {
                        terms.push(CosineTerm {
                            amplitude: std::f64::consts::SQRT_2 * ccos,
                            wavevector: wave.clone(),
                            phase: phase0,
                        });
                    }
                    if csin != 0.0 {
                        // sin(u) = cos(u − π/2)
                        terms.push(CosineTerm {
                            amplitude: std::f64::consts::SQRT_2 * csin,
                            wavevector: wave,
                            phase: phase0 - PI / 2.0,
                        });
                    }
                }
                Ok(LocalizedSource::Cosine(CosineSum::new(d, terms)))
            }
            EigenRepr::Sphere { degree } => Ok(LocalizedSource::Sphere(SphereLocalizedSource {
                degree: *degree,
                coefficients: self.coefficients.clone(),
                base: base.clone(),
                sqrt_lambda,
            })),
        }
    }

    /// |Δψ(p) + λψ(p)| from the order-2 jet of ψ(Exp_p(·)) at the origin;
    /// exact in normal coordinates.
    pub fn helmholtz_defect_at(&self, base: &BasePoint) -> Result<f64, ManifoldError> {
        let src = self.localized_source(base, 1.0)?;
        let d = src.dim();
        let derivs = src
            .eval_derivs(&vec![0.0; d], 2)
            .map_err(|e| ManifoldError::Domain(e.to_string()))?;
        let idx = multi_indices(d, 2);
        let mut lap = 0.0;
        for (a, v) in idx.iter().zip(&derivs) {
            if a.iter().sum::<u8>() == 2 && a.iter().any(|&k| k == 2) {
                lap += v;
            }
        }
        Ok((lap + self.lambda * derivs[0]).abs())
    }
}

/// A localized eigenfunction as a field source: exact cosine superpositions
/// on flat tori, jet propagation through the great-circle map on the sphere.
pub enum LocalizedSource {
    Cosine(CosineSum),
    Sphere(SphereLocalizedSource),
}

impl FieldSource for LocalizedSource {
    fn dim(&self) -> usize {
        match self {
            LocalizedSource::Cosine(c) => c.dim(),
            LocalizedSource::Sphere(s) => s.dim(),
        }
    }

    fn derivative_cap(&self) -> usize {
        match self {
            LocalizedSource::Cosine(c) => c.derivative_cap(),
            LocalizedSource::Sphere(s) => s.derivative_cap(),
        }
    }

    fn domain_radius(&self) -> f64 {
        match self {
            LocalizedSource::Cosine(c) => c.domain_radius(),
            LocalizedSource::Sphere(s) => s.domain_radius(),
        }
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        match self {
            LocalizedSource::Cosine(c) => c.eval_derivs(y, order),
            LocalizedSource::Sphere(s) => s.eval_derivs(y, order),
        }
    }
}

/// φ(y) = ψ(Exp_p(y/√λ)) on the sphere. The ambient point of the great
/// circle is cos(|w|)·p + sinc(|w|)·w with w the frame lift of y/√λ; both
/// cos(√·) and sinc(√·) are entire in |w|², so the whole composition — chart
/// lift, great-circle map, homogeneous harmonic polynomial — propagates
/// through jet arithmetic with no finite differences anywhere.
pub struct SphereLocalizedSource {
    degree: usize,
    coefficients: Vec<f64>,
    base: BasePoint,
    sqrt_lambda: f64,
}

impl FieldSource for SphereLocalizedSource {
    fn dim(&self) -> usize {
        2
    }

    fn derivative_cap(&self) -> usize {
        MAX_ORDER
    }

    fn domain_radius(&self) -> f64 {
        // |y|/√λ must stay below the injectivity radius π
        0.999 * PI * self.sqrt_lambda
    }

    fn eval_derivs(&self, y: &[f64], order: usize) -> Result<Vec<f64>, FieldError> {
        if y.len() != 2 {
            return Err(FieldError::Domain("chart point must be 2-dimensional".into()));
        }
        if order > MAX_ORDER {
            return Err(FieldError::DerivativeDepth { requested: order, cap: MAX_ORDER });
        }
        let ynorm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if ynorm >= PI * self.sqrt_lambda {
            return Err(FieldError::Domain(format!(
                "|y| = {ynorm} beyond the injectivity domain π√λ = {}",
                PI * self.sqrt_lambda
            )));
        }
        let space = JetSpace::get(2, order);
        let yj: Vec<Jet> = (0..2).map(|i| Jet::variable(space, i, y[i])).collect();
        // w_i = Σ_j y_j V_j[i] / √λ
        let mut w: Vec<Jet> = (0..3).map(|_| Jet::zero(space)).collect();
        for j in 0..2 {
            for i in 0..3 {
                w[i].axpy(self.base.frame[j][i] / self.sqrt_lambda, &yj[j]);
            }
        }
        let mut s = Jet::zero(space);
        for wi in &w {
            s.add_assign(&wi.mul(wi));
        }
        let s0 = s.value();
        let half_sqrt_pi = (PI / 2.0).sqrt();
        // cos(√s) and sinc(√s) via the entire radial profiles F_{∓1/2}
        let cos_derivs: Vec<f64> =
            radial_profile_derivs(-0.5, s0, order).iter().map(|v| half_sqrt_pi * v).collect();
        let sinc_derivs: Vec<f64> =
            radial_profile_derivs(0.5, s0, order).iter().map(|v| half_sqrt_pi * v).collect();
        let cosj = s.compose(&cos_derivs);
        let sincj = s.compose(&sinc_derivs);
        let mut q: Vec<Jet> = Vec::with_capacity(3);
        for i in 0..3 {
            let mut qi = cosj.scale(self.base.point[i]);
            qi.add_assign(&sincj.mul(&w[i]));
            q.push(qi);
        }
        let mut usq = Jet::zero(space);
        for qi in &q {
            usq.add_assign(&qi.mul(qi));
        }
        let solid = SolidHarmonics::compute(space, &q, &usq, self.degree);
        let mut psi = Jet::zero(space);
        for (i, c) in self.coefficients.iter().enumerate() {
            if *c != 0.0 {
                psi.axpy(*c, &solid.harmonic(self.degree, i + 1));
            }
        }
        let psi = psi.scale((4.0 * PI).sqrt());
        let indices = multi_indices(2, order);
        Ok(indices.iter().map(|a| psi.derivative(a)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::derive_seed;
    use approx::assert_abs_diff_eq;

    fn entry_for(spec: &ManifoldSpec, lambda: f64) -> EigenvalueEntry {
        let list = eigenvalues_up_to(spec, lambda * 1.0001).unwrap();
        list.into_iter()
            .find(|e| (e.lambda - lambda).abs() < 1e-6 * lambda.max(1.0))
            .expect("eigenvalue present")
    }

    #[test]
    fn square_torus_multiplicity_twelve() {
        let spec = ManifoldSpec::square_torus(2);
        let lambda = 4.0 * PI * PI * 25.0;
        let e = entry_for(&spec, lambda);
        assert_eq!(e.multiplicity, 12);
        if let ModeSet::Torus { vectors } = &e.modes {
            assert_eq!(vectors.len(), 12);
            assert!(vectors.contains(&vec![3, 4]));
            assert!(vectors.contains(&vec![-4, 3]));
            assert!(vectors.contains(&vec![0, -5]));
        } else {
            panic!("expected torus modes");
        }
        assert_eq!(e.torus_representatives().len(), 6);
    }

    #[test]
    fn sphere_degree_five() {
        let spec = ManifoldSpec::Sphere;
        let list = eigenvalues_up_to(&spec, 31.0).unwrap();
        let e = list.last().unwrap();
        assert_eq!(e.lambda, 30.0);
        assert_eq!(e.multiplicity, 11);
    }

    #[test]
    fn irrational_torus_multiplicity_at_most_four() {
        let spec = ManifoldSpec::irrational_torus();
        let list = eigenvalues_up_to(&spec, 1.0e4).unwrap();
        assert!(!list.is_empty());
        for e in &list {
            assert!(e.multiplicity <= 4, "λ = {} has multiplicity {}", e.lambda, e.multiplicity);
        }
    }

    #[test]
    fn weyl_count_matches_brute_force() {
        // Independent oracle: direct lattice loop without any grouping.
        let spec = ManifoldSpec::Torus { sides: vec![1.0, 1.3], irrational: false };
        let lambda_max = 1.0e4;
        let list = eigenvalues_up_to(&spec, lambda_max).unwrap();
        let total: usize = list.iter().map(|e| e.multiplicity).sum();
        let mut brute = 0usize;
        let b0 = (1.0 * lambda_max.sqrt() / (2.0 * PI)).ceil() as i64 + 1;
        let b1 = (1.3 * lambda_max.sqrt() / (2.0 * PI)).ceil() as i64 + 1;
        for m0 in -b0..=b0 {
            for m1 in -b1..=b1 {
                if m0 == 0 && m1 == 0 {
                    continue;
                }
                let q = (m0 * m0) as f64 + (m1 * m1) as f64 / (1.3 * 1.3);
                if 4.0 * PI * PI * q <= lambda_max {
                    brute += 1;
                }
            }
        }
        assert_eq!(total, brute);
        for w in list.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
    }

    #[test]
    fn single_mode_normalization() {
        // √2 cos(2π(3,4)·x) has L² norm² = Vol = 1; the trapezoid rule is
        // exact for trigonometric polynomials.
        let spec = ManifoldSpec::square_torus(2);
        let e = entry_for(&spec, 4.0 * PI * PI * 25.0);
        let reps = e.torus_representatives();
        let k = reps.iter().position(|r| r == &vec![3, 4]).unwrap();
        let mut coeffs = vec![0.0; e.multiplicity];
        coeffs[2 * k] = 1.0;
        let psi = make_eigenfunction(&spec, &e, &coeffs).unwrap();
        let n = 64usize;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [i as f64 / n as f64, j as f64 / n as f64];
                let v = psi.value_at(&x).unwrap();
                acc += v * v;
            }
        }
        acc /= (n * n) as f64;
        assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-10);
        let v = psi.value_at(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn zonal_mode_is_scaled_legendre() {
        let spec = ManifoldSpec::Sphere;
        let l = 7usize;
        let e = entry_for(&spec, (l * (l + 1)) as f64);
        let mut coeffs = vec![0.0; e.multiplicity];
        coeffs[0] = 1.0; // order 1 = zonal
        let psi = make_eigenfunction(&spec, &e, &coeffs).unwrap();
        for &theta in &[0.0f64, 0.4, 1.1, 2.0, 3.0] {
            let q = [theta.sin(), 0.0, theta.cos()];
            let expect =
                ((2 * l + 1) as f64).sqrt() * crate::special::legendre_p(l, theta.cos()).unwrap();
            assert_abs_diff_eq!(psi.value_at(&q).unwrap(), expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenfunction_rejects_bad_coefficients() {
        let spec = ManifoldSpec::square_torus(2);
        let e = entry_for(&spec, 4.0 * PI * PI * 25.0);
        assert!(make_eigenfunction(&spec, &e, &vec![0.0; e.multiplicity]).is_err());
        assert!(make_eigenfunction(&spec, &e, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn helmholtz_identity_on_random_eigenfunctions() {
        let torus = ManifoldSpec::Torus { sides: vec![1.0, 1.7], irrational: false };
        let e = eigenvalues_up_to(&torus, 800.0).unwrap().pop().unwrap();
        let mut rng = rng_from_seed(9);
        let coeffs: Vec<f64> = (0..e.multiplicity).map(|_| rng.sample(StandardNormal)).collect();
        let psi = make_eigenfunction(&torus, &e, &coeffs).unwrap();
        for i in 0..10 {
            let p =
                random_base_point(&torus, ChartPolicy::AnyChart, derive_seed(1, "hp", i)).unwrap();
            let defect = psi.helmholtz_defect_at(&p).unwrap();
            assert!(defect < 1e-9 * (1.0 + e.lambda), "defect {defect}");
        }
        let sphere = ManifoldSpec::Sphere;
        let e = entry_for(&sphere, 110.0); // l = 10
        let coeffs: Vec<f64> = (0..e.multiplicity).map(|_| rng.sample(StandardNormal)).collect();
        let psi = make_eigenfunction(&sphere, &e, &coeffs).unwrap();
        for i in 0..10 {
            let p =
                random_base_point(&sphere, ChartPolicy::AnyChart, derive_seed(2, "hp", i)).unwrap();
            let defect = psi.helmholtz_defect_at(&p).unwrap();
            assert!(defect < 1e-8 * (1.0 + e.lambda), "defect {defect}");
        }
    }

    #[test]
    fn exp_map_basics() {
        let spec = ManifoldSpec::square_torus(2);
        let base = BasePoint {
            point: vec![0.9, 0.0],
            chart: 0,
            frame: frame_at(&spec, &[0.9, 0.0]).unwrap(),
        };
        assert_eq!(exp_map(&spec, &base, &[0.0, 0.0]).unwrap(), vec![0.9, 0.0]);
        let q = exp_map(&spec, &base, &[0.2, 0.0]).unwrap();
        assert_abs_diff_eq!(q[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_exp_from_pole_reaches_equator() {
        let spec = ManifoldSpec::Sphere;
        let pole = [0.0, 0.0, 1.0];
        let base =
            BasePoint { point: pole.to_vec(), chart: 0, frame: frame_at(&spec, &pole).unwrap() };
        let q = exp_map(&spec, &base, &[PI / 2.0, 0.0]).unwrap();
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
        let angle = (q[0] * pole[0] + q[1] * pole[1] + q[2] * pole[2]).acos();
        assert_abs_diff_eq!(angle, PI / 2.0, epsilon = 1e-12);
        assert!(exp_map(&spec, &base, &[PI, 0.1]).is_err());
    }

    #[test]
    fn sphere_exp_is_near_isometry_at_origin() {
        let spec = ManifoldSpec::Sphere;
        let p = random_base_point(&spec, ChartPolicy::AnyChart, 5).unwrap();
        let mut rng = rng_from_seed(6);
        for _ in 0..20 {
            let v: Vec<f64> = (0..2).map(|_| 0.1 * rng.gen::<f64>()).collect();
            let w: Vec<f64> = (0..2).map(|_| 0.1 * rng.gen::<f64>()).collect();
            let qv = exp_map(&spec, &p, &v).unwrap();
            let qw = exp_map(&spec, &p, &w).unwrap();
            let chord: f64 = qv.iter().zip(&qw).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let dist = 2.0 * (chord.sqrt() / 2.0).asin();
            let flat: f64 = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!((dist - flat).abs() < 2.0 * 0.1f64.powi(2), "dist {dist} flat {flat}");
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        let spec = ManifoldSpec::Sphere;
        for i in 0..100 {
            let p =
                random_base_point(&spec, ChartPolicy::AnyChart, derive_seed(3, "f", i)).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    let dot: f64 = p.frame[a].iter().zip(&p.frame[b]).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
                }
                let dot: f64 = p.frame[a].iter().zip(&p.point).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn chart_cover_shapes() {
        assert_eq!(chart_cover(&ManifoldSpec::square_torus(2)).len(), 1);
        let charts = chart_cover(&ManifoldSpec::Sphere);
        assert_eq!(charts.len(), 2);
        assert_eq!(chart_of(&ManifoldSpec::Sphere, &[0.0, 0.0, 0.5]), Some(0));
        assert_eq!(chart_of(&ManifoldSpec::Sphere, &[0.0, 0.0, -0.5]), Some(1));
        assert_eq!(chart_of(&ManifoldSpec::Sphere, &[1.0, 0.0, 0.0]), None);
    }

    #[test]
    fn uniform_sampling_statistics() {
        let torus = ManifoldSpec::square_torus(2);
        let n = 10_000;
        let mut mean = [0.0f64; 2];
        for i in 0..n {
            let p =
                random_base_point(&torus, ChartPolicy::AnyChart, derive_seed(4, "t", i)).unwrap();
            mean[0] += p.point[0];
            mean[1] += p.point[1];
        }
        assert!((mean[0] / n as f64 - 0.5).abs() < 0.02);
        assert!((mean[1] / n as f64 - 0.5).abs() < 0.02);

        let sphere = ManifoldSpec::Sphere;
        let mut zmean = 0.0;
        for i in 0..n {
            let p =
                random_base_point(&sphere, ChartPolicy::Chart(0), derive_seed(4, "s", i)).unwrap();
            assert_eq!(p.chart, 0);
            assert!(p.point[2] > 0.0);
            zmean += p.point[2];
        }
        assert!((zmean / n as f64 - 0.5).abs() < 0.02, "z mean {}", zmean / n as f64);
    }

    #[test]
    fn base_point_reproducibility() {
        let sphere = ManifoldSpec::Sphere;
        let a = random_base_point(&sphere, ChartPolicy::AnyChart, 123).unwrap();
        let b = random_base_point(&sphere, ChartPolicy::AnyChart, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn localized_torus_mode_is_unit_frequency_cosine() {
        // √2 cos(2π(3,4)·x) at p = 0 localizes to √2 cos((m/|m|)·y).
        let spec = ManifoldSpec::square_torus(2);
        let e = entry_for(&spec, 4.0 * PI * PI * 25.0);
        let reps = e.torus_representatives();
        let k = reps.iter().position(|r| r == &vec![3, 4]).unwrap();
        let mut coeffs = vec![0.0; e.multiplicity];
        coeffs[2 * k] = 1.0;
        let psi = make_eigenfunction(&spec, &e, &coeffs).unwrap();
        let base = BasePoint {
            point: vec![0.0, 0.0],
            chart: 0,
            frame: frame_at(&spec, &[0.0, 0.0]).unwrap(),
        };
        let src = psi.localized_source(&base, e.lambda).unwrap();
        assert_abs_diff_eq!(
            src.value_at(&[0.0, 0.0]).unwrap(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
        for &y in &[[0.5f64, 0.2], [1.0, -0.4]] {
            let expect = std::f64::consts::SQRT_2 * (0.6 * y[0] + 0.8 * y[1]).cos();
            assert_abs_diff_eq!(src.value_at(&y).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn localization_at_origin_recovers_value() {
        let sphere = ManifoldSpec::Sphere;
        let e = entry_for(&sphere, 42.0); // l = 6
        let mut rng = rng_from_seed(8);
        let coeffs: Vec<f64> = (0..e.multiplicity).map(|_| rng.sample(StandardNormal)).collect();
        let psi = make_eigenfunction(&sphere, &e, &coeffs).unwrap();
        let p = random_base_point(&sphere, ChartPolicy::AnyChart, 44).unwrap();
        let src = psi.localized_source(&p, e.lambda).unwrap();
        let loc = src.value_at(&[0.0, 0.0]).unwrap();
        let direct = psi.value_at(&p.point).unwrap();
        assert_abs_diff_eq!(loc, direct, epsilon = 1e-11);
    }

    #[test]
    fn sphere_localization_derivatives_match_finite_differences() {
        // Jet chain rule vs a central finite difference of plain values.
        let sphere = ManifoldSpec::Sphere;
        let e = entry_for(&sphere, 56.0); // l = 7
        let mut rng = rng_from_seed(13);
        let coeffs: Vec<f64> = (0..e.multiplicity).map(|_| rng.sample(StandardNormal)).collect();
        let psi = make_eigenfunction(&sphere, &e, &coeffs).unwrap();
        let p = random_base_point(&sphere, ChartPolicy::AnyChart, 77).unwrap();
        let src = psi.localized_source(&p, e.lambda).unwrap();
        let y = [0.37, -0.21];
        let d = src.eval_derivs(&y, 2).unwrap();
        let h = 1e-5;
        let f = |yy: [f64; 2]| src.value_at(&yy).unwrap();
        let fd_x = (f([y[0] + h, y[1]]) - f([y[0] - h, y[1]])) / (2.0 * h);
        let fd_xx = (f([y[0] + h, y[1]]) - 2.0 * f(y) + f([y[0] - h, y[1]])) / (h * h);
        assert_abs_diff_eq!(d[1], fd_x, epsilon = 1e-6);
        assert_abs_diff_eq!(d[3], fd_xx, epsilon = 1e-4);
    }
}
