//! Matrix-valued coefficient fields, the radial PML construction and sampled
//! coercivity/boundedness constants.

use crate::error::{Error, Result};
use crate::linalg::{
    cadjoint, cidentity, cinverse, cmat_from_real, cscalar, cspectral_norm, ctranspose, real_symmetric_part,
    symmetric_eigenvalues, CMat3, Mat3, Vec3, C64, ZERO_C,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A 3×3 complex matrix function of position and region tag.
pub trait CoefficientField: Send + Sync {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3>;

    /// `eval(x)ᵀ == eval(x)` exactly at every point.
    fn is_symmetric(&self) -> bool {
        false
    }

    /// `eval(x)` is exactly real and symmetric at every point.
    fn is_real_symmetric(&self) -> bool {
        false
    }

    fn description(&self) -> String;
}

pub type SharedField = Arc<dyn CoefficientField>;

/// The same matrix everywhere.
#[derive(Debug, Clone)]
pub struct ConstantField {
    value: CMat3,
}

impl ConstantField {
    pub fn new(value: CMat3) -> Self {
        ConstantField { value }
    }

    pub fn identity() -> Self {
        Self::new(cidentity())
    }

    pub fn scalar(s: C64) -> Self {
        Self::new(cscalar(s))
    }

    pub fn real(m: &Mat3) -> Self {
        Self::new(cmat_from_real(m))
    }
}

impl CoefficientField for ConstantField {
    fn eval(&self, _x: Vec3, _region: i32) -> Result<CMat3> {
        Ok(self.value)
    }

    fn is_symmetric(&self) -> bool {
        ctranspose(&self.value) == self.value
    }

    fn is_real_symmetric(&self) -> bool {
        self.is_symmetric() && self.value.iter().flatten().all(|z| z.im == 0.0)
    }

    fn description(&self) -> String {
        format!("constant {:?}", self.value)
    }
}

/// Different fields on different region tags.
#[derive(Clone)]
pub struct PiecewiseField {
    pieces: BTreeMap<i32, SharedField>,
}

impl PiecewiseField {
    pub fn new(pieces: BTreeMap<i32, SharedField>) -> Self {
        PiecewiseField { pieces }
    }

    pub fn regions(&self) -> Vec<i32> {
        self.pieces.keys().copied().collect()
    }
}

impl CoefficientField for PiecewiseField {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3> {
        match self.pieces.get(&region) {
            Some(f) => f.eval(x, region),
            None => Err(Error::Coefficient { point: x, message: format!("no coefficient for region {region}") }),
        }
    }

    fn is_symmetric(&self) -> bool {
        self.pieces.values().all(|f| f.is_symmetric())
    }

    fn is_real_symmetric(&self) -> bool {
        self.pieces.values().all(|f| f.is_real_symmetric())
    }

    fn description(&self) -> String {
        let parts: Vec<String> = self.pieces.iter().map(|(r, f)| format!("{r}: {}", f.description())).collect();
        format!("piecewise {{{}}}", parts.join(", "))
    }
}

type MatrixFn = dyn Fn(Vec3) -> CMat3 + Send + Sync;

/// Field given by a closure, with declared symmetry.
pub struct FnField {
    f: Box<MatrixFn>,
    symmetric: bool,
    real_symmetric: bool,
    name: String,
}

impl FnField {
    pub fn new(
        name: &str,
        symmetric: bool,
        real_symmetric: bool,
        f: impl Fn(Vec3) -> CMat3 + Send + Sync + 'static,
    ) -> Self {
        FnField { f: Box::new(f), symmetric, real_symmetric, name: name.to_string() }
    }
}

impl CoefficientField for FnField {
    fn eval(&self, x: Vec3, _region: i32) -> Result<CMat3> {
        Ok((self.f)(x))
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn is_real_symmetric(&self) -> bool {
        self.real_symmetric
    }

    fn description(&self) -> String {
        self.name.clone()
    }
}

/// Pointwise matrix inverse of another field.
#[derive(Clone)]
pub struct InverseField(pub SharedField);

impl CoefficientField for InverseField {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3> {
        let m = self.0.eval(x, region)?;
        cinverse(&m).ok_or(Error::Coefficient { point: x, message: "singular coefficient matrix".into() })
    }

    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn is_real_symmetric(&self) -> bool {
        self.0.is_real_symmetric()
    }

    fn description(&self) -> String {
        format!("inverse of {}", self.0.description())
    }
}

/// Pointwise conjugate transpose of another field.
#[derive(Clone)]
pub struct AdjointField(pub SharedField);

impl CoefficientField for AdjointField {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3> {
        Ok(cadjoint(&self.0.eval(x, region)?))
    }

    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn is_real_symmetric(&self) -> bool {
        self.0.is_real_symmetric()
    }

    fn description(&self) -> String {
        format!("adjoint of {}", self.0.description())
    }
}

/// Entrywise real part of another field.
#[derive(Clone)]
pub struct RealPartField(pub SharedField);

impl CoefficientField for RealPartField {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3> {
        Ok(self.0.eval(x, region)?.map(|row| row.map(|z| C64::new(z.re, 0.0))))
    }

    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn is_real_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn description(&self) -> String {
        format!("real part of {}", self.0.description())
    }
}

/// Radial PML: angle θ and the radii where the complex scaling starts
/// (`r_minus`) and becomes linear (`r_plus`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile {
    pub theta: f64,
    pub r_minus: f64,
    pub r_plus: f64,
}

/// Validates the parameters of a PML profile with cubic Hermite blending.
pub fn build_pml_profile(theta: f64, r_minus: f64, r_plus: f64) -> Result<PmlProfile> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Argument(format!("PML angle {theta} outside [0, π/2)")));
    }
    if !(0.0 < r_minus && r_minus < r_plus) || !r_plus.is_finite() {
        return Err(Error::Argument(format!("need 0 < r_minus < r_plus, got {r_minus}, {r_plus}")));
    }
    Ok(PmlProfile { theta, r_minus, r_plus })
}

impl PmlProfile {
    /// Scaling function: 0 for r ≤ R−, r for r ≥ R+, cubic Hermite between.
    pub fn f(&self, r: f64) -> f64 {
        if r <= self.r_minus {
            0.0
        } else if r >= self.r_plus {
            r
        } else {
            let d = self.r_plus - self.r_minus;
            let s = (r - self.r_minus) / d;
            self.r_plus * (3.0 * s * s - 2.0 * s * s * s) + d * (s * s * s - s * s)
        }
    }

    pub fn df(&self, r: f64) -> f64 {
        if r <= self.r_minus {
            0.0
        } else if r >= self.r_plus {
            1.0
        } else {
            let d = self.r_plus - self.r_minus;
            let s = (r - self.r_minus) / d;
            let kappa = self.r_plus / d;
            s * (6.0 * kappa * (1.0 - s) + 3.0 * s - 2.0)
        }
    }

    pub fn f_theta(&self, r: f64) -> f64 {
        self.f(r) * self.theta.tan()
    }

    pub fn df_theta(&self, r: f64) -> f64 {
        self.df(r) * self.theta.tan()
    }

    pub fn alpha(&self, r: f64) -> C64 {
        C64::new(1.0, self.df_theta(r))
    }

    pub fn beta(&self, r: f64) -> C64 {
        if r == 0.0 {
            return C64::new(1.0, 0.0);
        }
        C64::new(1.0, self.f_theta(r) / r)
    }

    /// |f(R−)|, |f'(R−)|, |f(R+) − R+|, |f'(R+) − 1| evaluated on the blend
    /// polynomial itself (the one-sided limits from inside the layer).
    pub fn junction_residuals(&self) -> [f64; 4] {
        let d = self.r_plus - self.r_minus;
        let kappa = self.r_plus / d;
        let cubic = |s: f64| self.r_plus * (3.0 * s * s - 2.0 * s * s * s) + d * (s * s * s - s * s);
        let dcubic = |s: f64| s * (6.0 * kappa * (1.0 - s) + 3.0 * s - 2.0);
        [cubic(0.0).abs(), dcubic(0.0).abs(), (cubic(1.0) - self.r_plus).abs(), (dcubic(1.0) - 1.0).abs()]
    }

    /// Smallest sampled value of f' and of the increment of f(r)/r over
    /// `n` points of `[0, 2 R+]`.
    pub fn monotonicity_margins(&self, n: usize) -> (f64, f64) {
        let mut min_df = f64::INFINITY;
        let mut min_ratio_step = f64::INFINITY;
        let top = 2.0 * self.r_plus;
        let mut prev: Option<f64> = None;
        for i in 1..=n {
            let r = top * i as f64 / n as f64;
            min_df = min_df.min(self.df(r));
            let ratio = self.f(r) / r;
            if let Some(p) = prev {
                min_ratio_step = min_ratio_step.min(ratio - p);
            }
            prev = Some(ratio);
        }
        (min_df, min_ratio_step)
    }
}

/// Columns: radial, polar and azimuthal unit vectors at `x`. On the polar
/// axis the azimuth is taken as 0.
pub fn spherical_frame(x: Vec3) -> Mat3 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let polar = (x[2] / r).clamp(-1.0, 1.0).acos();
    let azimuth = x[1].atan2(x[0]);
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    [[sp * ca, cp * ca, -sa], [sp * sa, cp * sa, ca], [cp, -sp, 0.0]]
}

/// PML coefficients at `x`: the scatterer tensors inside `r_minus`, `H D Hᵀ`
/// with `D = diag(β²/α, α, α)` outside.
pub fn eval_pml_tensors(
    profile: &PmlProfile,
    mu_scat: &dyn CoefficientField,
    eps_scat: &dyn CoefficientField,
    x: Vec3,
    region: i32,
) -> Result<(CMat3, CMat3)> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r <= profile.r_minus {
        return Ok((mu_scat.eval(x, region)?, eps_scat.eval(x, region)?));
    }
    let t = pml_tensor(profile, x);
    Ok((t, t))
}

fn pml_tensor(profile: &PmlProfile, x: Vec3) -> CMat3 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let a = profile.alpha(r);
    let b = profile.beta(r);
    let d = [b * b / a, a, a];
    let h = spherical_frame(x);
    let mut m = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                m[i][j] += d[k] * (h[i][k] * h[j][k]);
            }
        }
    }
    m
}

/// Which PML tensor a [`PmlField`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmlTensor {
    Mu,
    Epsilon,
}

/// μ or ε of a radial PML around given scatterer coefficients.
#[derive(Clone)]
pub struct PmlField {
    pub profile: PmlProfile,
    pub tensor: PmlTensor,
    pub mu_scat: SharedField,
    pub eps_scat: SharedField,
}

impl CoefficientField for PmlField {
    fn eval(&self, x: Vec3, region: i32) -> Result<CMat3> {
        let (mu, eps) = eval_pml_tensors(&self.profile, self.mu_scat.as_ref(), self.eps_scat.as_ref(), x, region)?;
        Ok(match self.tensor {
            PmlTensor::Mu => mu,
            PmlTensor::Epsilon => eps,
        })
    }

    fn is_symmetric(&self) -> bool {
        self.mu_scat.is_symmetric() && self.eps_scat.is_symmetric()
    }

    fn description(&self) -> String {
        format!(
            "radial PML {:?} (θ = {}, R− = {}, R+ = {})",
            self.tensor, self.profile.theta, self.profile.r_minus, self.profile.r_plus
        )
    }
}

/// Quantity measured by [`verify_coefficient_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// min over samples of λ_min(sym Re M(x))
    Coercivity,
    /// min over samples of λ_min(sym Re M(x)⁻¹)
    CoercivityOfInverse,
    /// max over samples of ‖M(x)‖₂
    Boundedness,
    /// max over samples of ‖M(x)⁻¹‖₂
    BoundednessOfInverse,
}

/// Extreme sampled value and where it occurred.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub value: f64,
    pub location: Vec3,
}

pub fn verify_coefficient_bounds(
    field: &dyn CoefficientField,
    samples: &[(Vec3, i32)],
    mode: BoundMode,
) -> Result<BoundReport> {
    let mut best: Option<BoundReport> = None;
    for &(x, region) in samples {
        let mut m = field.eval(x, region)?;
        if matches!(mode, BoundMode::CoercivityOfInverse | BoundMode::BoundednessOfInverse) {
            m = cinverse(&m).ok_or(Error::Coefficient { point: x, message: "singular coefficient matrix".into() })?;
        }
        let value = match mode {
            BoundMode::Coercivity | BoundMode::CoercivityOfInverse => {
                let s = real_symmetric_part(&m);
                let flat: Vec<f64> = s.iter().flatten().copied().collect();
                symmetric_eigenvalues(&flat, 3)[0]
            }
            BoundMode::Boundedness | BoundMode::BoundednessOfInverse => cspectral_norm(&m),
        };
        let better = match (best, mode) {
            (None, _) => true,
            (Some(b), BoundMode::Coercivity | BoundMode::CoercivityOfInverse) => value < b.value,
            (Some(b), _) => value > b.value,
        };
        if better {
            best = Some(BoundReport { value, location: x });
        }
    }
    best.ok_or_else(|| Error::Argument("no sample points".into()))
}

/// `n` points uniformly distributed in the spherical shell `r_min ≤ r ≤ r_max`
/// (region tag 0).
pub fn sample_shell(n: usize, r_min: f64, r_max: f64, seed: u64) -> Vec<(Vec3, i32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let r = (r_min.powi(3) + u * (r_max.powi(3) - r_min.powi(3))).cbrt();
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            ([r * s * phi.cos(), r * s * phi.sin(), r * z], 0)
        })
        .collect()
}

/// `n` points uniformly distributed in the box `[lo, hi]` (region tag 0).
pub fn sample_box(n: usize, lo: Vec3, hi: Vec3, seed: u64) -> Vec<(Vec3, i32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| ([0, 1, 2].map(|c| rng.random_range(lo[c]..=hi[c])), 0)).collect()
}

/// Scatterer permittivity `(1 + a·b(r/R)) I` with the C∞ bump
/// `b(s) = exp(1 − 1/(1 − s²))` supported in `r < R`.
pub fn bump_permittivity(amplitude: f64, radius: f64) -> FnField {
    FnField::new(&format!("bump permittivity (a = {amplitude}, R = {radius})"), true, true, move |x| {
        let s2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (radius * radius);
        let b = if s2 < 1.0 { (1.0 - 1.0 / (1.0 - s2)).exp() } else { 0.0 };
        cscalar(C64::new(1.0 + amplitude * b, 0.0))
    })
}
