//! Amplitude equations for the primary bifurcations of the cylinder.
//!
//! Scalar form: dA/dT = A(a·β₂ + b|A|²). Coupled coil/buckle form:
//! dA/dT = A(a·β₂ + b₁|A|² + b₂|B|²), dB/dT = B(a·β₂ + b₂|A|² + b₁|B|²).
//! Along a branch λ₂ = λ₂ᶜ + β₂ε², λ₁ = λ₁ᶜ + α₂ε², and u has complex
//! amplitude εA on its critical Fourier mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::CoreError;
use crate::linstab::{bifurcation_point, coil_neutral_lambda2, lambda1_on_cylinder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AeKind {
    Pearling { m: i32 },
    Wrinkling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarAE {
    pub kind: AeKind,
    pub k: f64,
    pub lambda2_crit: f64,
    pub lambda1_crit: f64,
    pub a: f64,
    pub b: f64,
    pub beta2: f64,
    pub alpha2_slope: f64,
    /// Constant of α₂ from the assembly; always −β₂.
    pub alpha2_const: f64,
    pub second_order: Vec<(String, f64)>,
}

impl ScalarAE {
    pub fn a_effective(&self) -> f64 {
        self.a * self.beta2
    }

    /// √|aβ₂/b| when the branch exists for ε² > 0.
    pub fn steady_amplitude(&self) -> Option<f64> {
        let ae = self.a_effective();
        (ae * self.b < 0.0).then(|| (ae / self.b).abs().sqrt())
    }

    pub fn second_order_coeff(&self, label: &str) -> Option<f64> {
        self.second_order.iter().find(|(l, _)| l == label).map(|&(_, v)| v)
    }

    pub fn system(&self) -> AmplitudeSystem {
        AmplitudeSystem::Scalar { a_eff: self.a_effective(), b: self.b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSecondOrder {
    /// A₀₀ = mean_quadratic·(|A|²+|B|²) + mean_constant·(2α₂+2β₂).
    pub mean_quadratic: f64,
    pub mean_constant: f64,
    /// A₂₂/A² (and B₂₂/B²).
    pub a22: f64,
    /// A₂₀/(AB).
    pub a20: f64,
    /// A₀₂/(AB̄).
    pub a02: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledAE {
    pub m: i32,
    pub k: f64,
    pub lambda2_crit: f64,
    pub lambda1_crit: f64,
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub beta2_coil: f64,
    pub beta2_buckle: f64,
    pub alpha2_slope: f64,
    pub second_order: CoupledSecondOrder,
}

impl CoupledAE {
    pub fn coil_amplitude(&self) -> f64 {
        (self.a / self.b1).abs().sqrt()
    }

    pub fn buckle_amplitude(&self) -> f64 {
        (self.a / (self.b1 + self.b2)).abs().sqrt()
    }

    pub fn system(&self, beta2: f64) -> AmplitudeSystem {
        AmplitudeSystem::Coupled { a_eff: self.a * beta2, b1: self.b1, b2: self.b2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchClassification {
    pub coiling_exists: bool,
    pub buckling_exists: bool,
    pub coiling_stable: bool,
    pub buckling_stable: bool,
    pub sigma2_coil: f64,
    pub sigma2_buckle: f64,
}

/// Right-hand side of a scalar or coupled amplitude equation with β₂ folded into `a_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmplitudeSystem {
    Scalar { a_eff: f64, b: f64 },
    Coupled { a_eff: f64, b1: f64, b2: f64 },
}

impl AmplitudeSystem {
    fn rhs(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        match *self {
            Self::Scalar { a_eff, b: cb } => (a * (a_eff + cb * a.norm_sqr()), Complex64::new(0.0, 0.0)),
            Self::Coupled { a_eff, b1, b2 } => {
                let (na, nb) = (a.norm_sqr(), b.norm_sqr());
                (a * (a_eff + b1 * na + b2 * nb), b * (a_eff + b2 * na + b1 * nb))
            }
        }
    }

    /// Largest modulus among the real nonzero steady states.
    pub fn steady_scale(&self) -> Option<f64> {
        let amp = |ae: f64, b: f64| (ae * b < 0.0).then(|| (ae / b).abs().sqrt());
        match *self {
            Self::Scalar { a_eff, b } => amp(a_eff, b),
            Self::Coupled { a_eff, b1, b2 } => {
                match (amp(a_eff, b1), amp(a_eff, b1 + b2)) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    fn reversed(&self) -> Self {
        match *self {
            Self::Scalar { a_eff, b } => Self::Scalar { a_eff: -a_eff, b: -b },
            Self::Coupled { a_eff, b1, b2 } => Self::Coupled { a_eff: -a_eff, b1: -b1, b2: -b2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl Trajectory {
    pub fn last(&self) -> (Complex64, Complex64) {
        (*self.a.last().unwrap(), *self.b.last().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub amplitude: f64,
    pub lambda2: f64,
    pub lambda1: f64,
}

/// Which constant term of α₂ a prediction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha2Sign {
    /// α₂ = slope·|A|² − β₂, as assembled.
    Assembled,
    /// α₂ = slope·|A|² + β₂.
    Flipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPrediction {
    pub alpha2_sign: Alpha2Sign,
    pub points: Vec<BranchPoint>,
}

/// Cubic solvability condition at third order, before substituting the
/// second-order modes:
/// dA/dT = cubic·A|A|² + mean·A·A₀ + harmonic·Ā·A_h + alpha·α₂·A,
/// with A₀ = mean_ratio·|A|², A_h = harmonic_ratio·A², α₂ = alpha_slope·|A|² − β₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagedCubic {
    pub cubic: f64,
    pub mean: f64,
    pub harmonic: f64,
    pub alpha: f64,
    pub mean_ratio: f64,
    pub harmonic_ratio: f64,
    pub alpha_slope: f64,
}

impl StagedCubic {
    /// Returns (a, b) of dA/dT = A(a·β₂ + b|A|²).
    pub fn assemble(&self) -> (f64, f64) {
        let a = -self.alpha;
        let b = self.cubic
            + self.mean * self.mean_ratio
            + self.harmonic * self.harmonic_ratio
            + self.alpha * self.alpha_slope;
        (a, b)
    }
}

fn nonzero(expr: &'static str, value: f64) -> Result<f64, CoreError> {
    if value.abs() < 1e-12 {
        Err(CoreError::Denominator { expr, value })
    } else {
        Ok(value)
    }
}

pub fn pearling_staged(c0: f64, k: f64) -> Result<StagedCubic, CoreError> {
    let k2 = k * k;
    let k4 = k2 * k2;
    let l2 = crate::linstab::pearl_neutral_lambda2(k2, c0)?;
    let den = nonzero(
        "16k⁴ − (16c₀ + 8λ₂)k² + 2λ₂ + 1",
        16.0 * k4 + (-16.0 * c0 - 8.0 * l2) * k2 + 2.0 * l2 + 1.0,
    )?;
    let harmonic_ratio = -(7.0 * k4 + (3.0 + 8.0 * c0 - 2.0 * l2) * k2 - 4.0 * l2 - 5.0) / (2.0 * den);
    Ok(StagedCubic {
        cubic: 2.5 * k4 * k2 + (1.0 - 8.0 * c0 - 3.0 * l2) * k4 / 2.0
            + (3.5 + 12.0 * c0 + l2) * k2 / 2.0
            - 27.0 / 4.0
            - 3.0 * l2,
        mean: (-4.0 * c0 - 1.0) * k2 / 2.0 + 2.0 * l2 + 2.5,
        harmonic: 4.0 * k4 + 4.0 * (-3.0 / 8.0 - 2.5 * c0 - l2 / 2.0) * k2 + 4.0 * (5.0 / 8.0 + l2 / 2.0),
        alpha: 1.0 - k2,
        // Area constraint at second order.
        mean_ratio: -k2,
        harmonic_ratio,
        alpha_slope: 0.5 * (k4 - 8.0 * k2 * c0 + 4.0 * l2 + 5.0),
    })
}

pub fn wrinkling_staged() -> StagedCubic {
    let l2 = 1.5;
    StagedCubic {
        cubic: -3.0 * (-l2 + 221.0 / 4.0),
        mean: -6.0 * (l2 - 11.0 / 4.0),
        harmonic: (-120.0 * l2 + 1170.0) / 4.0,
        alpha: -3.0,
        mean_ratio: -4.0,
        harmonic_ratio: -(-9.0 * l2 + 369.0 / 4.0) / (15.0 * l2 - 225.0 / 2.0),
        alpha_slope: 3.0 * (15.0 - 4.0 * l2) / 2.0,
    }
}

/// Sign so that the branch exists for ε² > 0: supercritical when a·b < 0.
fn branch_beta2(a: f64, b: f64) -> f64 {
    if a * b < 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn pearling_ae(c0: f64, l: f64, m: i32) -> Result<ScalarAE, CoreError> {
    if !(l > 0.0) {
        return Err(CoreError::NonPositive("L", l));
    }
    if m == 0 {
        return Err(CoreError::InvalidMode { m, n: 0 });
    }
    let k = 2.0 * PI * m as f64 / l;
    let lambda2_crit = bifurcation_point(m, 0, l, c0, 1.0)?;
    let staged = pearling_staged(c0, k)?;
    let (a, b) = staged.assemble();
    let beta2 = branch_beta2(a, b);
    Ok(ScalarAE {
        kind: AeKind::Pearling { m },
        k,
        lambda2_crit,
        lambda1_crit: lambda1_on_cylinder(lambda2_crit, c0, 1.0)?,
        a,
        b,
        beta2,
        alpha2_slope: staged.alpha_slope,
        alpha2_const: -beta2,
        second_order: vec![
            ("A0/|A|^2".into(), staged.mean_ratio),
            ("A2/A^2".into(), staged.harmonic_ratio),
        ],
    })
}

/// The one-shot collected b formula as printed; it disagrees with the staged
/// assembly and is reported only as an unverified closed form.
pub fn pearling_b_closed_form(c0: f64, k: f64) -> Result<f64, CoreError> {
    let k2 = k * k;
    nonzero("k²", k2)?;
    nonzero("k² − 1", k2 - 1.0)?;
    let d = nonzero("4k⁴ − 5k² + 4c₀ − 1", 4.0 * k2 * k2 - 5.0 * k2 + 4.0 * c0 - 1.0)?;
    let p = |e: i32| k.powi(e);
    let poly = 3.0 / 20.0 * p(14)
        + (4.0 * c0 - 73.0 / 20.0) * p(12)
        + (8.0 * c0 / 5.0 - 13.0 / 10.0) * p(10)
        + (32.0 / 5.0 * c0 * c0 - 52.0 / 5.0 * c0 + 73.0 / 20.0) * p(8)
        + (16.0 / 5.0 * c0 * c0 - 8.0 * c0 + 31.0 / 5.0) * p(6)
        + (4.0 * c0 / 5.0 - 43.0 / 20.0) * p(4)
        + (12.0 * c0 / 5.0 - 1.5) * k2;
    Ok(5.0 / ((k2 - 1.0) * k2 * d) * poly)
}

pub const WRINKLING_A: (i64, i64) = (3, 1);
pub const WRINKLING_B: (i64, i64) = (-243, 16);
pub const WRINKLING_ALPHA2_SLOPE: (i64, i64) = (27, 2);
pub const WRINKLING_A0: (i64, i64) = (-4, 1);
pub const WRINKLING_A4: (i64, i64) = (7, 8);

fn ratio(r: (i64, i64)) -> f64 {
    r.0 as f64 / r.1 as f64
}

/// Universal (0,2) wrinkling equation; only λ₁ᶜ depends on c₀.
pub fn wrinkling_ae(c0: f64) -> ScalarAE {
    let lambda2_crit = 1.5;
    ScalarAE {
        kind: AeKind::Wrinkling,
        k: 0.0,
        lambda2_crit,
        lambda1_crit: 0.5 * (0.5 - 2.0 * lambda2_crit - 2.0 * c0 * c0),
        a: ratio(WRINKLING_A),
        b: ratio(WRINKLING_B),
        beta2: 1.0,
        alpha2_slope: ratio(WRINKLING_ALPHA2_SLOPE),
        alpha2_const: -1.0,
        second_order: vec![
            ("A0/|A|^2".into(), ratio(WRINKLING_A0)),
            ("A4/A^2".into(), ratio(WRINKLING_A4)),
        ],
    }
}

pub fn coil_buckle_coeffs(c0: f64, l: f64, m: i32) -> Result<CoupledAE, CoreError> {
    if !(l > 0.0) {
        return Err(CoreError::NonPositive("L", l));
    }
    if m == 0 {
        return Err(CoreError::InvalidMode { m, n: 1 });
    }
    let k = 2.0 * PI * m as f64 / l;
    let k2 = k * k;
    let k4 = k2 * k2;
    let k6 = k4 * k2;
    let d1 = nonzero("4k⁴ + 7k² + 4c₀ + 1", 4.0 * k4 + 7.0 * k2 + 4.0 * c0 + 1.0)?;
    let d2 = nonzero("k² − 4c₀ − 1", k2 - 4.0 * c0 - 1.0)?;
    let d3 = nonzero("12k⁴ − 7k² − 4c₀ + 3", 12.0 * k4 - 7.0 * k2 - 4.0 * c0 + 3.0)?;
    let d4 = nonzero("k² − 4c₀ + 3", k2 - 4.0 * c0 + 3.0)?;

    let p22 = 2.0 * k4 + 4.0 * k2 * c0 - 6.0 * k2 - 4.0 * c0 - 1.0;
    let p02 = 4.0 * k2 * c0 + 4.0 * c0 + 1.0;
    let p20 = 6.0 * k4 - 4.0 * k2 * c0 - 4.0 * k2 - 4.0 * c0 + 3.0;

    let b1 = 1.25 * k6 + 5.0 * k4 * c0 + 0.75 * k4 + 9.0 * k2 * c0 - 33.0 / 4.0 * k2 - 6.0 * c0 - 1.5
        + 3.0 * p22 * (-0.5 * k4 + k2 * c0 - 13.0 / 4.0 * k2 - 2.0 * c0 - 0.5) / d1;
    let b2 = 3.0 * k6 + 4.0 * k4 * c0 - 6.0 * k4 - 16.0 * k2 * c0 - 3.0 * k2 - 12.0 * c0 - 3.0
        + 6.0 * p02 * (-(c0 + 0.25) * k2 + k2 / 2.0 - 0.5 - 2.0 * c0) / d2
        + 2.0 * p20 * k2 * (-1.5 * k2 - c0 + 0.75) / d3;
    let a = k2;
    let lambda2_crit = coil_neutral_lambda2(k, c0);
    Ok(CoupledAE {
        m,
        k,
        lambda2_crit,
        lambda1_crit: lambda1_on_cylinder(lambda2_crit, c0, 1.0)?,
        a,
        b1,
        b2,
        beta2_coil: branch_beta2(a, b1),
        beta2_buckle: branch_beta2(a, b1 + b2),
        alpha2_slope: 0.5 * k2 * (k2 - 8.0 * c0 + 6.0),
        second_order: CoupledSecondOrder {
            mean_quadratic: -(4.0 * k2 * c0 - 2.0 * k2 - 4.0 * c0 + 3.0) / d4,
            mean_constant: -1.0 / d4,
            a22: -p22 / (2.0 * d1),
            a20: -p20 / d3,
            a02: -p02 / d2,
        },
    })
}

/// Stability of coiling and buckling under fixed area and volume, decided by
/// the transverse eigenvalue σ₂ on each branch.
pub fn classify_coil_buckle(c: &CoupledAE) -> Result<BranchClassification, CoreError> {
    if c.b1 == 0.0 {
        return Err(CoreError::Degenerate("b₁ = 0"));
    }
    if c.b1 + c.b2 == 0.0 {
        return Err(CoreError::Degenerate("b₁ + b₂ = 0"));
    }
    let beta_coil = -c.b1.signum();
    let sigma2_coil = c.a * beta_coil + c.b2 * (c.a / c.b1).abs();
    let sigma2_buckle = 2.0 * (c.b1 - c.b2) * (c.a / (c.b1 + c.b2)).abs();
    Ok(BranchClassification {
        coiling_exists: true,
        buckling_exists: true,
        coiling_stable: sigma2_coil < 0.0,
        buckling_stable: sigma2_buckle < 0.0,
        sigma2_coil,
        sigma2_buckle,
    })
}

/// Classical RK4 for T/dt steps; fails once |A| or |B| exceeds ten times the
/// largest steady amplitude (or ten times the initial size when none exists).
pub fn simulate_ae(
    system: &AmplitudeSystem,
    initial: (Complex64, Complex64),
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, CoreError> {
    if !(dt > 0.0) {
        return Err(CoreError::Controls("dt must be positive"));
    }
    if !(t_end > 0.0) {
        return Err(CoreError::Controls("T must be positive"));
    }
    let bound = 10.0
        * system
            .steady_scale()
            .unwrap_or_else(|| initial.0.norm().max(initial.1.norm()).max(1.0));
    let steps = (t_end / dt).ceil() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        a: Vec::with_capacity(steps + 1),
        b: Vec::with_capacity(steps + 1),
    };
    let (mut a, mut b) = initial;
    if matches!(system, AmplitudeSystem::Scalar { .. }) {
        b = Complex64::new(0.0, 0.0);
    }
    traj.times.push(0.0);
    traj.a.push(a);
    traj.b.push(b);
    for i in 1..=steps {
        let (k1a, k1b) = system.rhs(a, b);
        let (k2a, k2b) = system.rhs(a + k1a * (dt / 2.0), b + k1b * (dt / 2.0));
        let (k3a, k3b) = system.rhs(a + k2a * (dt / 2.0), b + k2b * (dt / 2.0));
        let (k4a, k4b) = system.rhs(a + k3a * dt, b + k3b * dt);
        a += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (dt / 6.0);
        b += (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (dt / 6.0);
        let t = i as f64 * dt;
        if !(a.norm() <= bound && b.norm() <= bound) {
            return Err(CoreError::BlowUp { time: t });
        }
        traj.times.push(t);
        traj.a.push(a);
        traj.b.push(b);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoupledBranch {
    Coiling,
    Buckling,
}

/// Brute-force transverse stability of a coupled branch by integration.
///
/// The branch is seeded with a small transverse perturbation. A subcritical
/// branch is radially unstable, so its transverse behaviour is read off from
/// the time-reversed system, where the branch is radially attracting and the
/// transverse eigenvalue changes sign.
pub fn ode_branch_stability(c: &CoupledAE, branch: CoupledBranch) -> Result<bool, CoreError> {
    let (b_radial, beta2) = match branch {
        CoupledBranch::Coiling => (c.b1, c.beta2_coil),
        CoupledBranch::Buckling => (c.b1 + c.b2, c.beta2_buckle),
    };
    if b_radial == 0.0 {
        return Err(CoreError::Degenerate("radial cubic coefficient vanishes"));
    }
    let forward = beta2 > 0.0;
    let sys = if forward { c.system(beta2) } else { c.system(beta2).reversed() };
    let amp = (c.a / b_radial).abs().sqrt();
    let delta = 1e-4;
    let (mut a, mut b) = match branch {
        CoupledBranch::Coiling => (Complex64::new(amp, 0.0), Complex64::new(delta * amp, 0.0)),
        CoupledBranch::Buckling => (
            Complex64::new(amp * (1.0 + delta), 0.0),
            Complex64::new(amp * (1.0 - delta), 0.0),
        ),
    };
    let transverse = |a: Complex64, b: Complex64| match branch {
        CoupledBranch::Coiling => b.norm() / a.norm(),
        CoupledBranch::Buckling => (a.norm() - b.norm()).abs() / (a.norm() + b.norm()),
    };
    let t0 = transverse(a, b);
    let rate = c.a.abs().max(c.b1.abs() * amp * amp).max(c.b2.abs() * amp * amp);
    let dt = 0.02 / rate;
    let chunk = 200.0 * dt;
    for _ in 0..5000 {
        // Escaping to infinity means the transverse perturbation grew.
        let traj = match simulate_ae(&sys, (a, b), chunk, dt) {
            Ok(t) => t,
            Err(CoreError::BlowUp { .. }) => return Ok(!forward),
            Err(e) => return Err(e),
        };
        (a, b) = traj.last();
        let t = transverse(a, b);
        if t < 1e-2 * t0 {
            return Ok(forward);
        }
        if t > 1e2 * t0 {
            return Ok(!forward);
        }
    }
    Err(CoreError::Degenerate("transverse perturbation neither decayed nor grew"))
}

/// Leading-order branch λ₂ = λ₂ᶜ + β₂ε², λ₁ = λ₁ᶜ + α₂ε² at amplitude εA*.
pub fn branch_predict(
    ae: &ScalarAE,
    epsilon_max: f64,
    samples: usize,
    sign: Alpha2Sign,
) -> Result<BranchPrediction, CoreError> {
    let amp = ae
        .steady_amplitude()
        .ok_or(CoreError::Degenerate("no real steady amplitude"))?;
    let alpha_const = match sign {
        Alpha2Sign::Assembled => -ae.beta2,
        Alpha2Sign::Flipped => ae.beta2,
    };
    let alpha2 = ae.alpha2_slope * amp * amp + alpha_const;
    let points = (0..=samples)
        .map(|i| {
            let eps = if samples == 0 { 0.0 } else { epsilon_max * i as f64 / samples as f64 };
            BranchPoint {
                epsilon: eps,
                amplitude: eps * amp,
                lambda2: ae.lambda2_crit + ae.beta2 * eps * eps,
                lambda1: ae.lambda1_crit + alpha2 * eps * eps,
            }
        })
        .collect();
    Ok(BranchPrediction { alpha2_sign: sign, points })
}
