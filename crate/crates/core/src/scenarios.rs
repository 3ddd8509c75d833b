//! Closed forms for two worked examples: a free particle kicked by a momentum
//! `p` halfway through its flight, and a spin-½ Stern–Gerlach deflection with
//! `A = ħσ_z/2`, `ψ = (|↑⟩+|↓⟩)/√2` and a real post-selection `f`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::backaction::BackActionContext;
use crate::error::{LabError, Result};
use crate::quantum::{pauli_z, Observable, StateVector, C64};
use crate::uncertainty::floor_from_curvature;

/// Below this `|c_up + c_down|` the weak value at `φ = 0` is undefined.
pub const W0_SINGULAR_TOL: f64 = 1e-12;

const SG_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeParticleScenario {
    pub m: f64,
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

impl FreeParticleScenario {
    pub fn new(m: f64, t: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(m > 0.0) || !(t > 0.0) {
            return Err(LabError::InvalidInput(format!("mass and flight time must be positive, got m={m}, t={t}")));
        }
        if !x1.is_finite() || !x2.is_finite() {
            return Err(LabError::InvalidInput("positions must be finite".into()));
        }
        Ok(Self { m, t, x1, x2 })
    }
}

/// `m(x₁²+x₂²)/t − (t/8m)(p + 2m(x₁+x₂)/t)² − πħ/4`.
pub fn fp_action(s: &FreeParticleScenario, p: f64, hbar: f64) -> f64 {
    let q = p + 2.0 * s.m * (s.x1 + s.x2) / s.t;
    s.m * (s.x1 * s.x1 + s.x2 * s.x2) / s.t - s.t / (8.0 * s.m) * q * q - PI * hbar / 4.0
}

/// Position at the kick, `(x₁+x₂)/2 + tp/(4m)`.
pub fn fp_position(s: &FreeParticleScenario, p: f64) -> f64 {
    0.5 * (s.x1 + s.x2) + s.t * p / (4.0 * s.m)
}

/// `∂²S/∂p² = −t/(4m)`.
pub fn fp_curvature(s: &FreeParticleScenario) -> f64 {
    -s.t / (4.0 * s.m)
}

/// `√(ħt/(4m))`.
pub fn fp_min_fluctuation(s: &FreeParticleScenario, hbar: f64) -> f64 {
    (hbar * s.t / (4.0 * s.m)).sqrt()
}

/// Real post-selection `f = c_up|↑⟩ + c_down|↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SternGerlachScenario {
    pub c_up: f64,
    pub c_down: f64,
}

impl SternGerlachScenario {
    pub fn new(c_up: f64, c_down: f64) -> Result<Self> {
        let norm = c_up.hypot(c_down);
        if !((norm - 1.0).abs() <= SG_NORM_TOL) {
            return Err(LabError::NotNormalized { norm });
        }
        Ok(Self { c_up, c_down })
    }

    /// Post-selection at polar angle `θ` in the xz-plane.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            c_up: (0.5 * theta).cos(),
            c_down: (0.5 * theta).sin(),
        }
    }

    pub fn observable() -> Observable {
        Observable::new(pauli_z().scale(0.5)).expect("σ_z/2 is Hermitian")
    }

    pub fn initial_state() -> StateVector {
        StateVector::from_real(&[1.0, 1.0]).expect("nonzero")
    }

    pub fn post_selection(&self) -> StateVector {
        StateVector::from_real(&[self.c_up, self.c_down]).expect("validated")
    }

    /// Generic back-action context with `A = ħσ_z/2`.
    pub fn context(&self, hbar: f64) -> Result<BackActionContext> {
        let a = Self::observable().scaled(hbar)?;
        BackActionContext::new(a, Self::initial_state(), self.post_selection(), hbar)
    }
}

/// `(c_up e^{−iφ/2} + c_down e^{iφ/2}) / √2`.
pub fn sg_amplitude(s: &SternGerlachScenario, phi: f64) -> C64 {
    (C64::from_polar(s.c_up, -0.5 * phi) + C64::from_polar(s.c_down, 0.5 * phi)) * FRAC_1_SQRT_2
}

/// `½(1 + 2 c_up c_down cos φ)`.
pub fn sg_probability(s: &SternGerlachScenario, phi: f64) -> f64 {
    0.5 * (1.0 + 2.0 * s.c_up * s.c_down * phi.cos())
}

/// `(c_up − c_down)/(c_up + c_down)`, the weak value of `σ_z` at `φ = 0`.
pub fn sg_w0(s: &SternGerlachScenario) -> Result<f64> {
    let sum = s.c_up + s.c_down;
    if sum.abs() < W0_SINGULAR_TOL {
        return Err(LabError::DivergentW0(sum));
    }
    Ok((s.c_up - s.c_down) / sum)
}

/// `−ħ arctan(W₀ tan(φ/2))`, continued across `|φ| = π` without jumps, plus
/// `πħ` when `c_up + c_down < 0`.
pub fn sg_action(s: &SternGerlachScenario, phi: f64, hbar: f64) -> Result<f64> {
    let w0 = sg_w0(s)?;
    let u = 0.5 * phi;
    let k = (u / PI).round();
    let mut action = -hbar * ((w0 * u.tan()).atan() + k * PI * w0.signum() * (w0 != 0.0) as u8 as f64);
    if s.c_up + s.c_down < 0.0 {
        action += PI * hbar;
    }
    Ok(action)
}

/// `(ħ/2) W₀ / (cos²(φ/2) + W₀² sin²(φ/2))`, the real part of the weak value.
pub fn sg_weak_value(s: &SternGerlachScenario, phi: f64, hbar: f64) -> Result<f64> {
    let w0 = sg_w0(s)?;
    let (sin, cos) = (0.5 * phi).sin_cos();
    Ok(0.5 * hbar * w0 / (cos * cos + w0 * w0 * sin * sin))
}

/// `∂²S/∂φ² = (ħ/4) W₀(W₀² − 1) sin φ / (cos²(φ/2) + W₀² sin²(φ/2))²`.
pub fn sg_action_curvature(s: &SternGerlachScenario, phi: f64, hbar: f64) -> Result<f64> {
    let w0 = sg_w0(s)?;
    let (sin, cos) = (0.5 * phi).sin_cos();
    let d = cos * cos + w0 * w0 * sin * sin;
    Ok(0.25 * hbar * w0 * (w0 * w0 - 1.0) * phi.sin() / (d * d))
}

/// Largest deviations between the generic engine and the closed forms.
#[derive(Debug, Clone, Serialize)]
pub struct SgCrosscheck {
    pub points: usize,
    /// Grid points where `|⟨f|U|ψ⟩|` fell below the context tolerance.
    pub skipped: Vec<f64>,
    pub max_amplitude_residual: f64,
    pub max_probability_residual: f64,
    /// After aligning each contiguous run of evaluated points modulo `2πħ`.
    pub max_action_residual: f64,
    pub max_weak_value_residual: f64,
}

impl SgCrosscheck {
    pub fn max_residual(&self) -> f64 {
        self.max_amplitude_residual
            .max(self.max_probability_residual)
            .max(self.max_action_residual)
            .max(self.max_weak_value_residual)
    }
}

/// Evaluates the generic engine on the spin-½ system over an ascending grid
/// and compares it with [`sg_amplitude`], [`sg_probability`], [`sg_action`]
/// and [`sg_weak_value`].
pub fn crosscheck_sg(s: &SternGerlachScenario, phi_grid: &[f64], hbar: f64, amp_tol: f64) -> Result<SgCrosscheck> {
    let ctx = s.context(hbar)?.with_amp_tol(amp_tol)?;
    let mut report = SgCrosscheck {
        points: phi_grid.len(),
        skipped: Vec::new(),
        max_amplitude_residual: 0.0,
        max_probability_residual: 0.0,
        max_action_residual: 0.0,
        max_weak_value_residual: 0.0,
    };
    let mut run: Vec<f64> = Vec::new();
    for &phi in phi_grid {
        let amp = ctx.transition_amplitude(phi);
        report.max_amplitude_residual = report.max_amplitude_residual.max((amp - sg_amplitude(s, phi)).norm());
        report.max_probability_residual = report
            .max_probability_residual
            .max((ctx.probability(phi) - sg_probability(s, phi)).abs());
        if amp.norm() < amp_tol {
            report.skipped.push(phi);
            check_action_run(&ctx, s, &run, hbar, &mut report)?;
            run.clear();
            continue;
        }
        let weak = ctx.weak_value(phi)?.re;
        report.max_weak_value_residual = report
            .max_weak_value_residual
            .max((weak - sg_weak_value(s, phi, hbar)?).abs());
        run.push(phi);
    }
    check_action_run(&ctx, s, &run, hbar, &mut report)?;
    Ok(report)
}

fn check_action_run(
    ctx: &BackActionContext,
    s: &SternGerlachScenario,
    run: &[f64],
    hbar: f64,
    report: &mut SgCrosscheck,
) -> Result<()> {
    if run.is_empty() {
        return Ok(());
    }
    let curve = ctx.action_and_probability(run)?;
    let turn = 2.0 * PI * hbar;
    let offset = turn * ((sg_action(s, run[0], hbar)? - curve.s_values[0]) / turn).round();
    for (&phi, &generic) in run.iter().zip(&curve.s_values) {
        let closed = sg_action(s, phi, hbar)?;
        report.max_action_residual = report.max_action_residual.max((generic + offset - closed).abs());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeParticleCrosscheck {
    /// `max |x_m + ∂S/∂p|` with a central difference.
    pub max_position_residual: f64,
    /// `max |second difference of S − (−t/4m)|`.
    pub max_curvature_residual: f64,
    /// `|√(ħt/4m) − √(ħ|∂²S/∂p²|)|` with the numeric curvature.
    pub min_fluctuation_residual: f64,
}

/// Derivative identities of the free-particle action over a set of kicks.
/// `h` is the finite-difference step for the slope; the curvature uses a
/// unit step, exact for a quadratic up to rounding.
pub fn crosscheck_free_particle(s: &FreeParticleScenario, p_values: &[f64], hbar: f64, h: f64) -> Result<FreeParticleCrosscheck> {
    if !(h > 0.0) {
        return Err(LabError::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    let mut position: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    let mut fluctuation: f64 = 0.0;
    for &p in p_values {
        let slope = (fp_action(s, p + h, hbar) - fp_action(s, p - h, hbar)) / (2.0 * h);
        position = position.max((fp_position(s, p) + slope).abs());
        let second = fp_action(s, p + 1.0, hbar) - 2.0 * fp_action(s, p, hbar) + fp_action(s, p - 1.0, hbar);
        curvature = curvature.max((second - fp_curvature(s)).abs());
        fluctuation = fluctuation.max((fp_min_fluctuation(s, hbar) - floor_from_curvature(second, hbar)).abs());
    }
    Ok(FreeParticleCrosscheck {
        max_position_residual: position,
        max_curvature_residual: curvature,
        min_fluctuation_residual: fluctuation,
    })
}
