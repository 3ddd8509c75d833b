//! Post-selected transition amplitudes under the back-action unitary
//! `U(φ) = exp(-i φ A / ħ)`, the action `S = ħ·arg⟨f|U(φ)|ψ⟩`, weak values and
//! Hamilton–Jacobi consistency checks.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::quantum::{unitary_from_generator, ComplexMatrix, Observable, StateVector, C64};

/// Below this modulus the phase of a transition amplitude is treated as undefined.
pub const DEFAULT_AMP_TOL: f64 = 1e-10;

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Largest phase increment accepted between neighbouring points before the
/// interval is bisected.
pub const REFINE_THRESHOLD: f64 = PI / 4.0;

const MAX_REFINE_DEPTH: u32 = 40;

/// Target observable with pre- and post-selected states.
#[derive(Debug, Clone)]
pub struct BackActionContext {
    observable: Observable,
    psi: StateVector,
    f: StateVector,
    hbar: f64,
    amp_tol: f64,
    // ⟨f|v_k⟩⟨v_k|ψ⟩ in the eigenbasis of the observable
    weights: Vec<C64>,
}

impl BackActionContext {
    pub fn new(observable: Observable, psi: StateVector, f: StateVector, hbar: f64) -> Result<Self> {
        let dim = observable.dim();
        if psi.dim() != dim || f.dim() != dim {
            return Err(LabError::DimensionMismatch(format!(
                "observable has dimension {dim}, psi {}, f {}",
                psi.dim(),
                f.dim()
            )));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(LabError::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        let v = &observable.decomposition().eigenvectors;
        let weights = (0..dim)
            .map(|k| {
                let col = v.column(k);
                col.dotc(f.amplitudes()).conj() * col.dotc(psi.amplitudes())
            })
            .collect();
        Ok(Self {
            observable,
            psi,
            f,
            hbar,
            amp_tol: DEFAULT_AMP_TOL,
            weights,
        })
    }

    pub fn with_amp_tol(mut self, amp_tol: f64) -> Result<Self> {
        if !(amp_tol > 0.0) {
            return Err(LabError::InvalidInput(format!("amp_tol must be positive, got {amp_tol}")));
        }
        self.amp_tol = amp_tol;
        Ok(self)
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn f(&self) -> &StateVector {
        &self.f
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn amp_tol(&self) -> f64 {
        self.amp_tol
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    /// Same observable and post-selection with `ψ` replaced by `U(φ̄)ψ`, so
    /// that every quantity at `φ` equals the original one at `φ + φ̄`.
    pub fn shifted(&self, phi_bar: f64) -> Result<Self> {
        let psi = self.psi.evolve(&self.back_action_unitary(phi_bar))?;
        Ok(Self::new(self.observable.clone(), psi, self.f.clone(), self.hbar)?.with_amp_tol(self.amp_tol)?)
    }

    /// Same context with `f` replaced.
    pub fn with_post_selection(&self, f: StateVector) -> Result<Self> {
        Self::new(self.observable.clone(), self.psi.clone(), f, self.hbar)?.with_amp_tol(self.amp_tol)
    }

    pub fn back_action_unitary(&self, phi: f64) -> ComplexMatrix {
        unitary_from_generator(&self.observable, phi, self.hbar)
    }

    /// `⟨f| exp(-i φ A/ħ) |ψ⟩`.
    pub fn transition_amplitude(&self, phi: f64) -> C64 {
        self.spectral_sum(phi, |_| 1.0)
    }

    /// `P(φ) = |⟨f|U(φ)|ψ⟩|²`.
    pub fn probability(&self, phi: f64) -> f64 {
        self.transition_amplitude(phi).norm_sqr()
    }

    fn spectral_sum(&self, phi: f64, weight: impl Fn(f64) -> f64) -> C64 {
        let eig = self.observable.eigenvalues();
        self.weights
            .iter()
            .zip(eig.iter())
            .map(|(w, &l)| w * weight(l) * C64::from_polar(1.0, -phi * l / self.hbar))
            .sum()
    }

    fn checked_amplitude(&self, phi: f64) -> Result<C64> {
        let amp = self.transition_amplitude(phi);
        let magnitude = amp.norm();
        if !(magnitude >= self.amp_tol) {
            return Err(LabError::AmplitudeVanishes {
                phi,
                magnitude,
                tolerance: self.amp_tol,
            });
        }
        Ok(amp)
    }

    /// Principal-branch action `ħ·Arg⟨f|U(φ)|ψ⟩`.
    pub fn action(&self, phi: f64) -> Result<f64> {
        Ok(self.hbar * self.checked_amplitude(phi)?.arg())
    }

    /// Complex weak value `⟨f|A U(φ)|ψ⟩ / ⟨f|U(φ)|ψ⟩`. The real part is the
    /// meter shift `-∂S/∂φ`.
    pub fn weak_value(&self, phi: f64) -> Result<C64> {
        let den = self.checked_amplitude(phi)?;
        let num = self.spectral_sum(phi, |l| l);
        Ok(num / den)
    }

    /// Continuous phase change of the amplitude from `phi_a` to `phi_b`,
    /// bisecting until every sub-step moves by at most [`REFINE_THRESHOLD`].
    pub fn phase_increment(&self, phi_a: f64, phi_b: f64) -> Result<f64> {
        let a = self.checked_amplitude(phi_a)?;
        let b = self.checked_amplitude(phi_b)?;
        let mut tally = Refinement::default();
        self.increment_between(phi_a, a, phi_b, b, 0, &mut tally)
    }

    fn increment_between(
        &self,
        phi_a: f64,
        a: C64,
        phi_b: f64,
        b: C64,
        depth: u32,
        tally: &mut Refinement,
    ) -> Result<f64> {
        let step = (b / a).arg();
        if step.abs() <= REFINE_THRESHOLD {
            return Ok(step);
        }
        let mid = 0.5 * (phi_a + phi_b);
        if depth >= MAX_REFINE_DEPTH || mid <= phi_a.min(phi_b) || mid >= phi_a.max(phi_b) {
            let amp = self.transition_amplitude(mid);
            return Err(LabError::AmplitudeVanishes {
                phi: mid,
                magnitude: amp.norm(),
                tolerance: self.amp_tol,
            });
        }
        let m = self.checked_amplitude(mid)?;
        tally.points += 1;
        tally.floor = tally.floor.min(m.norm());
        Ok(self.increment_between(phi_a, a, mid, m, depth + 1, tally)?
            + self.increment_between(mid, m, phi_b, b, depth + 1, tally)?)
    }

    /// Unwrapped action and probability sampled on an ascending grid.
    pub fn action_and_probability(&self, phi_grid: &[f64]) -> Result<ActionCurve> {
        if phi_grid.is_empty() {
            return Err(LabError::InvalidInput("empty phi grid".into()));
        }
        if phi_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidInput("phi grid must be strictly ascending".into()));
        }
        let amps = phi_grid
            .iter()
            .map(|&phi| self.checked_amplitude(phi))
            .collect::<Result<Vec<_>>>()?;
        let mut tally = Refinement {
            points: 0,
            floor: amps.iter().fold(f64::INFINITY, |acc, a| acc.min(a.norm())),
        };
        let mut s_values = Vec::with_capacity(phi_grid.len());
        s_values.push(self.hbar * amps[0].arg());
        for i in 1..phi_grid.len() {
            let inc = self.increment_between(phi_grid[i - 1], amps[i - 1], phi_grid[i], amps[i], 0, &mut tally)?;
            s_values.push(s_values[i - 1] + self.hbar * inc);
        }
        Ok(ActionCurve {
            phi_grid: phi_grid.to_vec(),
            s_values,
            p_values: amps.iter().map(|a| a.norm_sqr()).collect(),
            amp_floor: tally.floor,
            refinements: tally.points,
        })
    }

    /// Central difference of `-S` with step `h` (no extrapolation).
    pub fn action_slope(&self, phi: f64, h: f64) -> Result<f64> {
        check_step(h)?;
        Ok(-self.hbar * self.phase_increment(phi - h, phi + h)? / (2.0 * h))
    }

    /// Richardson-extrapolated `-∂S/∂φ` from steps `h` and `h/2`.
    pub fn action_slope_extrapolated(&self, phi: f64, h: f64) -> Result<f64> {
        let coarse = self.action_slope(phi, h)?;
        let fine = self.action_slope(phi, 0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `|-∂S/∂φ - Re W(φ)|` with the derivative Richardson-extrapolated over
    /// steps `h` and `h/2`.
    pub fn hj_residual(&self, phi: f64, h: f64) -> Result<f64> {
        let slope = self.action_slope_extrapolated(phi, h)?;
        Ok((slope - self.weak_value(phi)?.re).abs())
    }

    /// Same residual with a single central difference; shrinks as `O(h²)`.
    pub fn central_difference_residual(&self, phi: f64, h: f64) -> Result<f64> {
        let slope = self.action_slope(phi, h)?;
        Ok((slope - self.weak_value(phi)?.re).abs())
    }

    /// `∂²S/∂φ²`, evaluated as `-∂(Re W)/∂φ` by a Richardson-extrapolated
    /// central difference.
    pub fn action_curvature(&self, phi: f64, h: f64) -> Result<f64> {
        check_step(h)?;
        let diff = |step: f64| -> Result<f64> {
            let up = self.weak_value(phi + step)?.re;
            let down = self.weak_value(phi - step)?.re;
            Ok(-(up - down) / (2.0 * step))
        };
        let coarse = diff(h)?;
        let fine = diff(0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(LabError::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    Ok(())
}

#[derive(Debug)]
struct Refinement {
    points: usize,
    floor: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            points: 0,
            floor: f64::INFINITY,
        }
    }
}

/// Action and probability along a back-action grid.
#[derive(Debug, Clone, Serialize)]
pub struct ActionCurve {
    pub phi_grid: Vec<f64>,
    pub s_values: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Smallest `|amplitude|` evaluated, including bisection points.
    pub amp_floor: f64,
    /// Number of bisection points inserted while unwrapping.
    pub refinements: usize,
}

impl ActionCurve {
    pub fn len(&self) -> usize {
        self.phi_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_grid.is_empty()
    }

    /// Largest `|S(φ_{i+1}) - S(φ_i)|` along the grid.
    pub fn max_step(&self) -> f64 {
        self.s_values.windows(2).fold(0.0, |acc, w| acc.max((w[1] - w[0]).abs()))
    }
}
