//! Resolution versus back-action trade-off.
//!
//! A meter whose back-action parameter is uncertain by `δφ` cannot resolve
//! the target better than `δA_M ≥ ħ/(2δφ)`, while the spread in `φ` smears
//! the weak value by `δA_S = |∂²S/∂φ²|·δφ`. The sum in quadrature is bounded
//! below by `√(ħ|∂²S/∂φ²|)`.

use serde::Serialize;

use crate::backaction::BackActionContext;
use crate::error::{LabError, Result};
use crate::meter::{fourier_readout_basis, readout_distribution_post_selected, GaussianMeter, ReadoutDistribution};

/// Step used for the curvature finite difference.
pub const CURVATURE_STEP: f64 = 1e-3;

/// Pointer window of a simulated meter, in units of the expected total spread.
const SIMULATION_WINDOW_SPREADS: f64 = 12.0;

fn check_positive(delta_phi: f64) -> Result<()> {
    if !(delta_phi > 0.0) {
        return Err(LabError::NonPositiveUncertainty(delta_phi));
    }
    Ok(())
}

/// Smallest readout error `ħ/(2δφ)` compatible with a back-action spread `δφ`.
pub fn resolution_bound(delta_phi: f64, hbar: f64) -> Result<f64> {
    check_positive(delta_phi)?;
    Ok(hbar / (2.0 * delta_phi))
}

/// `|∂²S/∂φ²|·δφ` for a known curvature.
pub fn intrinsic_from_curvature(curvature: f64, delta_phi: f64) -> Result<f64> {
    check_positive(delta_phi)?;
    Ok(curvature.abs() * delta_phi)
}

/// Spread of the weak value caused by a back-action spread `δφ` around `φ`.
pub fn intrinsic_uncertainty(ctx: &BackActionContext, phi: f64, delta_phi: f64) -> Result<f64> {
    check_positive(delta_phi)?;
    intrinsic_from_curvature(ctx.action_curvature(phi, CURVATURE_STEP)?, delta_phi)
}

/// `√(ħ|∂²S/∂φ²|)`.
pub fn floor_from_curvature(curvature: f64, hbar: f64) -> f64 {
    (hbar * curvature.abs()).sqrt()
}

/// Lowest total readout fluctuation reachable at `φ`.
pub fn minimal_fluctuation(ctx: &BackActionContext, phi: f64) -> Result<f64> {
    Ok(floor_from_curvature(ctx.action_curvature(phi, CURVATURE_STEP)?, ctx.hbar()))
}

pub fn total_fluctuation(delta_a_s: f64, delta_a_m: f64) -> f64 {
    delta_a_s.hypot(delta_a_m)
}

/// `δφ` at which `δA_S = δA_M`, i.e. `δφ² = ħ/(2|∂²S/∂φ²|)`. Infinite when
/// the curvature vanishes.
pub fn optimal_delta_phi(curvature: f64, hbar: f64) -> f64 {
    (hbar / (2.0 * curvature.abs())).sqrt()
}

/// Bounds and (optionally) a simulated spread at one value of `δφ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub delta_phi: f64,
    pub delta_a_m: f64,
    pub delta_a_s: f64,
    pub delta_a_total: f64,
    pub bound_floor: f64,
    pub empirical_delta_a: Option<f64>,
}

impl TradeoffReport {
    /// Report with `δA_M` at its lower bound.
    pub fn from_curvature(curvature: f64, delta_phi: f64, hbar: f64) -> Result<Self> {
        let delta_a_m = resolution_bound(delta_phi, hbar)?;
        let delta_a_s = intrinsic_from_curvature(curvature, delta_phi)?;
        Ok(Self {
            delta_phi,
            delta_a_m,
            delta_a_s,
            delta_a_total: total_fluctuation(delta_a_s, delta_a_m),
            bound_floor: floor_from_curvature(curvature, hbar),
            empirical_delta_a: None,
        })
    }

    pub fn with_empirical(mut self, empirical: f64) -> Self {
        self.empirical_delta_a = Some(empirical);
        self
    }
}

/// Golden-section search for the `δφ` minimizing `√(δA_S² + δA_M²)`, carried
/// out in `ln δφ` on `[lo, hi]`. Returns `(δφ, minimum)`.
pub fn minimize_total_fluctuation(curvature: f64, hbar: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    check_positive(lo)?;
    if !(hi > lo) {
        return Err(LabError::InvalidInput(format!("empty search interval [{lo}, {hi}]")));
    }
    let total = |x: f64| {
        let d = x.exp();
        total_fluctuation(curvature.abs() * d, hbar / (2.0 * d))
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (total(c), total(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = total(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = total(d);
        }
    }
    let x = 0.5 * (a + b);
    Ok((x.exp(), total(x)))
}

/// RMS deviation of the pointer values around `around`, weighted by the
/// normalized distribution.
pub fn empirical_fluctuation(readout: &ReadoutDistribution, around: f64) -> Result<f64> {
    if !(readout.total_mass > 0.0) {
        return Err(LabError::EmptyDistribution);
    }
    let second: f64 = readout
        .bins
        .iter()
        .map(|b| b.probability * (b.pointer - around).powi(2))
        .sum();
    Ok((second / readout.total_mass).sqrt())
}

/// Spread `g·std(B)` of the back-action parameter in a discretized Gaussian
/// meter state.
pub fn meter_delta_phi(gm: &GaussianMeter) -> Result<f64> {
    let state = gm.state()?;
    let b = gm.meter.b_values();
    let p: Vec<f64> = state.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    let mean: f64 = p.iter().zip(&b).map(|(p, b)| p * b).sum();
    let var: f64 = p.iter().zip(&b).map(|(p, b)| p * (b - mean).powi(2)).sum();
    Ok(gm.meter.g() * var.sqrt())
}

/// Simulated post-selected readout with a Gaussian meter of width `σ_φ`
/// centered on the mean back-action `φ̄`. The empirical spread is taken
/// around `Re W(φ̄)`; the bounds use the discrete-grid `δφ`.
pub fn simulate_gaussian_tradeoff(
    ctx: &BackActionContext,
    phi_bar: f64,
    sigma_phi: f64,
    g: f64,
) -> Result<TradeoffReport> {
    check_positive(sigma_phi)?;
    let hbar = ctx.hbar();
    let weak = ctx.weak_value(phi_bar)?.re;
    let curvature = ctx.action_curvature(phi_bar, CURVATURE_STEP)?;
    let expected = TradeoffReport::from_curvature(curvature, sigma_phi, hbar)?;
    let half_window = weak.abs() + SIMULATION_WINDOW_SPREADS * expected.delta_a_total;
    let gm = GaussianMeter::adapted(sigma_phi, g, hbar, half_window)?;
    let centered = ctx.shifted(phi_bar)?;
    let dist = readout_distribution_post_selected(&centered, &gm.meter, &gm.state()?, &fourier_readout_basis(&gm.meter)?)?;
    let empirical = empirical_fluctuation(&dist, weak)?;
    Ok(TradeoffReport::from_curvature(curvature, meter_delta_phi(&gm)?, hbar)?.with_empirical(empirical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::ReadoutBin;
    use crate::quantum::{pauli_z, random_state, Observable, StateVector};

    fn sg(c_up: f64, c_down: f64) -> BackActionContext {
        BackActionContext::new(
            Observable::new(pauli_z().scale(0.5)).unwrap(),
            StateVector::from_real(&[1.0, 1.0]).unwrap(),
            StateVector::from_real(&[c_up, c_down]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn resolution_bound_values() {
        assert_eq!(resolution_bound(0.5, 1.0).unwrap(), 1.0);
        assert!(resolution_bound(1e300, 1.0).unwrap() < 1e-299);
        assert!(matches!(resolution_bound(0.0, 1.0), Err(LabError::NonPositiveUncertainty(_))));
        assert!(matches!(resolution_bound(-1.0, 1.0), Err(LabError::NonPositiveUncertainty(_))));
        for d in [0.01, 0.3, 7.0] {
            assert_eq!(resolution_bound(d, 2.0).unwrap() * d, 1.0);
        }
    }

    #[test]
    fn eigenstate_has_no_intrinsic_spread() {
        let a = Observable::diagonal(&[0.3, -1.0, 2.0]).unwrap();
        let ctx = BackActionContext::new(a, StateVector::basis(3, 1), random_state(3, 1), 1.0).unwrap();
        assert!(intrinsic_uncertainty(&ctx, 0.2, 0.7).unwrap() < 1e-9);
        assert!(minimal_fluctuation(&ctx, 0.2).unwrap() < 1e-4);
    }

    #[test]
    fn sg_up_has_no_floor() {
        let ctx = sg(1.0, 0.0);
        assert!(minimal_fluctuation(&ctx, 0.4).unwrap() < 1e-4);
    }

    #[test]
    fn sg_anomalous_intrinsic_spread_matches_symbolic_derivative() {
        let ctx = sg(0.8, -0.6);
        let w = 7.0_f64;
        for phi in [0.0_f64, 0.42, 1.3] {
            let s = phi.sin();
            let d = (0.5 * phi).cos().powi(2) + w * w * (0.5 * phi).sin().powi(2);
            let curvature = 0.25 * w * (w * w - 1.0) * s / (d * d);
            let got = intrinsic_uncertainty(&ctx, phi, 0.1).unwrap();
            assert!((got - 0.1 * curvature.abs()).abs() < 1e-8, "phi={phi} got {got}");
        }
    }

    #[test]
    fn analytic_minimum_equals_floor() {
        for (k, hbar) in [(0.3, 1.0), (4.0, 1.0), (1.0, 0.5), (-2.5, 2.0)] {
            let floor = floor_from_curvature(k, hbar);
            let opt = optimal_delta_phi(k, hbar);
            let at_opt = TradeoffReport::from_curvature(k, opt, hbar).unwrap();
            assert!((at_opt.delta_a_total - floor).abs() < 1e-12);
            assert!((at_opt.delta_a_s - at_opt.delta_a_m).abs() < 1e-12);
            let (_, min) = minimize_total_fluctuation(k, hbar, 1e-4, 1e4).unwrap();
            assert!((min - floor).abs() < 1e-10);
        }
    }

    #[test]
    fn report_invariants() {
        for d in [0.01, 0.2, 3.0] {
            let r = TradeoffReport::from_curvature(1.7, d, 1.0).unwrap();
            assert!((r.delta_a_total.powi(2) - r.delta_a_s.powi(2) - r.delta_a_m.powi(2)).abs() < 1e-12 * r.delta_a_total.powi(2));
            assert!(r.delta_a_total >= r.bound_floor - 1e-12);
        }
    }

    #[test]
    fn single_bin_has_no_spread() {
        let dist = ReadoutDistribution {
            bins: vec![ReadoutBin { pointer: 0.25, probability: 0.4 }],
            post_selected: true,
            total_mass: 0.4,
        };
        assert_eq!(empirical_fluctuation(&dist, 0.25).unwrap(), 0.0);
        let empty = ReadoutDistribution { bins: vec![], post_selected: false, total_mass: 0.0 };
        assert!(matches!(empirical_fluctuation(&empty, 0.0), Err(LabError::EmptyDistribution)));
    }

    #[test]
    fn gaussian_meter_saturates_resolution_bound() {
        // f = |↑⟩: the conditional meter state is a phase ramp, so the pointer
        // distribution is the bare Gaussian readout.
        let ctx = sg(1.0, 0.0);
        for sigma in [0.1, 0.5, 2.0] {
            let r = simulate_gaussian_tradeoff(&ctx, 0.0, sigma, 1.0).unwrap();
            assert!((r.delta_phi / sigma - 1.0).abs() < 1e-6);
            let emp = r.empirical_delta_a.unwrap();
            assert!((emp / r.delta_a_m - 1.0).abs() < 1e-3, "sigma {sigma}: {emp} vs {}", r.delta_a_m);
        }
    }

    #[test]
    fn weak_regime_matches_quadrature_sum() {
        let ctx = sg(0.8, -0.6);
        for sigma in [0.05, 0.15, 0.3] {
            let r = simulate_gaussian_tradeoff(&ctx, 0.42, sigma, 1.0).unwrap();
            let ratio = r.empirical_delta_a.unwrap() / r.delta_a_total;
            assert!((ratio - 1.0).abs() < 0.1, "sigma {sigma}: ratio {ratio}");
        }
    }
}
