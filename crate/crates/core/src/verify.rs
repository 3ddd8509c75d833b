//! End-to-end oracle suites. Each suite is seeded independently, so suites
//! can run in any order or in parallel and still produce the same report.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backaction::{BackActionContext, DEFAULT_AMP_TOL};
use crate::error::{LabError, Result};
use crate::meter::{
    assemble_backaction, backaction_decomposition, eigenvalue_emergence_study, fourier_readout_basis,
    interaction_unitary, joint_amplitudes, joint_amplitudes_full, projector_emergence_check,
    GaussianMeter, MeterModel,
};
use crate::quantum::{
    random_hermitian_with, random_orthonormal_basis_with, random_state_with, seeded_rng, Observable, StateVector, C64,
};
use crate::scenarios::{
    crosscheck_free_particle, crosscheck_sg, fp_curvature, fp_min_fluctuation, sg_w0, sg_weak_value,
    FreeParticleScenario, SternGerlachScenario,
};
use crate::uncertainty::{
    floor_from_curvature, minimize_total_fluctuation, optimal_delta_phi, simulate_gaussian_tradeoff,
    TradeoffReport, CURVATURE_STEP,
};

/// Slack allowed when checking that an error sequence decreases.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Widths of the Gaussian meters in the eigenvalue-emergence suite.
pub const EMERGENCE_WIDTHS: [f64; 4] = [2.0, 5.0, 10.0, 20.0];

/// Anomalous Stern–Gerlach post-selection used throughout.
pub const ANOMALOUS_SG: (f64, f64) = (0.8, -0.6);

/// Mean back-action of the simulated trade-off study.
pub const TRADEOFF_PHI_BAR: f64 = 0.42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    BackactionEquivalence,
    HamiltonJacobi,
    JointAmplitude,
    SternGerlach,
    FreeParticle,
    EigenvalueEmergence,
    Tradeoff,
    Completeness,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::BackactionEquivalence,
        Suite::HamiltonJacobi,
        Suite::JointAmplitude,
        Suite::SternGerlach,
        Suite::FreeParticle,
        Suite::EigenvalueEmergence,
        Suite::Tradeoff,
        Suite::Completeness,
    ];

    pub fn number(self) -> u32 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u32 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::BackactionEquivalence => "backaction-equivalence",
            Suite::HamiltonJacobi => "hamilton-jacobi",
            Suite::JointAmplitude => "joint-amplitude",
            Suite::SternGerlach => "stern-gerlach",
            Suite::FreeParticle => "free-particle",
            Suite::EigenvalueEmergence => "eigenvalue-emergence",
            Suite::Tradeoff => "tradeoff",
            Suite::Completeness => "completeness",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Run parameters shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub hbar: f64,
    pub amp_tol: f64,
    /// Flips the sign of the weak value in the Hamilton–Jacobi suite, for
    /// exercising the failure path.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            hbar: 1.0,
            amp_tol: DEFAULT_AMP_TOL,
            inject_fault: false,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(LabError::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.amp_tol > 0.0 && self.amp_tol < 1e-2) {
            return Err(LabError::InvalidInput(format!(
                "amp_tol must lie in (0, 1e-2), got {}",
                self.amp_tol
            )));
        }
        Ok(())
    }

    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        seeded_rng(self.seed ^ (suite.number() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// One quantitative check: passes when `value <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub number: u32,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Set when the suite stopped on an error instead of finishing.
    pub error: Option<String>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>, notes: Vec<String>) -> Self {
        Self {
            number: suite.number(),
            name: suite.name().to_string(),
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            notes,
            error: None,
        }
    }

    fn failed(suite: Suite, err: &LabError) -> Self {
        Self {
            number: suite.number(),
            name: suite.name().to_string(),
            passed: false,
            checks: Vec::new(),
            notes: Vec::new(),
            error: Some(err.to_string()),
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub hbar: f64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn from_suites(config: &VerifyConfig, suites: Vec<SuiteReport>) -> Self {
        Self {
            seed: config.seed,
            hbar: config.hbar,
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }
}

/// Runs one suite, converting a computational error into a failed report.
pub fn run_suite(suite: Suite, config: &VerifyConfig) -> SuiteReport {
    let outcome = match suite {
        Suite::BackactionEquivalence => suite_backaction_equivalence(config),
        Suite::HamiltonJacobi => suite_hamilton_jacobi(config),
        Suite::JointAmplitude => suite_joint_amplitude(config),
        Suite::SternGerlach => suite_stern_gerlach(config),
        Suite::FreeParticle => suite_free_particle(config),
        Suite::EigenvalueEmergence => suite_eigenvalue_emergence(config),
        Suite::Tradeoff => suite_tradeoff(config),
        Suite::Completeness => suite_completeness(config),
    };
    outcome.unwrap_or_else(|e| SuiteReport::failed(suite, &e))
}

/// All suites in order, sequentially.
pub fn run_all(config: &VerifyConfig) -> VerifyReport {
    let suites = Suite::ALL.iter().map(|&s| run_suite(s, config)).collect();
    VerifyReport::from_suites(config, suites)
}

/// Joint interaction unitary from a direct diagonalization against the
/// assembled back-action blocks; 100 instances, system dimension ≤ 8,
/// meter grid ≤ 64.
fn suite_backaction_equivalence(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::BackactionEquivalence;
    let mut rng = config.rng(suite);
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(2..=64);
        let a = random_hermitian_with(&mut rng, d).scaled(config.hbar)?;
        let span = rng.random_range(0.5..3.0);
        let g = rng.random_range(0.5..2.0);
        let meter = MeterModel::new(n, 2.0 * span / n as f64, g, config.hbar)?;
        let joint = interaction_unitary(&a, &meter)?;
        let assembled = assemble_backaction(&backaction_decomposition(&a, &meter)?);
        // Frobenius norm bounds the operator norm from above
        worst = worst.max((joint - assembled).norm());
        largest = largest.max(d * n);
    }
    Ok(SuiteReport::new(
        suite,
        vec![Check::at_most("max operator-norm residual (Frobenius bound)", worst, 1e-10)],
        vec![format!("100 instances, largest joint dimension {largest}")],
    ))
}

/// A context with `P ≥ 1e-4` on `[φ - 2h, φ + 2h]`.
fn random_hj_instance(rng: &mut ChaCha8Rng, config: &VerifyConfig, h: f64) -> Result<(BackActionContext, f64)> {
    loop {
        let d = rng.random_range(2..=6);
        let a = random_hermitian_with(rng, d).scaled(config.hbar)?;
        let psi = random_state_with(rng, d);
        let f = random_state_with(rng, d);
        let ctx = BackActionContext::new(a, psi, f, config.hbar)?.with_amp_tol(config.amp_tol)?;
        let phi = rng.random_range(-PI..PI);
        if [-2.0, -1.0, 0.0, 1.0, 2.0].iter().all(|k| ctx.probability(phi + k * h) >= 1e-4) {
            return Ok((ctx, phi));
        }
    }
}

/// `-∂S/∂φ = Re W` on 100 random contexts, plus second-order convergence of
/// the plain central difference.
fn suite_hamilton_jacobi(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::HamiltonJacobi;
    let mut rng = config.rng(suite);
    let h = 1e-4;
    let (coarse_h, fine_h) = (2e-3, 1e-3);
    let sign = if config.inject_fault { -1.0 } else { 1.0 };
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for _ in 0..100 {
        let (ctx, phi) = random_hj_instance(&mut rng, config, coarse_h)?;
        let weak = sign * ctx.weak_value(phi)?.re;
        worst = worst.max((ctx.action_slope_extrapolated(phi, h)? - weak).abs());
        let coarse = (ctx.action_slope(phi, coarse_h)? - weak).abs();
        let fine = (ctx.action_slope(phi, fine_h)? - weak).abs();
        // ratios are only meaningful well above rounding noise
        if coarse > 1e-8 {
            ratios.push(coarse / fine);
        }
    }
    let ratio_deviation = ratios.iter().fold(0.0_f64, |acc, r| acc.max((r.log2() - 2.0).abs()));
    let ratio_deviation = if ratios.is_empty() { f64::NAN } else { ratio_deviation };
    Ok(SuiteReport::new(
        suite,
        vec![
            Check::at_most("max extrapolated residual", worst, 1e-6),
            Check::at_most("max |log2(residual ratio under step halving) - 2|", ratio_deviation, 0.25),
        ],
        vec![format!(
            "extrapolation step {h:e}; convergence steps {coarse_h:e}/{fine_h:e} on {} of 100 instances",
            ratios.len()
        )],
    ))
}

/// Factorized joint amplitude against full joint-space evolution.
fn suite_joint_amplitude(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::JointAmplitude;
    let mut rng = config.rng(suite);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(2..=32);
        let a = random_hermitian_with(&mut rng, d).scaled(config.hbar)?;
        let ctx = BackActionContext::new(a, random_state_with(&mut rng, d), random_state_with(&mut rng, d), config.hbar)?;
        let meter = MeterModel::new(n, rng.random_range(1.0..6.0) / n as f64, rng.random_range(0.5..2.0), config.hbar)?;
        let phi_m = random_state_with(&mut rng, n);
        let basis = fourier_readout_basis(&meter)?;
        let fast = joint_amplitudes(&ctx, &meter, &phi_m, &basis)?;
        let full = joint_amplitudes_full(&ctx, &meter, &phi_m, &basis)?;
        worst = worst.max((fast - full).iter().fold(0.0_f64, |acc, z| acc.max(z.norm())));
    }
    Ok(SuiteReport::new(
        suite,
        vec![Check::at_most("max amplitude deviation", worst, 1e-10)],
        vec!["100 instances, system dimension <= 6, meter grid <= 32".into()],
    ))
}

fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Generic engine against the spin-½ closed forms for 20 random real
/// post-selections, and the anomalous weak value.
fn suite_stern_gerlach(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::SternGerlach;
    let mut rng = config.rng(suite);
    let hbar = config.hbar;
    let grid = open_grid(-PI + 0.1, PI - 0.1, 1000);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..20 {
        let s = SternGerlachScenario::from_angle(rng.random_range(0.0..2.0 * PI));
        let r = crosscheck_sg(&s, &grid, hbar, config.amp_tol)?;
        worst = worst.max(r.max_residual());
        skipped += r.skipped.len();
    }
    let anomalous = SternGerlachScenario::new(ANOMALOUS_SG.0, ANOMALOUS_SG.1)?;
    let w0 = sg_w0(&anomalous)?;
    let closed = sg_weak_value(&anomalous, 0.0, hbar)?;
    let generic = anomalous.context(hbar)?.weak_value(0.0)?;
    Ok(SuiteReport::new(
        suite,
        vec![
            Check::at_most("max closed-form residual", worst, 1e-9),
            Check::at_most("|W0 - 7|", (w0 - 7.0).abs(), 1e-12),
            Check::at_most("|closed-form weak value(0) - 3.5 hbar|", (closed - 3.5 * hbar).abs(), 1e-12 * hbar),
            Check::at_most("|generic weak value(0) - 3.5 hbar|", (generic - 3.5 * hbar).norm(), 1e-12 * hbar),
        ],
        vec![format!("20 directions x 1000 points, {skipped} points skipped below amp_tol")],
    ))
}

/// Derivative identities of the free-particle action.
fn suite_free_particle(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::FreeParticle;
    let mut rng = config.rng(suite);
    let hbar = config.hbar;
    let kicks = open_grid(-3.0, 3.0, 61);
    let (mut position, mut curvature, mut fluctuation): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let s = FreeParticleScenario::new(
            rng.random_range(0.1..2.0),
            rng.random_range(0.5..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        )?;
        let r = crosscheck_free_particle(&s, &kicks, hbar, 1e-3)?;
        position = position.max(r.max_position_residual);
        curvature = curvature.max(r.max_curvature_residual / fp_curvature(&s).abs());
        fluctuation = fluctuation.max(r.min_fluctuation_residual / fp_min_fluctuation(&s, hbar));
    }
    let reference = FreeParticleScenario::new(0.25, 1.0, 0.0, 0.0)?;
    Ok(SuiteReport::new(
        suite,
        vec![
            Check::at_most("max |x_m + dS/dp|", position, 1e-10),
            Check::at_most("max relative curvature deviation from -t/4m", curvature, 1e-12),
            Check::at_most("max relative floor deviation", fluctuation, 1e-12),
            Check::at_most("|min fluctuation(hbar=1, t=1, m=0.25) - 1|", (fp_min_fluctuation(&reference, 1.0) - 1.0).abs(), 0.0),
        ],
        vec!["20 random scenarios x 61 kicks".into()],
    ))
}

/// Pointer window for a Gaussian meter reading a spectrum bounded by `max_abs`.
pub fn emergence_meter(sigma_phi: f64, hbar: f64, max_abs: f64) -> Result<GaussianMeter> {
    let resolution = hbar / (2.0 * sigma_phi);
    GaussianMeter::adapted(sigma_phi, 1.0, hbar, max_abs + 12.0 * resolution)
}

/// The spin-½ system `ψ = √0.3|↑⟩ + √0.7|↓⟩` with `A = ħσ_z/2`.
pub fn born_system(hbar: f64) -> Result<(Observable, StateVector)> {
    let a = SternGerlachScenario::observable().scaled(hbar)?;
    let psi = StateVector::from_real(&[0.3_f64.sqrt(), 0.7_f64.sqrt()])?;
    Ok((a, psi))
}

/// Post-selection used by the post-selected emergence study.
pub fn born_post_selection() -> StateVector {
    StateVector::from_complex(&[C64::new(0.6, 0.0), C64::from_polar(0.8, 0.7)]).expect("normalized")
}

/// Eigenvalue and projector emergence as the meter width grows.
fn suite_eigenvalue_emergence(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::EigenvalueEmergence;
    let hbar = config.hbar;
    let (a, psi) = born_system(hbar)?;
    let meters = EMERGENCE_WIDTHS
        .iter()
        .map(|&s| emergence_meter(s, hbar, 0.5 * hbar))
        .collect::<Result<Vec<_>>>()?;
    let f = born_post_selection();
    let unconditional = eigenvalue_emergence_study(&a, &psi, None, &meters)?;
    let post_selected = eigenvalue_emergence_study(&a, &psi, Some(&f), &meters)?;
    let projectors = projector_emergence_check(&a, &meters)?;

    let tv_u: Vec<f64> = unconditional.iter().map(|r| r.tv_error).collect();
    let tv_p: Vec<f64> = post_selected.iter().map(|r| r.tv_error).collect();
    let dist: Vec<f64> = projectors.max_distance_per_meter().iter().map(|x| x.1).collect();
    let rise = |v: &[f64]| v.windows(2).fold(0.0_f64, |acc, w| acc.max(w[1] - w[0]));
    let born = &unconditional.last().unwrap();
    let born_dev = born
        .masses
        .iter()
        .zip([0.7, 0.3])
        .fold(0.0_f64, |acc, (m, e)| acc.max((m - e).abs()));
    let mut checks = vec![
        Check::at_most("unconditional TV error rise", rise(&tv_u), MONOTONE_SLACK),
        Check::at_most("unconditional TV error at widest meter", *tv_u.last().unwrap(), 1e-3),
        Check::at_most("max |peak mass - Born weight| at widest meter", born_dev, 1e-3),
        Check::at_most("post-selected TV error rise", rise(&tv_p), MONOTONE_SLACK),
        Check::at_most("post-selected TV error at widest meter", *tv_p.last().unwrap(), 1e-3),
        Check::at_most("projector distance rise", rise(&dist), MONOTONE_SLACK),
        Check::at_most("projector distance at widest meter", *dist.last().unwrap(), 1e-2),
    ];
    let resolved = born.resolved.iter().all(|&r| r);
    checks.push(Check::at_most("unresolved peaks at widest meter", (!resolved) as u8 as f64, 0.0));
    let notes = EMERGENCE_WIDTHS
        .iter()
        .zip(tv_u.iter().zip(tv_p.iter().zip(&dist)))
        .map(|(s, (u, (p, d)))| format!("sigma_phi {s}: TV {u:.3e}, post-selected TV {p:.3e}, projector distance {d:.3e}"))
        .collect();
    Ok(SuiteReport::new(suite, checks, notes))
}

/// Grid of meter widths in the simulated trade-off study.
pub fn tradeoff_widths() -> Vec<f64> {
    open_grid(0.05, 0.3, 11)
}

/// Analytic minimum of the quadrature sum, and a simulated anomalous
/// spin-½ readout against it.
fn suite_tradeoff(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::Tradeoff;
    let hbar = config.hbar;
    let mut analytic: f64 = 0.0;
    for curvature in [0.05, 0.3, 1.0, 4.0, 25.0, -2.0] {
        let c = curvature * hbar;
        let floor = floor_from_curvature(c, hbar);
        let (_, min) = minimize_total_fluctuation(c, hbar, 1e-6, 1e6)?;
        let at_opt = TradeoffReport::from_curvature(c, optimal_delta_phi(c, hbar), hbar)?;
        analytic = analytic.max((min - floor).abs()).max((at_opt.delta_a_total - floor).abs());
    }
    let s = SternGerlachScenario::new(ANOMALOUS_SG.0, ANOMALOUS_SG.1)?;
    let ctx = s.context(hbar)?;
    let reports = tradeoff_widths()
        .iter()
        .map(|&sigma| simulate_gaussian_tradeoff(&ctx, TRADEOFF_PHI_BAR, sigma, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let ratio_dev = reports
        .iter()
        .map(|r| (r.empirical_delta_a.unwrap() / r.delta_a_total - 1.0).abs())
        .fold(0.0_f64, f64::max);
    let (best_sigma, best) = reports
        .iter()
        .map(|r| (r.delta_phi, r.empirical_delta_a.unwrap()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let floor = reports[0].bound_floor;
    let curvature = ctx.action_curvature(TRADEOFF_PHI_BAR, CURVATURE_STEP)?;
    Ok(SuiteReport::new(
        suite,
        vec![
            Check::at_most("analytic minimum vs floor", analytic, 1e-10),
            Check::at_most("max |empirical / quadrature sum - 1|", ratio_dev, 0.1),
            Check::at_most("|min empirical / floor - 1|", (best / floor - 1.0).abs(), 0.1),
        ],
        vec![format!(
            "mean back-action {TRADEOFF_PHI_BAR}, curvature {curvature:.6e}, floor {floor:.6e}; empirical minimum {best:.6e} at delta_phi {best_sigma:.4}, optimum {:.4}",
            optimal_delta_phi(curvature, hbar)
        )],
    ))
}

/// Probability-weighted weak values over a complete post-selection basis
/// reproduce `⟨ψ|U†AU|ψ⟩`.
fn suite_completeness(config: &VerifyConfig) -> Result<SuiteReport> {
    let suite = Suite::Completeness;
    let mut rng = config.rng(suite);
    let grid = open_grid(-PI, PI, 41);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..10 {
        let d = rng.random_range(2..=6);
        let a = random_hermitian_with(&mut rng, d).scaled(config.hbar)?;
        let psi = random_state_with(&mut rng, d);
        let basis = random_orthonormal_basis_with(&mut rng, d);
        let contexts = (0..d)
            .map(|k| {
                BackActionContext::new(a.clone(), psi.clone(), StateVector::from_column(&basis, k)?, config.hbar)?
                    .with_amp_tol(config.amp_tol)
            })
            .collect::<Result<Vec<_>>>()?;
        for &phi in &grid {
            let evolved = contexts[0].back_action_unitary(phi) * psi.amplitudes();
            let expectation = evolved.dotc(&(a.matrix() * &evolved));
            let mut sum = C64::new(0.0, 0.0);
            for ctx in &contexts {
                match ctx.weak_value(phi) {
                    Ok(w) => sum += w * ctx.probability(phi),
                    // P·W → 0 as the amplitude vanishes
                    Err(LabError::AmplitudeVanishes { .. }) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            worst = worst.max((sum - expectation).norm());
        }
    }
    Ok(SuiteReport::new(
        suite,
        vec![Check::at_most("max |sum P W - <A>|", worst, 1e-10)],
        vec![format!("10 systems x 41 phases, {skipped} vanishing terms dropped")],
    ))
}
