//! Discrete von Neumann meters: the joint interaction unitary and its
//! back-action decomposition, Gaussian meter preparation, the Fourier
//! pointer readout, and the emergence of eigenvalues and projectors when the
//! back-action parameter becomes highly uncertain.
//!
//! The meter observable `B` is diagonal on a uniform grid
//! `B_b = δB·(b − (N−1)/2)`. Joint indices are system-major (`i·N + b`).

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use crate::backaction::{ActionCurve, BackActionContext};
use crate::error::{LabError, Result};
use crate::quantum::{
    hermitian_eig, operator_norm, tensor_product, unitary_from_generator, ComplexMatrix, ComplexVector,
    Observable, StateVector, C64, JOINT_DIMENSION_CAP,
};

/// Largest edge-to-peak amplitude ratio accepted for a truncated Gaussian.
pub const GAUSSIAN_EDGE_LIMIT: f64 = 1e-8;

/// Half-span of an adapted Gaussian meter grid, in units of `σ_B`.
const ADAPTED_SPAN_SIGMAS: f64 = 9.5;

/// Pointer bins per readout standard deviation `δA_M` on an adapted grid.
const ADAPTED_BINS_PER_RESOLUTION: f64 = 4.0;

/// Largest grid an adapted meter may request.
pub const ADAPTED_MAX_POINTS: usize = 1 << 14;

/// Concentration required before an eigenvalue counts as resolved.
pub const RESOLVED_MASS_FRACTION: f64 = 1.0 - 1e-3;

/// Uniform meter grid with coupling `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeterModel {
    n: usize,
    delta_b: f64,
    g: f64,
    hbar: f64,
}

impl MeterModel {
    pub fn new(n: usize, delta_b: f64, g: f64, hbar: f64) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidInput(format!("meter needs at least 2 grid points, got {n}")));
        }
        if !(delta_b > 0.0) || !delta_b.is_finite() {
            return Err(LabError::InvalidInput(format!("grid spacing must be positive, got {delta_b}")));
        }
        if !g.is_finite() {
            return Err(LabError::InvalidInput(format!("coupling must be finite, got {g}")));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(LabError::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { n, delta_b, g, hbar })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_b(&self) -> f64 {
        self.delta_b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn center(&self) -> f64 {
        0.5 * (self.n as f64 - 1.0)
    }

    pub fn b_value(&self, b: usize) -> f64 {
        self.delta_b * (b as f64 - self.center())
    }

    pub fn b_values(&self) -> Vec<f64> {
        (0..self.n).map(|b| self.b_value(b)).collect()
    }

    /// Back-action parameters `φ_b = g·B_b`.
    pub fn phi_values(&self) -> Vec<f64> {
        (0..self.n).map(|b| self.g * self.b_value(b)).collect()
    }

    /// `diag(B_b)`.
    pub fn b_matrix(&self) -> ComplexMatrix {
        crate::quantum::diagonal(&self.b_values())
    }

    fn require_positive_coupling(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(LabError::InvalidCoupling(self.g));
        }
        Ok(())
    }

    /// Pointer spacing `ΔA = 2πħ / (N g δB)`.
    pub fn pointer_spacing(&self) -> Result<f64> {
        self.require_positive_coupling()?;
        Ok(2.0 * PI * self.hbar / (self.n as f64 * self.g * self.delta_b))
    }

    /// Half width `πħ / (g δB)` of the alias-free pointer window.
    pub fn nyquist_half_window(&self) -> Result<f64> {
        self.require_positive_coupling()?;
        Ok(PI * self.hbar / (self.g * self.delta_b))
    }

    fn check_system(&self, ctx: &BackActionContext) -> Result<()> {
        if (ctx.hbar() - self.hbar).abs() > 1e-15 * self.hbar {
            return Err(LabError::InvalidInput(format!(
                "context hbar {} differs from meter hbar {}",
                ctx.hbar(),
                self.hbar
            )));
        }
        Ok(())
    }

    fn check_meter_state(&self, phi_m: &StateVector) -> Result<()> {
        if phi_m.dim() != self.n {
            return Err(LabError::DimensionMismatch(format!(
                "meter state has dimension {}, meter grid has {}",
                phi_m.dim(),
                self.n
            )));
        }
        Ok(())
    }
}

/// A meter grid together with the Gaussian width of its initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMeter {
    pub meter: MeterModel,
    pub sigma_b: f64,
}

impl GaussianMeter {
    /// Grid sized for a Gaussian meter of back-action width `σ_φ`: the pointer
    /// window covers `±half_window`, the `B` grid covers `±9.5 σ_B`, and the
    /// pointer spacing is at most a quarter of the resolution `ħ/(2σ_φ)`.
    /// The number of grid points is always odd.
    pub fn adapted(sigma_phi: f64, g: f64, hbar: f64, half_window: f64) -> Result<Self> {
        if !(sigma_phi > 0.0) {
            return Err(LabError::NonPositiveUncertainty(sigma_phi));
        }
        if !(g > 0.0) {
            return Err(LabError::InvalidCoupling(g));
        }
        if !(half_window > 0.0) || !half_window.is_finite() {
            return Err(LabError::InvalidInput(format!("pointer half window must be positive, got {half_window}")));
        }
        let sigma_b = sigma_phi / g;
        let delta_b = PI * hbar / (g * half_window);
        let half_points_cover = (ADAPTED_SPAN_SIGMAS * sigma_b / delta_b).ceil();
        let resolution = hbar / (2.0 * sigma_phi);
        let points_resolution = (2.0 * half_window * ADAPTED_BINS_PER_RESOLUTION / resolution).ceil();
        let half_points = half_points_cover.max((0.5 * points_resolution).ceil()).max(1.0);
        let n = 2.0 * half_points + 1.0;
        if n > ADAPTED_MAX_POINTS as f64 {
            return Err(LabError::InvalidInput(format!(
                "adapted meter would need {n} grid points (limit {ADAPTED_MAX_POINTS})"
            )));
        }
        Ok(Self {
            meter: MeterModel::new(n as usize, delta_b, g, hbar)?,
            sigma_b,
        })
    }

    pub fn sigma_phi(&self) -> f64 {
        self.meter.g() * self.sigma_b
    }

    /// Readout resolution `ħ / (2 σ_φ)` of the Gaussian pointer.
    pub fn resolution(&self) -> f64 {
        self.meter.hbar() / (2.0 * self.sigma_phi())
    }

    pub fn state(&self) -> Result<StateVector> {
        gaussian_meter_state(&self.meter, self.sigma_b)
    }
}

/// `exp(-i g A⊗B / ħ)` from a direct diagonalization of the joint generator.
pub fn interaction_unitary(observable: &Observable, meter: &MeterModel) -> Result<ComplexMatrix> {
    let generator = tensor_product(observable.matrix(), &meter.b_matrix())?.scale(meter.g());
    Ok(hermitian_eig(&generator)?.exp_phase(1.0, meter.hbar()))
}

fn check_joint_dimension(observable: &Observable, meter: &MeterModel) -> Result<()> {
    let requested = observable.dim().saturating_mul(meter.n());
    if requested > JOINT_DIMENSION_CAP {
        return Err(LabError::DimensionOverflow {
            requested,
            cap: JOINT_DIMENSION_CAP,
        });
    }
    Ok(())
}

/// `(B_b, U_back(g B_b))` for every meter eigenvalue.
pub fn backaction_decomposition(observable: &Observable, meter: &MeterModel) -> Result<Vec<(f64, ComplexMatrix)>> {
    check_joint_dimension(observable, meter)?;
    Ok(meter
        .b_values()
        .into_iter()
        .map(|b| (b, unitary_from_generator(observable, meter.g() * b, meter.hbar())))
        .collect())
}

/// `Σ_b U_b ⊗ |b⟩⟨b|` on the joint space.
pub fn assemble_backaction(blocks: &[(f64, ComplexMatrix)]) -> ComplexMatrix {
    let n = blocks.len();
    let d = blocks.first().map_or(0, |(_, u)| u.nrows());
    let mut joint = ComplexMatrix::zeros(d * n, d * n);
    for (b, (_, u)) in blocks.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                joint[(i * n + b, j * n + b)] = u[(i, j)];
            }
        }
    }
    joint
}

/// Diagonal of `⟨f|U_SM|ψ⟩` in the meter basis: `⟨f|U_back(g B_b)|ψ⟩`.
pub fn conditional_meter_operator(ctx: &BackActionContext, meter: &MeterModel) -> Result<Vec<C64>> {
    meter.check_system(ctx)?;
    Ok(meter.phi_values().into_iter().map(|phi| ctx.transition_amplitude(phi)).collect())
}

/// Polar split of [`conditional_meter_operator`]: magnitudes `√P` and the
/// unwrapped action across `b`.
pub fn conditional_meter_polar(ctx: &BackActionContext, meter: &MeterModel) -> Result<ActionCurve> {
    meter.check_system(ctx)?;
    meter.require_positive_coupling()?;
    ctx.action_and_probability(&meter.phi_values())
}

/// Real Gaussian meter state `∝ exp(-B_b² / (4σ_B²))`. Fails when the grid
/// edge keeps more than [`GAUSSIAN_EDGE_LIMIT`] of the peak amplitude.
pub fn gaussian_meter_state(meter: &MeterModel, sigma_b: f64) -> Result<StateVector> {
    let (state, edge_ratio) = gaussian_meter_state_truncated(meter, sigma_b)?;
    if edge_ratio >= GAUSSIAN_EDGE_LIMIT {
        return Err(LabError::GridTooNarrow {
            edge_ratio,
            limit: GAUSSIAN_EDGE_LIMIT,
        });
    }
    Ok(state)
}

/// Gaussian meter state without the truncation check; also returns the
/// edge-to-peak amplitude ratio.
pub fn gaussian_meter_state_truncated(meter: &MeterModel, sigma_b: f64) -> Result<(StateVector, f64)> {
    if !(sigma_b > 0.0) {
        return Err(LabError::NonPositiveUncertainty(sigma_b));
    }
    let raw: Vec<f64> = meter
        .b_values()
        .iter()
        .map(|b| (-b * b / (4.0 * sigma_b * sigma_b)).exp())
        .collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let edge = raw[0].max(raw[raw.len() - 1]);
    Ok((StateVector::from_real(&raw)?, edge / peak))
}

/// Homogeneous meter state, the Fourier-limit preparation.
pub fn uniform_meter_state(meter: &MeterModel) -> StateVector {
    StateVector::from_real(&vec![1.0; meter.n()]).expect("non-empty uniform state")
}

/// Fourier pointer readout with `⟨m|b⟩ = exp(i g A_m B_b / ħ)/√N`.
#[derive(Debug, Clone)]
pub struct ReadoutBasis {
    bras: ComplexMatrix,
    a_values: Vec<f64>,
    spacing: f64,
}

impl ReadoutBasis {
    pub fn n(&self) -> usize {
        self.a_values.len()
    }

    /// Pointer values `A_m`.
    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Row `m` holds `⟨m|b⟩`.
    pub fn bras(&self) -> &ComplexMatrix {
        &self.bras
    }

    pub fn overlap(&self, m: usize, b: usize) -> C64 {
        self.bras[(m, b)]
    }

    /// Readout states as kets `|m⟩`.
    pub fn states(&self) -> Vec<StateVector> {
        (0..self.n())
            .map(|m| {
                StateVector::normalized(self.bras.row(m).adjoint()).expect("readout rows are normalized")
            })
            .collect()
    }

    /// Amplitudes `⟨m|χ⟩` for every `m`.
    pub fn read(&self, chi: &ComplexVector) -> ComplexVector {
        &self.bras * chi
    }

    pub fn nearest_bin(&self, a: f64) -> usize {
        let c = 0.5 * (self.n() as f64 - 1.0);
        ((a / self.spacing + c).round().max(0.0) as usize).min(self.n() - 1)
    }
}

pub fn fourier_readout_basis(meter: &MeterModel) -> Result<ReadoutBasis> {
    let spacing = meter.pointer_spacing()?;
    let n = meter.n();
    let nf = n as f64;
    let c = 0.5 * (nf - 1.0);
    // g A_m B_b / ħ = 2π (m-c)(b-c) / N; the product is a multiple of 1/4 and
    // is reduced mod N exactly before taking the phase.
    let bras = ComplexMatrix::from_fn(n, n, |m, b| {
        let x = (m as f64 - c) * (b as f64 - c);
        let phase = 2.0 * PI * x.rem_euclid(nf) / nf;
        C64::from_polar(1.0 / nf.sqrt(), phase)
    });
    let a_values = (0..n).map(|m| spacing * (m as f64 - c)).collect();
    Ok(ReadoutBasis {
        bras,
        a_values,
        spacing,
    })
}

/// `Σ_b ⟨f|U_back(g B_b)|ψ⟩ ⟨m|b⟩ ⟨b|φ⟩_M`.
pub fn joint_amplitude(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
    m: usize,
) -> Result<C64> {
    let chi = conditional_meter_state(ctx, meter, phi_m)?;
    check_basis(meter, basis, m)?;
    Ok(basis.bras.row(m).iter().zip(chi.amplitudes.iter()).map(|(r, x)| r * x).sum())
}

fn check_basis(meter: &MeterModel, basis: &ReadoutBasis, m: usize) -> Result<()> {
    if basis.n() != meter.n() {
        return Err(LabError::DimensionMismatch(format!(
            "readout basis has {} states, meter grid has {}",
            basis.n(),
            meter.n()
        )));
    }
    if m >= basis.n() {
        return Err(LabError::InvalidInput(format!("readout index {m} out of range")));
    }
    Ok(())
}

/// `⟨f, m| U_SM |ψ, φ_M⟩` by explicit evolution on the joint space.
pub fn joint_amplitude_full(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
    m: usize,
) -> Result<C64> {
    check_basis(meter, basis, m)?;
    Ok(joint_amplitudes_full(ctx, meter, phi_m, basis)?[m])
}

/// [`joint_amplitude`] for every readout index.
pub fn joint_amplitudes(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
) -> Result<ComplexVector> {
    check_basis(meter, basis, 0)?;
    Ok(basis.read(&conditional_meter_state(ctx, meter, phi_m)?.amplitudes))
}

/// [`joint_amplitude_full`] for every readout index, sharing one joint
/// diagonalization.
pub fn joint_amplitudes_full(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
) -> Result<ComplexVector> {
    meter.check_system(ctx)?;
    meter.check_meter_state(phi_m)?;
    check_basis(meter, basis, 0)?;
    let u = interaction_unitary(ctx.observable(), meter)?;
    let output = u * ctx.psi().amplitudes().kronecker(phi_m.amplitudes());
    let n = meter.n();
    let f = ctx.f().amplitudes();
    // project the system factor onto ⟨f|, then read the meter
    let meter_part = ComplexVector::from_fn(n, |b, _| (0..ctx.dim()).map(|i| f[i].conj() * output[i * n + b]).sum());
    Ok(basis.read(&meter_part))
}

/// Unnormalized post-selected meter state `Σ_b ⟨f|U_back(g B_b)|ψ⟩⟨b|φ⟩_M |b⟩`.
#[derive(Debug, Clone)]
pub struct ConditionalMeterState {
    pub amplitudes: ComplexVector,
    /// Squared norm, the probability of the post-selection.
    pub norm_sqr: f64,
}

impl ConditionalMeterState {
    /// `|⟨b|χ⟩|² / ‖χ‖²`.
    pub fn b_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr() / self.norm_sqr).collect()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        StateVector::normalized(self.amplitudes.clone())
    }
}

pub fn conditional_meter_state(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
) -> Result<ConditionalMeterState> {
    meter.check_meter_state(phi_m)?;
    let entries = conditional_meter_operator(ctx, meter)?;
    let amplitudes = DVector::from_iterator(
        meter.n(),
        entries.iter().zip(phi_m.amplitudes().iter()).map(|(t, p)| t * p),
    );
    let norm_sqr = amplitudes.norm_squared();
    Ok(ConditionalMeterState { amplitudes, norm_sqr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutBin {
    pub pointer: f64,
    pub probability: f64,
}

/// Probabilities of the pointer values `A_m`.
#[derive(Debug, Clone, Serialize)]
pub struct ReadoutDistribution {
    pub bins: Vec<ReadoutBin>,
    pub post_selected: bool,
    pub total_mass: f64,
}

impl ReadoutDistribution {
    fn from_probabilities(basis: &ReadoutBasis, probabilities: Vec<f64>, post_selected: bool) -> Self {
        let total_mass = probabilities.iter().sum();
        let bins = basis
            .a_values()
            .iter()
            .zip(probabilities)
            .map(|(&pointer, probability)| ReadoutBin { pointer, probability })
            .collect();
        Self {
            bins,
            post_selected,
            total_mass,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.probability).collect()
    }

    /// Mass-weighted mean pointer value.
    pub fn mean(&self) -> Option<f64> {
        if !(self.total_mass > 0.0) {
            return None;
        }
        Some(self.bins.iter().map(|b| b.pointer * b.probability).sum::<f64>() / self.total_mass)
    }

    /// Mass in each Voronoi cell around the given (ascending or not) eigenvalues.
    pub fn peak_masses(&self, eigenvalues: &[f64]) -> Vec<f64> {
        let mut masses = vec![0.0; eigenvalues.len()];
        if eigenvalues.is_empty() {
            return masses;
        }
        for bin in &self.bins {
            let nearest = eigenvalues
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (bin.pointer - **a).abs().total_cmp(&(bin.pointer - **b).abs()))
                .map(|(k, _)| k)
                .unwrap();
            masses[nearest] += bin.probability;
        }
        masses
    }

    /// Mass of bins with `|A_m - center| <= half_width`.
    pub fn mass_within(&self, center: f64, half_width: f64) -> f64 {
        self.bins
            .iter()
            .filter(|b| (b.pointer - center).abs() <= half_width)
            .map(|b| b.probability)
            .sum()
    }
}

/// Pointer distribution conditioned on the post-selection `f`;
/// `total_mass` is the post-selection probability.
pub fn readout_distribution_post_selected(
    ctx: &BackActionContext,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
) -> Result<ReadoutDistribution> {
    check_basis(meter, basis, 0)?;
    let chi = conditional_meter_state(ctx, meter, phi_m)?;
    let probabilities = basis.read(&chi.amplitudes).iter().map(|z| z.norm_sqr()).collect();
    Ok(ReadoutDistribution::from_probabilities(basis, probabilities, true))
}

/// Pointer distribution summed over a complete orthonormal post-selection
/// basis (columns of `f_basis`, standard basis when `None`).
pub fn readout_distribution_unconditional(
    observable: &Observable,
    psi: &StateVector,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
    f_basis: Option<&ComplexMatrix>,
) -> Result<ReadoutDistribution> {
    let d = observable.dim();
    let identity = ComplexMatrix::identity(d, d);
    let f_basis = f_basis.unwrap_or(&identity);
    if f_basis.nrows() != d || f_basis.ncols() != d {
        return Err(LabError::DimensionMismatch(format!(
            "post-selection basis is {}x{}, system dimension is {d}",
            f_basis.nrows(),
            f_basis.ncols()
        )));
    }
    let mut probabilities = vec![0.0; meter.n()];
    for k in 0..d {
        let f = StateVector::from_column(f_basis, k)?;
        let ctx = BackActionContext::new(observable.clone(), psi.clone(), f, meter.hbar())?;
        let part = readout_distribution_post_selected(&ctx, meter, phi_m, basis)?;
        for (acc, bin) in probabilities.iter_mut().zip(&part.bins) {
            *acc += bin.probability;
        }
    }
    Ok(ReadoutDistribution::from_probabilities(basis, probabilities, false))
}

/// `⟨m| U_SM |φ⟩_M = Σ_b ⟨m|b⟩⟨b|φ⟩_M U_back(g B_b)`, an operator on the system.
pub fn conditional_system_operator(
    observable: &Observable,
    meter: &MeterModel,
    phi_m: &StateVector,
    basis: &ReadoutBasis,
    m: usize,
) -> Result<ComplexMatrix> {
    meter.check_meter_state(phi_m)?;
    check_basis(meter, basis, m)?;
    let d = observable.dim();
    let mut op = ComplexMatrix::zeros(d, d);
    for (b, (phi, amp)) in meter.phi_values().iter().zip(phi_m.amplitudes().iter()).enumerate() {
        let u = unitary_from_generator(observable, *phi, meter.hbar());
        op += u * (basis.overlap(m, b) * amp);
    }
    Ok(op)
}

fn check_window(observable: &Observable, meter: &MeterModel) -> Result<f64> {
    let half_window = meter.nyquist_half_window()?;
    for space in observable.spectrum() {
        let a = space.value;
        if !(a > -half_window && a <= half_window) {
            return Err(LabError::AliasingDetected {
                eigenvalue: a,
                half_window,
            });
        }
    }
    Ok(half_window)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorEmergencePoint {
    pub sigma_phi: f64,
    pub eigenvalue: f64,
    pub rank: usize,
    /// Pointer value of the bin nearest the eigenvalue.
    pub pointer: f64,
    /// `‖O_m / c − P_a‖` with `c = tr(P_a O_m) / rank`.
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorEmergenceReport {
    pub points: Vec<ProjectorEmergencePoint>,
}

impl ProjectorEmergenceReport {
    /// Largest projector distance per meter, in meter order.
    pub fn max_distance_per_meter(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in &self.points {
            match out.last_mut() {
                Some((s, d)) if *s == p.sigma_phi => *d = d.max(p.distance),
                _ => out.push((p.sigma_phi, p.distance)),
            }
        }
        out
    }
}

/// For each meter and each eigenvalue `A_a`, compares the system operator
/// read at the pointer bin nearest `A_a` with the eigenprojector.
pub fn projector_emergence_check(observable: &Observable, meters: &[GaussianMeter]) -> Result<ProjectorEmergenceReport> {
    let mut points = Vec::new();
    for gm in meters {
        check_window(observable, &gm.meter)?;
        let phi_m = gm.state()?;
        let basis = fourier_readout_basis(&gm.meter)?;
        for space in observable.spectrum() {
            let m = basis.nearest_bin(space.value);
            let op = conditional_system_operator(observable, &gm.meter, &phi_m, &basis, m)?;
            let c = (&space.projector * &op).trace() / space.rank as f64;
            let distance = operator_norm(&(op.map(|z| z / c) - &space.projector));
            points.push(ProjectorEmergencePoint {
                sigma_phi: gm.sigma_phi(),
                eigenvalue: space.value,
                rank: space.rank,
                pointer: basis.a_values()[m],
                distance,
            });
        }
    }
    Ok(ProjectorEmergenceReport { points })
}

/// Peak masses of one meter in an eigenvalue-emergence study.
#[derive(Debug, Clone, Serialize)]
pub struct EmergenceRow {
    pub sigma_phi: f64,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// Normalized mass in each eigenvalue's Voronoi cell.
    pub masses: Vec<f64>,
    /// Born weights `‖P_a ψ‖²` or post-selected weights `|⟨f|P_a|ψ⟩|²`, normalized.
    pub expected: Vec<f64>,
    /// `½ Σ_a |mass_a − expected_a|`.
    pub tv_error: f64,
    pub resolved: Vec<bool>,
}

/// Pointer-peak masses against Born (or post-selected) weights for a
/// sequence of Gaussian meters. `post_selection = None` gives the
/// unconditional distribution.
pub fn eigenvalue_emergence_study(
    observable: &Observable,
    psi: &StateVector,
    post_selection: Option<&StateVector>,
    meters: &[GaussianMeter],
) -> Result<Vec<EmergenceRow>> {
    let eigenvalues: Vec<f64> = observable.spectrum().iter().map(|s| s.value).collect();
    let raw_expected: Vec<f64> = observable
        .spectrum()
        .iter()
        .map(|s| {
            let projected = &s.projector * psi.amplitudes();
            match post_selection {
                None => projected.norm_squared(),
                Some(f) => f.amplitudes().dotc(&projected).norm_sqr(),
            }
        })
        .collect();
    let expected_total: f64 = raw_expected.iter().sum();
    if !(expected_total > 0.0) {
        return Err(LabError::EmptyDistribution);
    }
    let expected: Vec<f64> = raw_expected.iter().map(|w| w / expected_total).collect();

    meters
        .iter()
        .map(|gm| {
            check_window(observable, &gm.meter)?;
            let phi_m = gm.state()?;
            let basis = fourier_readout_basis(&gm.meter)?;
            let dist = match post_selection {
                None => readout_distribution_unconditional(observable, psi, &gm.meter, &phi_m, &basis, None)?,
                Some(f) => {
                    let ctx = BackActionContext::new(observable.clone(), psi.clone(), f.clone(), gm.meter.hbar())?;
                    readout_distribution_post_selected(&ctx, &gm.meter, &phi_m, &basis)?
                }
            };
            if !(dist.total_mass > 0.0) {
                return Err(LabError::EmptyDistribution);
            }
            let masses: Vec<f64> = dist
                .peak_masses(&eigenvalues)
                .iter()
                .map(|m| m / dist.total_mass)
                .collect();
            let tv_error = 0.5 * masses.iter().zip(&expected).map(|(m, e)| (m - e).abs()).sum::<f64>();
            let window = (2.0 * basis.spacing()).max(4.0 * gm.resolution());
            let resolved = eigenvalues
                .iter()
                .zip(&masses)
                .map(|(&a, &mass)| {
                    mass > 0.0 && dist.mass_within(a, window) / dist.total_mass >= RESOLVED_MASS_FRACTION * mass
                })
                .collect();
            Ok(EmergenceRow {
                sigma_phi: gm.sigma_phi(),
                n: gm.meter.n(),
                eigenvalues: eigenvalues.clone(),
                masses,
                expected: expected.clone(),
                tv_error,
                resolved,
            })
        })
        .collect()
}

/// True when every element is at most `slack` above its predecessor.
pub fn is_monotone_decreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli_z, random_hermitian, random_state, identity, unitarity_defect};

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    fn spin() -> Observable {
        Observable::new(pauli_z().scale(0.5)).unwrap()
    }

    #[test]
    fn grid_is_symmetric_and_ascending() {
        for n in [2, 5, 8] {
            let meter = MeterModel::new(n, 0.3, 1.0, 1.0).unwrap();
            let b = meter.b_values();
            assert!(b.windows(2).all(|w| w[1] > w[0]));
            for k in 0..n {
                assert!((b[k] + b[n - 1 - k]).abs() < 1e-15);
            }
        }
        assert!(MeterModel::new(1, 0.3, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_identity() {
        let a = random_hermitian(3, 1);
        let meter = MeterModel::new(4, 0.5, 0.0, 1.0).unwrap();
        let u = interaction_unitary(&a, &meter).unwrap();
        assert!(max_diff(&u, &identity(12)) < 1e-12);
        for (_, block) in backaction_decomposition(&a, &meter).unwrap() {
            assert!(max_diff(&block, &identity(3)) < 1e-12);
        }
    }

    #[test]
    fn diagonal_case_matches_elementwise_exponential() {
        let meter = MeterModel::new(2, 1.0, 0.8, 1.0).unwrap();
        let u = interaction_unitary(&spin(), &meter).unwrap();
        // A⊗B eigenvalues: (1/2)(-1/2), (1/2)(1/2), (-1/2)(-1/2), (-1/2)(1/2)
        let phases = [-0.25, 0.25, 0.25, -0.25];
        for (k, p) in phases.iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -0.8 * p)).norm() < 1e-12);
        }
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn random_interaction_is_unitary() {
        let meter = MeterModel::new(8, 0.4, 1.3, 1.0).unwrap();
        let u = interaction_unitary(&random_hermitian(4, 2), &meter).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn spin_meter_rotations() {
        let meter = MeterModel::new(2, 1.0, 0.6, 1.0).unwrap();
        let blocks = backaction_decomposition(&spin(), &meter).unwrap();
        // B = ∓1/2 → rotations by ∓g/2 about z
        for ((b, u), sign) in blocks.iter().zip([-1.0, 1.0]) {
            assert_eq!(*b, 0.5 * sign);
            let phi = 0.6 * 0.5 * sign;
            assert!((u[(0, 0)] - C64::from_polar(1.0, -phi / 2.0)).norm() < 1e-14);
            assert!((u[(1, 1)] - C64::from_polar(1.0, phi / 2.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn decomposition_reconstructs_interaction() {
        let a = random_hermitian(3, 8);
        let meter = MeterModel::new(16, 0.37, 0.9, 1.0).unwrap();
        let joint = interaction_unitary(&a, &meter).unwrap();
        let assembled = assemble_backaction(&backaction_decomposition(&a, &meter).unwrap());
        assert!(operator_norm(&(joint - assembled)) < 1e-10);
    }

    #[test]
    fn eigenstate_conditional_operator_is_a_phase_ramp() {
        let a = Observable::diagonal(&[0.7, -0.2]).unwrap();
        let f = random_state(2, 4);
        let psi = StateVector::basis(2, 0);
        let overlap = f.inner(&psi);
        let ctx = BackActionContext::new(a, psi, f, 1.0).unwrap();
        let meter = MeterModel::new(9, 0.25, 1.5, 1.0).unwrap();
        let entries = conditional_meter_operator(&ctx, &meter).unwrap();
        for (e, b) in entries.iter().zip(meter.b_values()) {
            assert!((e - overlap * C64::from_polar(1.0, -1.5 * b * 0.7)).norm() < 1e-14);
        }
    }

    #[test]
    fn orthogonal_postselection_gives_zero_operator() {
        // ψ = |0⟩ is an eigenstate, so its back-action orbit stays on |0⟩
        let a = Observable::diagonal(&[0.7, -0.2]).unwrap();
        let ctx = BackActionContext::new(a, StateVector::basis(2, 0), StateVector::basis(2, 1), 1.0).unwrap();
        let meter = MeterModel::new(5, 0.5, 1.0, 1.0).unwrap();
        assert!(conditional_meter_operator(&ctx, &meter).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(matches!(conditional_meter_polar(&ctx, &meter), Err(LabError::AmplitudeVanishes { .. })));
    }

    #[test]
    fn gaussian_state_moments() {
        let meter = MeterModel::new(64, 0.1, 1.0, 1.0).unwrap();
        // σ_B = δB would leave the edge at exp(-3.2²·100/4)... wide enough
        let s = gaussian_meter_state(&meter, 0.1).unwrap();
        let p: Vec<f64> = s.amplitudes().iter().map(|z| z.norm_sqr()).collect();
        let b = meter.b_values();
        let mean: f64 = p.iter().zip(&b).map(|(p, b)| p * b).sum();
        let var: f64 = p.iter().zip(&b).map(|(p, b)| p * b * b).sum::<f64>() - mean * mean;
        assert!(mean.abs() < 1e-14);
        assert!((var / 0.01 - 1.0).abs() < 0.02, "variance {var}");
        assert!(s.amplitudes().iter().all(|z| z.im == 0.0 && z.re > 0.0));
    }

    #[test]
    fn gaussian_truncation_is_checked() {
        let meter = MeterModel::new(16, 0.1, 1.0, 1.0).unwrap();
        assert!(matches!(gaussian_meter_state(&meter, 1.0), Err(LabError::GridTooNarrow { .. })));
        assert!(matches!(gaussian_meter_state(&meter, 0.0), Err(LabError::NonPositiveUncertainty(_))));
    }

    #[test]
    fn flat_limit_is_nearly_uniform() {
        let meter = MeterModel::new(16, 0.1, 1.0, 1.0).unwrap();
        let (s, edge) = gaussian_meter_state_truncated(&meter, 1e3).unwrap();
        let u = uniform_meter_state(&meter);
        let bound = 1.0 - edge;
        assert!(bound < 1e-6);
        assert!((s.amplitudes() - u.amplitudes()).norm() <= bound);
    }

    #[test]
    fn two_point_readout_is_unitary() {
        let meter = MeterModel::new(2, 1.0, 1.0, 1.0).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        assert!(unitarity_defect(basis.bras()) < 1e-15);
        assert!(basis.bras().iter().all(|z| (z.norm() - 0.5_f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn readout_gram_matrix() {
        let meter = MeterModel::new(16, 0.3, 0.7, 1.3).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        assert!(unitarity_defect(basis.bras()) < 1e-12);
        assert!(unitarity_defect(&basis.bras().transpose()) < 1e-12);
    }

    #[test]
    fn readout_phase_rule() {
        let meter = MeterModel::new(10, 0.3, 0.7, 1.3).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        let b = meter.b_values();
        for m in 0..10 {
            for k in 0..10 {
                let expected = C64::from_polar(1.0 / 10f64.sqrt(), 0.7 * basis.a_values()[m] * b[k] / 1.3);
                assert!((basis.overlap(m, k) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pointer_grid_spans_the_nyquist_window() {
        let meter = MeterModel::new(16, 0.25, 2.0, 1.0).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        let w = meter.nyquist_half_window().unwrap();
        assert!((basis.spacing() * 16.0 - 2.0 * w).abs() < 1e-12);
        assert!(basis.a_values().iter().all(|&a| a > -w && a <= w));
        assert!(matches!(fourier_readout_basis(&MeterModel::new(4, 1.0, 0.0, 1.0).unwrap()), Err(LabError::InvalidCoupling(_))));
    }

    #[test]
    fn joint_amplitude_factorizes_without_coupling() {
        let a = random_hermitian(3, 3);
        let (psi, f) = (random_state(3, 4), random_state(3, 5));
        let overlap = f.inner(&psi);
        let ctx = BackActionContext::new(a, psi, f, 1.0).unwrap();
        let meter = MeterModel::new(6, 0.5, 0.0, 1.0).unwrap();
        let basis = fourier_readout_basis(&MeterModel::new(6, 0.5, 1.0, 1.0).unwrap()).unwrap();
        let phi_m = random_state(6, 6);
        let states = basis.states();
        for m in 0..6 {
            let expected = overlap * states[m].inner(&phi_m);
            assert!((joint_amplitude(&ctx, &meter, &phi_m, &basis, m).unwrap() - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenstate_joint_amplitude_is_a_shifted_meter_overlap() {
        let a = Observable::diagonal(&[0.6, -0.4]).unwrap();
        let f = random_state(2, 2);
        let psi = StateVector::basis(2, 0);
        let overlap = f.inner(&psi);
        let ctx = BackActionContext::new(a, psi, f, 1.0).unwrap();
        let meter = MeterModel::new(8, 0.4, 1.1, 1.0).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        let phi_m = random_state(8, 3);
        for m in 0..8 {
            let shifted: C64 = (0..8)
                .map(|b| basis.overlap(m, b) * C64::from_polar(1.0, -1.1 * meter.b_value(b) * 0.6) * phi_m.amplitudes()[b])
                .sum();
            assert!((joint_amplitude(&ctx, &meter, &phi_m, &basis, m).unwrap() - overlap * shifted).norm() < 1e-14);
        }
    }

    #[test]
    fn joint_amplitude_matches_full_evolution() {
        let a = random_hermitian(3, 40);
        let ctx = BackActionContext::new(a, random_state(3, 41), random_state(3, 42), 1.0).unwrap();
        let meter = MeterModel::new(8, 0.45, 1.2, 1.0).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        let phi_m = random_state(8, 43);
        for m in 0..8 {
            let fast = joint_amplitude(&ctx, &meter, &phi_m, &basis, m).unwrap();
            let full = joint_amplitude_full(&ctx, &meter, &phi_m, &basis, m).unwrap();
            assert!((fast - full).norm() < 1e-10);
        }
    }

    #[test]
    fn conditional_state_norm_and_b_basis_probabilities() {
        let a = random_hermitian(3, 50);
        let ctx = BackActionContext::new(a, random_state(3, 51), random_state(3, 52), 1.0).unwrap();
        let meter = MeterModel::new(12, 0.3, 1.0, 1.0).unwrap();
        let phi_m = gaussian_meter_state_truncated(&meter, 0.8).unwrap().0;
        let chi = conditional_meter_state(&ctx, &meter, &phi_m).unwrap();
        let basis = fourier_readout_basis(&meter).unwrap();
        let dist = readout_distribution_post_selected(&ctx, &meter, &phi_m, &basis).unwrap();
        assert!((dist.total_mass - chi.norm_sqr).abs() < 1e-12);
        let read = basis.read(&chi.amplitudes);
        for (bin, z) in dist.bins.iter().zip(read.iter()) {
            assert!((bin.probability - z.norm_sqr()).abs() < 1e-12);
        }
        for ((p, b), amp) in chi.b_probabilities().iter().zip(meter.phi_values()).zip(phi_m.amplitudes().iter()) {
            let expected = amp.norm_sqr() * ctx.probability(b) / chi.norm_sqr;
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn sg_up_conditional_state_is_a_phase_ramp() {
        let ctx = BackActionContext::new(spin(), StateVector::from_real(&[1.0, 1.0]).unwrap(), StateVector::basis(2, 0), 1.0).unwrap();
        let meter = MeterModel::new(9, 0.5, 1.0, 1.0).unwrap();
        let phi_m = gaussian_meter_state_truncated(&meter, 1.0).unwrap().0;
        let chi = conditional_meter_state(&ctx, &meter, &phi_m).unwrap();
        for (b, (x, p)) in meter.b_values().iter().zip(chi.amplitudes.iter().zip(phi_m.amplitudes().iter())) {
            let expected = p * C64::from_polar(0.5_f64.sqrt(), -b / 2.0);
            assert!((x - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn unconditional_distribution_of_up_state_peaks_at_half() {
        let gm = GaussianMeter::adapted(10.0, 1.0, 1.0, 2.0).unwrap();
        let phi_m = gm.state().unwrap();
        let basis = fourier_readout_basis(&gm.meter).unwrap();
        let dist = readout_distribution_unconditional(&spin(), &StateVector::basis(2, 0), &gm.meter, &phi_m, &basis, None).unwrap();
        assert!((dist.total_mass - 1.0).abs() < 1e-12);
        assert!(dist.mass_within(0.5, 0.25) > 0.999);
        assert!((dist.mean().unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn projector_emergence_degenerate() {
        let a = Observable::diagonal(&[0.5, 0.5, -0.5]).unwrap();
        let meters: Vec<GaussianMeter> = [2.0, 5.0, 10.0]
            .iter()
            .map(|&s| GaussianMeter::adapted(s, 1.0, 1.0, 2.0).unwrap())
            .collect();
        let report = projector_emergence_check(&a, &meters).unwrap();
        let upper: Vec<&ProjectorEmergencePoint> = report.points.iter().filter(|p| p.eigenvalue > 0.0).collect();
        assert!(upper.iter().all(|p| p.rank == 2));
        assert!(upper.last().unwrap().distance < 1e-8);
        let d = report.max_distance_per_meter();
        assert!(is_monotone_decreasing(&d.iter().map(|x| x.1).collect::<Vec<_>>(), 1e-12));
    }

    #[test]
    fn aliasing_is_detected() {
        let a = Observable::diagonal(&[3.0, -0.5]).unwrap();
        let gm = GaussianMeter::adapted(2.0, 1.0, 1.0, 2.0).unwrap();
        assert!(matches!(projector_emergence_check(&a, &[gm]), Err(LabError::AliasingDetected { .. })));
    }

    #[test]
    fn voronoi_peak_masses() {
        let dist = ReadoutDistribution {
            bins: vec![
                ReadoutBin { pointer: -1.0, probability: 0.2 },
                ReadoutBin { pointer: -0.1, probability: 0.1 },
                ReadoutBin { pointer: 0.4, probability: 0.7 },
            ],
            post_selected: false,
            total_mass: 1.0,
        };
        assert_eq!(dist.peak_masses(&[-0.5, 0.5]), vec![0.30000000000000004, 0.7]);
    }
}
