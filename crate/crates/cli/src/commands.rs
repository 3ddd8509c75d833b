use std::path::PathBuf;
use std::str::FromStr;

use backaction_lab::backaction::DEFAULT_FD_STEP;
use backaction_lab::meter::{eigenvalue_emergence_study, projector_emergence_check, GaussianMeter};
use backaction_lab::quantum::{random_hermitian_with, random_state_with, seeded_rng};
use backaction_lab::scenarios::{
    crosscheck_sg, fp_action, fp_curvature, fp_min_fluctuation, fp_position, sg_action, sg_action_curvature,
    sg_amplitude, sg_probability, sg_weak_value, FreeParticleScenario, SternGerlachScenario,
};
use backaction_lab::uncertainty::{simulate_gaussian_tradeoff, TradeoffReport};
use backaction_lab::verify::{emergence_meter, run_suite, Suite, VerifyConfig, VerifyReport};
use backaction_lab::{BackActionContext, LabError, StateVector, C64};
use clap::Args;
use log::info;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{require, require_amp_tol, require_positive, ConfigFile};
use crate::error::{CliError, CliResult};
use crate::output::{col, Cell, Format, Table};

/// Settings shared by every subcommand after merging flags, file and defaults.
pub struct Global {
    pub file: ConfigFile,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub hbar: f64,
    pub pool: ThreadPool,
}

impl Global {
    fn format(&self, default: Format) -> CliResult<Format> {
        self.file.resolve("format", self.format, default)
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub contents: String,
    pub passed: bool,
}

impl Outcome {
    fn table(table: &Table, format: Format) -> Self {
        Self {
            contents: table.render(format),
            passed: true,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn range(file: &ConfigFile, keys: (&str, &str, &str), cli: (Option<f64>, Option<f64>, Option<usize>), default: (f64, f64, usize)) -> CliResult<Vec<f64>> {
    let lo = file.resolve(keys.0, cli.0, default.0)?;
    let hi = file.resolve(keys.1, cli.1, default.1)?;
    let n = file.resolve(keys.2, cli.2, default.2)?;
    require(lo.is_finite() && hi.is_finite(), || format!("`{}`/`{}` must be finite", keys.0, keys.1))?;
    require(n >= 1, || format!("`{}` must be at least 1", keys.2))?;
    require(hi > lo || (n == 1 && hi == lo), || format!("empty range: `{}` = {lo}, `{}` = {hi}", keys.0, keys.1))?;
    Ok(linspace(lo, hi, n))
}

fn config_err(e: LabError) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum System {
    SternGerlach,
    Random,
    Eigenstate,
    FreeParticle,
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sg" | "sterngerlach" => Ok(System::SternGerlach),
            "random" => Ok(System::Random),
            "eigenstate" => Ok(System::Eigenstate),
            "freeparticle" => Ok(System::FreeParticle),
            other => Err(format!("unknown system `{other}` (sg, random, eigenstate, freeparticle)")),
        }
    }
}

fn sg_scenario(file: &ConfigFile, c_up: Option<f64>, c_down: Option<f64>) -> CliResult<SternGerlachScenario> {
    let up = file.resolve("c_up", c_up, 0.8)?;
    let down = file.resolve("c_down", c_down, -0.6)?;
    SternGerlachScenario::new(up, down).map_err(config_err)
}

/// Generic context for a named finite-dimensional system.
fn finite_system(
    g: &Global,
    system: System,
    c_up: Option<f64>,
    c_down: Option<f64>,
    dim: Option<usize>,
) -> CliResult<BackActionContext> {
    let dim = g.file.resolve("dim", dim, 3)?;
    require(dim >= 1 && dim <= 64, || format!("`dim` must lie in [1, 64], got {dim}"))?;
    let mut rng = seeded_rng(g.seed);
    let ctx = match system {
        System::SternGerlach => sg_scenario(&g.file, c_up, c_down)?.context(g.hbar)?,
        System::Random => {
            let a = random_hermitian_with(&mut rng, dim).scaled(g.hbar)?;
            let psi = random_state_with(&mut rng, dim);
            let f = random_state_with(&mut rng, dim);
            BackActionContext::new(a, psi, f, g.hbar)?
        }
        System::Eigenstate => {
            let a = random_hermitian_with(&mut rng, dim).scaled(g.hbar)?;
            let psi = StateVector::from_column(&a.decomposition().eigenvectors, 0)?;
            let f = random_state_with(&mut rng, dim);
            BackActionContext::new(a, psi, f, g.hbar)?
        }
        System::FreeParticle => {
            return Err(CliError::Config("the free particle has no finite-dimensional engine".into()))
        }
    };
    Ok(ctx)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smallest transition amplitude treated as nonzero.
    #[arg(long)]
    amp_tol: Option<f64>,
    /// Run only these suites (comma-separated names).
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    /// Deliberately break one check to exercise the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

pub fn verify(g: &Global, args: &VerifyArgs) -> CliResult<Outcome> {
    let amp_tol = g.file.resolve("amp_tol", args.amp_tol, VerifyConfig::default().amp_tol)?;
    require_amp_tol(amp_tol)?;
    let names: Vec<String> = match (&args.suites, g.file.raw("suites")) {
        (Some(list), _) => list.clone(),
        (None, Some(text)) => text.split(',').map(|s| s.trim().to_string()).collect(),
        (None, None) => Suite::ALL.iter().map(|s| s.name().to_string()).collect(),
    };
    let suites = names
        .iter()
        .map(|n| Suite::from_name(n).ok_or_else(|| CliError::Config(format!("unknown suite `{n}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    let config = VerifyConfig {
        seed: g.seed,
        hbar: g.hbar,
        amp_tol,
        inject_fault: args.inject_fault,
    };
    config.validate().map_err(config_err)?;
    let reports: Vec<_> = g.pool.install(|| suites.par_iter().map(|&s| run_suite(s, &config)).collect());
    for r in &reports {
        let status = if r.passed { "pass" } else { "FAIL" };
        eprintln!("suite {} {}: {status}", r.number, r.name);
        if let Some(e) = &r.error {
            eprintln!("  error: {e}");
        }
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("  {}: {:e} exceeds {:e}", c.name, c.value, c.bound);
        }
    }
    let report = VerifyReport::from_suites(&config, reports);
    let contents = match g.format(Format::Json)? {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut table = Table::new(
                format!("verification report, seed {}, hbar {}", config.seed, config.hbar),
                vec![
                    col("suite", "suite name"),
                    col("check", "quantity checked"),
                    col("value", "measured value"),
                    col("bound", "largest accepted value"),
                    col("passed", "value <= bound"),
                ],
            );
            for r in &report.suites {
                for c in &r.checks {
                    table.push(vec![
                        Cell::Text(r.name.clone()),
                        Cell::Text(c.name.clone()),
                        Cell::Num(c.value),
                        Cell::Num(c.bound),
                        Cell::Bool(c.passed),
                    ]);
                }
                if let Some(e) = &r.error {
                    table.push(vec![Cell::Text(r.name.clone()), Cell::Text(e.clone()), Cell::Empty, Cell::Empty, Cell::Bool(false)]);
                }
            }
            table.to_csv()
        }
    };
    Ok(Outcome {
        contents,
        passed: report.passed,
    })
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// sg, random or eigenstate.
    #[arg(long)]
    system: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c_up: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_down: Option<f64>,
    /// Dimension of random and eigenstate systems.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    amp_tol: Option<f64>,
    /// Finite-difference step of the slope check.
    #[arg(long)]
    fd_step: Option<f64>,
}

struct SweepPoint {
    probability: f64,
    weak: Option<(C64, f64)>,
}

pub fn sweep_weakvalue(g: &Global, args: &SweepArgs) -> CliResult<Outcome> {
    let system: System = g.file.resolve("system", args.system.clone(), "sg".to_string())?.parse().map_err(CliError::Config)?;
    let grid = range(&g.file, ("phi_min", "phi_max", "points"), (args.phi_min, args.phi_max, args.points), (-3.0, 3.0, 601))?;
    let amp_tol = g.file.resolve("amp_tol", args.amp_tol, 1e-10)?;
    require_amp_tol(amp_tol)?;
    let h = g.file.resolve("fd_step", args.fd_step, DEFAULT_FD_STEP)?;
    require_positive("fd_step", h)?;
    let format = g.format(Format::Csv)?;
    let ctx = finite_system(g, system, args.c_up, args.c_down, args.dim)?.with_amp_tol(amp_tol).map_err(config_err)?;
    info!("sweeping {} points", grid.len());

    let points: Vec<SweepPoint> = g.pool.install(|| {
        grid.par_iter()
            .map(|&phi| {
                let probability = ctx.probability(phi);
                let weak = match (ctx.weak_value(phi), ctx.hj_residual(phi, h)) {
                    (Ok(w), Ok(r)) => Some((w, r)),
                    _ => None,
                };
                SweepPoint { probability, weak }
            })
            .collect()
    });

    // the action is unwrapped along each contiguous run of evaluable points
    let mut action = vec![None; grid.len()];
    let mut start = 0;
    while start < grid.len() {
        if points[start].weak.is_none() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < grid.len() && points[end].weak.is_some() {
            end += 1;
        }
        let curve = ctx.action_and_probability(&grid[start..end])?;
        for (k, s) in curve.s_values.iter().enumerate() {
            action[start + k] = Some(*s);
        }
        start = end;
    }

    let mut table = Table::new(
        "weak value sweep along the back-action parameter",
        vec![
            col("phi", "back-action parameter"),
            col("action", "S = hbar * unwrapped Arg <f|exp(-i phi A / hbar)|psi>"),
            col("probability", "P = |<f|exp(-i phi A / hbar)|psi>|^2"),
            col("re_weak_value", "Re <f|A U|psi> / <f|U|psi>"),
            col("im_weak_value", "Im <f|A U|psi> / <f|U|psi>"),
            col("hj_residual", "|-dS/dphi - Re W| with a Richardson-extrapolated central difference"),
            col("status", "ok, or skipped where the amplitude falls below amp_tol"),
        ],
    );
    for ((phi, p), s) in grid.iter().zip(&points).zip(&action) {
        let row = match (p.weak, s) {
            (Some((w, r)), Some(s)) => vec![
                Cell::Num(*phi),
                Cell::Num(*s),
                Cell::Num(p.probability),
                Cell::Num(w.re),
                Cell::Num(w.im),
                Cell::Num(r),
                Cell::Text("ok".into()),
            ],
            _ => vec![
                Cell::Num(*phi),
                Cell::Empty,
                Cell::Num(p.probability),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text("skipped".into()),
            ],
        };
        table.push(row);
    }
    Ok(Outcome::table(&table, format))
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    /// sg, eigenstate or freeparticle.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    c_up: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_down: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Mean back-action around which the meter is centered.
    #[arg(long, allow_hyphen_values = true)]
    phi_bar: Option<f64>,
    /// Meter coupling.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x2: Option<f64>,
}

fn free_particle(g: &Global, mass: Option<f64>, time: Option<f64>, x1: Option<f64>, x2: Option<f64>) -> CliResult<FreeParticleScenario> {
    FreeParticleScenario::new(
        g.file.resolve("mass", mass, 0.25)?,
        g.file.resolve("time", time, 1.0)?,
        g.file.resolve("x1", x1, 0.0)?,
        g.file.resolve("x2", x2, 0.0)?,
    )
    .map_err(config_err)
}

pub fn tradeoff(g: &Global, args: &TradeoffArgs) -> CliResult<Outcome> {
    let system: System = g.file.resolve("system", args.system.clone(), "sg".to_string())?.parse().map_err(CliError::Config)?;
    let widths = range(&g.file, ("sigma_min", "sigma_max", "points"), (args.sigma_min, args.sigma_max, args.points), (0.05, 0.3, 11))?;
    require(widths[0] > 0.0, || "`sigma_min` must be positive".into())?;
    let format = g.format(Format::Csv)?;

    let reports: Vec<TradeoffReport> = if system == System::FreeParticle {
        let s = free_particle(g, args.mass, args.time, args.x1, args.x2)?;
        widths
            .iter()
            .map(|&w| TradeoffReport::from_curvature(fp_curvature(&s), w, g.hbar))
            .collect::<Result<_, _>>()?
    } else {
        let phi_bar = g.file.resolve("phi_bar", args.phi_bar, 0.42)?;
        let coupling = g.file.resolve("g", args.g, 1.0)?;
        require_positive("g", coupling)?;
        let ctx = finite_system(g, system, args.c_up, args.c_down, args.dim)?;
        g.pool
            .install(|| widths.par_iter().map(|&w| simulate_gaussian_tradeoff(&ctx, phi_bar, w, coupling)).collect::<Result<_, _>>())?
    };

    let mut table = Table::new(
        "readout fluctuation against back-action spread",
        vec![
            col("sigma_phi", "requested Gaussian back-action width"),
            col("delta_phi", "back-action spread g * std(B) on the meter grid"),
            col("delta_a_s", "intrinsic fluctuation |d2S/dphi2| * delta_phi"),
            col("delta_a_m", "resolution bound hbar / (2 delta_phi)"),
            col("delta_a", "sqrt(delta_a_s^2 + delta_a_m^2)"),
            col("floor", "sqrt(hbar |d2S/dphi2|)"),
            col("empirical", "RMS pointer deviation around Re W in the simulated readout"),
        ],
    );
    for (w, r) in widths.iter().zip(&reports) {
        table.push(vec![
            Cell::Num(*w),
            Cell::Num(r.delta_phi),
            Cell::Num(r.delta_a_s),
            Cell::Num(r.delta_a_m),
            Cell::Num(r.delta_a_total),
            Cell::Num(r.bound_floor),
            r.empirical_delta_a.map_or(Cell::Empty, Cell::Num),
        ]);
    }
    Ok(Outcome::table(&table, format))
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    /// Gaussian back-action widths (comma-separated).
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<f64>>,
    /// Weight of |up> in the initial state.
    #[arg(long)]
    p_up: Option<f64>,
    /// Condition the readout on a post-selected spin state.
    #[arg(long)]
    post_select: bool,
    /// Polar angle of the post-selected spin.
    #[arg(long, allow_hyphen_values = true)]
    f_theta: Option<f64>,
    /// Relative phase of the post-selected spin.
    #[arg(long, allow_hyphen_values = true)]
    f_phase: Option<f64>,
    /// Pointer half window; chosen automatically when absent.
    #[arg(long)]
    half_window: Option<f64>,
}

pub fn fourier_limit(g: &Global, args: &FourierArgs) -> CliResult<Outcome> {
    let widths = g.file.resolve_list("widths", args.widths.clone(), &[2.0, 5.0, 10.0, 20.0])?;
    require(!widths.is_empty(), || "`widths` must not be empty".into())?;
    for &w in &widths {
        require_positive("widths", w)?;
    }
    let p_up = g.file.resolve("p_up", args.p_up, 0.3)?;
    require((0.0..=1.0).contains(&p_up), || format!("`p_up` must lie in [0, 1], got {p_up}"))?;
    let post_select = args.post_select || g.file.resolve("post_select", None, false)?;
    let theta = g.file.resolve("f_theta", args.f_theta, 2.0 * 0.6_f64.acos())?;
    let chi = g.file.resolve("f_phase", args.f_phase, 0.7)?;
    let half_window = g.file.resolve_opt("half_window", args.half_window)?;
    if let Some(w) = half_window {
        require_positive("half_window", w)?;
    }
    let format = g.format(Format::Csv)?;

    let hbar = g.hbar;
    let a = SternGerlachScenario::observable().scaled(hbar)?;
    let psi = StateVector::from_real(&[p_up.sqrt(), (1.0 - p_up).sqrt()])?;
    let f = StateVector::from_complex(&[C64::new((0.5 * theta).cos(), 0.0), C64::from_polar((0.5 * theta).sin(), chi)])?;
    let meters = widths
        .iter()
        .map(|&w| match half_window {
            Some(hw) => GaussianMeter::adapted(w, 1.0, hbar, hw),
            None => emergence_meter(w, hbar, 0.5 * hbar),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = g.pool.install(|| {
        meters
            .par_iter()
            .map(|gm| {
                let study = eigenvalue_emergence_study(&a, &psi, post_select.then_some(&f), std::slice::from_ref(gm))?;
                let projector = projector_emergence_check(&a, std::slice::from_ref(gm))?;
                let distance = projector.points.iter().fold(0.0_f64, |acc, p| acc.max(p.distance));
                Ok((study.into_iter().next().expect("one meter"), distance))
            })
            .collect::<Result<Vec<_>, LabError>>()
    })?;

    let mut table = Table::new(
        if post_select {
            "post-selected pointer peaks as the back-action spread grows"
        } else {
            "unconditional pointer peaks as the back-action spread grows"
        },
        vec![
            col("sigma_phi", "Gaussian back-action width"),
            col("grid_points", "meter grid size N"),
            col("mass_down", "normalized pointer mass nearest -hbar/2"),
            col("mass_up", "normalized pointer mass nearest +hbar/2"),
            col("expected_down", "|<down|psi>|^2, or |<f|down><down|psi>|^2 normalized when post-selected"),
            col("expected_up", "|<up|psi>|^2, or |<f|up><up|psi>|^2 normalized when post-selected"),
            col("tv_error", "half the summed absolute mass error"),
            col("projector_distance", "largest ||O_m / c - P_a|| over eigenvalues, O_m read at the bin nearest A_a"),
            col("resolved", "every peak keeps 99.9% of its mass within max(2 dA, 4 hbar / (2 sigma_phi))"),
        ],
    );
    for (row, distance) in &rows {
        table.push(vec![
            Cell::Num(row.sigma_phi),
            Cell::Int(row.n as u64),
            Cell::Num(row.masses[0]),
            Cell::Num(row.masses[1]),
            Cell::Num(row.expected[0]),
            Cell::Num(row.expected[1]),
            Cell::Num(row.tv_error),
            Cell::Num(*distance),
            Cell::Bool(row.resolved.iter().all(|&r| r)),
        ]);
    }
    Ok(Outcome::table(&table, format))
}

#[derive(Debug, Args)]
pub struct SgArgs {
    #[arg(long, allow_hyphen_values = true)]
    c_up: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_down: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    amp_tol: Option<f64>,
}

pub fn sterngerlach(g: &Global, args: &SgArgs) -> CliResult<Outcome> {
    let s = sg_scenario(&g.file, args.c_up, args.c_down)?;
    let grid = range(&g.file, ("phi_min", "phi_max", "points"), (args.phi_min, args.phi_max, args.points), (-3.0, 3.0, 601))?;
    let amp_tol = g.file.resolve("amp_tol", args.amp_tol, 1e-10)?;
    require_amp_tol(amp_tol)?;
    let format = g.format(Format::Csv)?;
    let hbar = g.hbar;

    let check = crosscheck_sg(&s, &grid, hbar, amp_tol)?;
    info!("generic engine deviation {:e}, {} points skipped", check.max_residual(), check.skipped.len());
    if !(check.max_residual() < 1e-9) {
        return Err(CliError::Failed(format!(
            "generic engine deviates from the closed forms by {:e}",
            check.max_residual()
        )));
    }

    let mut table = Table::new(
        format!("spin-1/2 deflection, f = {} |up> + {} |down>", s.c_up, s.c_down),
        vec![
            col("phi", "back-action parameter g z"),
            col("re_amplitude", "Re (c_up e^{-i phi/2} + c_down e^{i phi/2}) / sqrt(2)"),
            col("im_amplitude", "Im (c_up e^{-i phi/2} + c_down e^{i phi/2}) / sqrt(2)"),
            col("probability", "(1 + 2 c_up c_down cos phi) / 2"),
            col("action", "-hbar arctan(W0 tan(phi/2)), continued across |phi| = pi"),
            col("re_weak_value", "(hbar/2) W0 / (cos^2(phi/2) + W0^2 sin^2(phi/2)), W0 = (c_up - c_down)/(c_up + c_down)"),
            col("curvature", "d2S/dphi2 = -d Re W / dphi"),
        ],
    );
    for &phi in &grid {
        let amp = sg_amplitude(&s, phi);
        table.push(vec![
            Cell::Num(phi),
            Cell::Num(amp.re),
            Cell::Num(amp.im),
            Cell::Num(sg_probability(&s, phi)),
            Cell::Num(sg_action(&s, phi, hbar)?),
            Cell::Num(sg_weak_value(&s, phi, hbar)?),
            Cell::Num(sg_action_curvature(&s, phi, hbar)?),
        ]);
    }
    Ok(Outcome::table(&table, format))
}

#[derive(Debug, Args)]
pub struct FpArgs {
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

pub fn freeparticle(g: &Global, args: &FpArgs) -> CliResult<Outcome> {
    let s = free_particle(g, args.mass, args.time, args.x1, args.x2)?;
    let grid = range(&g.file, ("p_min", "p_max", "points"), (args.p_min, args.p_max, args.points), (-3.0, 3.0, 61))?;
    let format = g.format(Format::Csv)?;
    let hbar = g.hbar;
    let h = 1e-3;

    let mut table = Table::new(
        format!("free particle, m = {}, t = {}, x1 = {}, x2 = {}", s.m, s.t, s.x1, s.x2),
        vec![
            col("p", "momentum kick"),
            col("action", "m(x1^2 + x2^2)/t - (t/8m)(p + 2m(x1 + x2)/t)^2 - pi hbar/4"),
            col("position", "(x1 + x2)/2 + t p / (4m)"),
            col("slope", "-dS/dp by central difference, step 1e-3"),
            col("curvature", "d2S/dp2 = -t/(4m)"),
            col("min_fluctuation", "sqrt(hbar t / (4m))"),
        ],
    );
    for &p in &grid {
        let slope = -(fp_action(&s, p + h, hbar) - fp_action(&s, p - h, hbar)) / (2.0 * h);
        table.push(vec![
            Cell::Num(p),
            Cell::Num(fp_action(&s, p, hbar)),
            Cell::Num(fp_position(&s, p)),
            Cell::Num(slope),
            Cell::Num(fp_curvature(&s)),
            Cell::Num(fp_min_fluctuation(&s, hbar)),
        ]);
    }
    Ok(Outcome::table(&table, format))
}
