//! One function per command; each returns its results, checks and table.

use serde::Serialize;
use serde_json::{json, Value};
use vdwlab::dimer::{log_spaced, scan_and_fit, DimerConfig, DimerSetup, PowerFit};
use vdwlab::lattice::{GridSpec, WaveFunction};
use vdwlab::multipole::{identity_check, random_neutral_pairs, remainder_check};
use vdwlab::operators::{kernel_check, localization_scan, AtomModel};
use vdwlab::spectra::{fit_decay, ionization_ladder, solve_sector_with, weyl_probe};
use vdwlab::special::fit_line;
use vdwlab::vdw::{
    compute_a3, dipole_coupling_matrix, orthogonality_battery, pair_report, product_hamiltonian_matrix, rspt_oracle,
    triangle_report, AtomBasis, PairGeometry, ProductBasis, TriangleGeometry, VdwReport,
};
use vdwlab::Complex64;

use crate::config::{Command, ModelKind, RunConfig};
use crate::report::{Check, Table};
use crate::CliError;

/// Largest product dimension handed to the dense perturbation oracle.
pub const MAX_ORACLE_DIM: usize = 4096;
/// Separation at which the dense oracle evaluates the perturbation series.
pub const ORACLE_SCALE: f64 = 10.0;

/// Residual bound every reported eigenpair must meet.
pub const EIGEN_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub results: Value,
    pub checks: Vec<Check>,
    pub table: Table,
    /// File suffix and state for each requested lattice dump.
    pub dumps: Vec<(String, WaveFunction)>,
}

impl CommandOutput {
    fn new(results: impl Serialize, checks: Vec<Check>, table: Table) -> Result<Self, CliError> {
        let results = serde_json::to_value(results).map_err(|e| CliError::Computation(e.to_string()))?;
        Ok(Self { results, checks, table, dumps: Vec::new() })
    }
}

fn computation(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

pub fn execute(config: &RunConfig) -> Result<CommandOutput, CliError> {
    match config.command {
        Command::AtomSolve => atom_solve(config),
        Command::VdwC6 | Command::VdwC8 => vdw_pair(config),
        Command::VdwC9 => vdw_triangle(config),
        Command::DimerScan => dimer_scan(config),
        Command::VerifyKernel => verify_kernel(config),
        Command::VerifyLocalization => verify_localization(config),
        Command::VerifyMultipole => verify_multipole(config),
        Command::VerifyOrthogonality => verify_orthogonality(config),
        Command::VerifyDecay => verify_decay(config),
        Command::VerifyIonization => verify_ionization(config),
    }
}

fn residual_check(residuals: &[f64]) -> Check {
    Check::at_most("eigenpair-residuals", residuals.iter().cloned().fold(0.0, f64::max), EIGEN_RESIDUAL_LIMIT)
}

fn atom_solve(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let atom = config.atom_model()?;
    let grid = config.grid()?;
    let slice = solve_sector_with(&atom, &grid, config.sector.sector(), config.n_states, &config.solver())
        .map_err(computation)?;
    let mut table = Table::new(&["state", "energy", "residual"]);
    for (i, (e, r)) in slice.eigenvalues.iter().zip(&slice.residuals).enumerate() {
        table.push(vec![i.into(), (*e).into(), (*r).into()]);
    }
    let checks = vec![
        residual_check(&slice.residuals),
        Check::holds("energies-ascending", slice.eigenvalues.windows(2).all(|w| w[0] <= w[1])),
        Check::holds("positive-gap", slice.gap > 0.0),
    ];
    let results = json!({
        "energies": slice.eigenvalues,
        "residuals": slice.residuals,
        "gap": slice.gap,
        "matvecs": slice.matvecs,
        "sector": slice.sector.label(),
        "spacing": grid.spacing(),
    });
    let mut out = CommandOutput::new(results, checks, table)?;
    if config.dump {
        out.dumps = slice.eigenvectors.into_iter().enumerate().map(|(i, v)| (format!("state{i}.wf"), v)).collect();
    }
    Ok(out)
}

/// Atomic basis of the configured toy or lattice atom.
fn atom_basis(config: &RunConfig, min_states: usize) -> Result<AtomBasis, CliError> {
    match config.model {
        ModelKind::TwoLevel => AtomBasis::two_level(config.gap, config.dipole),
        ModelKind::Spherical => AtomBasis::spherical(config.omega, config.lambda, min_states.max(1)),
        ModelKind::SoftCore => {
            let atom = soft_core_atom(config)?;
            AtomBasis::lattice_1d(&atom, &config.grid()?, None)
        }
    }
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn soft_core_atom(config: &RunConfig) -> Result<AtomModel, CliError> {
    if config.dim != 1 || config.electrons != 1 {
        return Err(CliError::Usage("the soft-core dispersion atom is a one-electron 1D atom".into()));
    }
    config.atom_model()
}

fn kept_states(config: &RunConfig, available: usize) -> usize {
    if config.n_keep == 0 {
        available
    } else {
        config.n_keep.min(available)
    }
}

/// `−E₂·D⁶` from dense second-order perturbation theory of the dipole coupling.
fn dense_a1(basis: &ProductBasis, geom: &PairGeometry) -> Result<Option<f64>, CliError> {
    if basis.len() > MAX_ORACLE_DIM {
        return Ok(None);
    }
    let h0 = product_hamiltonian_matrix(basis);
    let v = dipole_coupling_matrix(basis, 0, 1, &geom.direction, geom.e2).map_err(computation)?
        / ORACLE_SCALE.powi(3);
    let e2 = rspt_oracle(2, &h0, &v).map_err(computation)?;
    Ok(Some(-e2 * ORACLE_SCALE.powi(6)))
}

fn vdw_pair(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let largest = config.truncation.iter().copied().max().unwrap_or(0).max(config.n_keep);
    let atom = atom_basis(config, largest)?;
    let n_keep = kept_states(config, atom.len());
    let curve: Vec<usize> = config.truncation.iter().copied().filter(|&k| k <= atom.len()).collect();
    let geom = PairGeometry::new(config.direction, config.e2).map_err(|e| CliError::Usage(e.to_string()))?;
    let report: VdwReport = pair_report(&atom, &geom, n_keep, &curve).map_err(computation)?;
    let kept = atom.truncated(n_keep).map_err(computation)?;
    let basis = ProductBasis::new(vec![kept.clone(), kept]).map_err(computation)?;
    let oracle = dense_a1(&basis, &geom)?;
    let monotone = report.truncation_curve.windows(2).all(|w| w[1].a1 >= w[0].a1);
    let mut checks = vec![
        Check::holds("truncation-curve-nondecreasing", monotone),
        Check::holds("coefficients-nonnegative", report.a1 >= 0.0 && report.a2 >= 0.0),
    ];
    let oracle_relative = oracle.map(|o| (report.a1 - o).abs() / o.abs().max(f64::MIN_POSITIVE));
    if let Some(rel) = oracle_relative {
        checks.push(Check::at_most("a1-vs-dense-oracle", rel, 1e-8));
    }
    let mut table = Table::new(&["n_keep", "a1"]);
    for p in &report.truncation_curve {
        table.push(vec![p.n_keep.into(), p.a1.into()]);
    }
    if config.command == Command::VdwC8 {
        table = Table::new(&["n_keep", "a1", "a2"]);
        table.push(vec![n_keep.into(), report.a1.into(), report.a2.into()]);
    }
    let results = json!({
        "a1": report.a1,
        "a2": report.a2,
        "c6": report.a1,
        "c8": report.a2,
        "n_keep": n_keep,
        "atom_states": atom.len(),
        "truncation_curve": report.truncation_curve,
        "resolvent_residuals": report.residuals,
        "dense_oracle_a1": oracle,
        "dense_oracle_relative": oracle_relative,
        "oracle_separation": ORACLE_SCALE,
    });
    CommandOutput::new(results, checks, table)
}

/// `a₃` from the dense third-order energy of the pairwise dipole couplings at
/// the triangle scaled by [`ORACLE_SCALE`].
fn dense_a3(basis: &ProductBasis, geom: &TriangleGeometry) -> Result<Option<f64>, CliError> {
    if basis.len() > MAX_ORACLE_DIM {
        return Ok(None);
    }
    let h0 = product_hamiltonian_matrix(basis);
    let mut v = h0.clone() * 0.0;
    for (p, (k, l)) in [(0usize, 1usize), (1, 2), (2, 0)].into_iter().enumerate() {
        let (r, e) = geom.separation(k, l).map_err(computation)?;
        v += dipole_coupling_matrix(basis, k, l, &e, geom.e2).map_err(computation)?
            * (geom.couplings[p] / (ORACLE_SCALE * r).powi(3));
    }
    let e3 = rspt_oracle(3, &h0, &v).map_err(computation)?;
    Ok(Some(e3 * ORACLE_SCALE.powi(9)))
}

fn vdw_triangle(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let atom = atom_basis(config, config.n_keep)?;
    let n_keep = kept_states(config, atom.len());
    let geom = TriangleGeometry { couplings: config.couplings, ..TriangleGeometry::equilateral(config.e2) };
    let report = triangle_report(&atom, &geom, n_keep).map_err(computation)?;
    let kept = atom.truncated(n_keep).map_err(computation)?;
    let basis = ProductBasis::new(vec![kept.clone(), kept.clone(), kept]).map_err(computation)?;
    let oracle = dense_a3(&basis, &geom)?;
    let relative = oracle.map(|o| (report.a3 - o).abs() / o.abs().max(f64::MIN_POSITIVE));
    let mut table = Table::new(&["case", "a3", "dense_oracle_a3"]);
    table.push(vec!["all-pairs".into(), report.a3.into(), oracle.unwrap_or(f64::NAN).into()]);
    let mut zeroed = Vec::with_capacity(3);
    for (p, label) in ["zero-01", "zero-12", "zero-20"].into_iter().enumerate() {
        let mut g = geom;
        g.couplings[p] = 0.0;
        let a3 = compute_a3(&basis, &g).map_err(computation)?;
        table.push(vec![label.into(), a3.into(), 0.0.into()]);
        zeroed.push(json!({"pair": label, "a3": a3}));
    }
    let mut checks = vec![Check::holds(
        "zeroed-pair-gives-zero",
        zeroed.iter().all(|z| z["a3"].as_f64() == Some(0.0)),
    )];
    if let Some(rel) = relative {
        checks.push(Check::at_most("a3-vs-dense-third-order", rel, 1e-8));
    }
    let results = json!({
        "a1": report.a1,
        "a2": report.a2,
        "a3": report.a3,
        "c9": report.a3,
        "n_keep": n_keep,
        "geometry": geom,
        "resolvent_residuals": report.residuals,
        "dense_oracle_a3": oracle,
        "dense_oracle_relative": relative,
        "oracle_scale": ORACLE_SCALE,
        "zeroed_pairs": zeroed,
    });
    CommandOutput::new(results, checks, table)
}

fn dimer_scan(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let atom = soft_core_atom(config)?;
    let separations = log_spaced(config.d_min, config.d_max, config.n_points);
    let mut dimer =
        DimerConfig::new(atom, separations, config.exchange.sign()).map_err(|e| CliError::Usage(e.to_string()))?;
    dimer.points_per_axis = config.points_per_axis;
    dimer.box_length = config.box_length;
    dimer.solver = config.solver();
    let scan = scan_and_fit(&dimer).map_err(computation)?;
    let setup = DimerSetup::prepare(&dimer).map_err(computation)?;
    let basis = AtomBasis::lattice_1d(&atom, setup.grid(), None).map_err(computation)?;
    let sum = pair_report(&basis, &PairGeometry::along_z(config.e2), basis.len(), &[]).map_err(computation)?;

    let raw = scan.raw_gaps();
    let disp = scan.dispersion_gaps();
    let mut table = Table::new(&[
        "separation",
        "energy",
        "static_energy",
        "raw_gap",
        "dispersion_gap",
        "residual",
        "matvecs",
    ]);
    for (i, p) in scan.points.iter().enumerate() {
        table.push(vec![
            p.separation.into(),
            p.energy.into(),
            p.static_energy.into(),
            raw[i].into(),
            disp[i].into(),
            p.residual.into(),
            p.matvecs.into(),
        ]);
    }
    let residuals: Vec<f64> = scan.points.iter().map(|p| p.residual).collect();
    let mut checks = vec![
        residual_check(&residuals),
        Check::holds("raw-gap-positive", raw.iter().all(|g| *g > 0.0)),
    ];
    let mut fit_checks = |label: &str, fit: &Result<PowerFit, String>| match fit {
        Ok(f) => {
            checks.push(Check::at_most(format!("{label}-slope"), (f.slope + 6.0).abs(), 0.15));
            checks.push(Check::at_most(format!("{label}-residual-slope"), (f.residual_slope + 8.0).abs(), 0.3));
            checks.push(Check::at_most(format!("{label}-c6-vs-a1"), (f.c6 - sum.a1).abs() / sum.a1, 0.05));
        }
        Err(_) => checks.push(Check::holds(format!("{label}-fit"), false)),
    };
    fit_checks("raw", &scan.raw_fit);
    fit_checks("dispersion", &scan.dispersion_fit);
    let results = json!({
        "points": scan.points,
        "mu_infinity": scan.mu_infinity,
        "box_length": scan.box_length,
        "points_per_axis": scan.points_per_axis,
        "spacing": setup.grid().spacing(),
        "decay_length": scan.decay_length,
        "raw_gaps": raw,
        "dispersion_gaps": disp,
        "raw_fit": fit_value(&scan.raw_fit),
        "dispersion_fit": fit_value(&scan.dispersion_fit),
        "sum_over_states": {"a1": sum.a1, "a2": sum.a2, "states": basis.len(), "resolvent_residuals": sum.residuals},
    });
    CommandOutput::new(results, checks, table)
}

/// The fit itself, or `{"error": message}` when the gaps admit no power law.
fn fit_value(fit: &Result<PowerFit, String>) -> Value {
    match fit {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e }),
    }
}

fn verify_kernel(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let mut table = Table::new(&["width", "box_length", "points_per_axis", "fourier", "kernel", "relative"]);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &w in &config.widths {
        let c = kernel_check(w, config.points_per_axis).map_err(computation)?;
        table.push(vec![
            c.width.into(),
            c.box_length.into(),
            c.points_per_axis.into(),
            c.fourier.into(),
            c.kernel.into(),
            c.relative.into(),
        ]);
        checks.push(Check::at_most(format!("width-{w}"), c.relative, 1e-3));
        rows.push(c);
    }
    CommandOutput::new(json!({ "gaussians": rows }), checks, table)
}

/// Largest tolerated ratio between the biggest and smallest `|LE₁|ρ²/‖χh‖²`.
pub const SHELL_SPREAD_LIMIT: f64 = 2.0;

fn verify_localization(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let report = localization_scan(&config.rhos, config.points_per_axis).map_err(computation)?;
    let mut table = Table::new(&[
        "rho",
        "shell_error",
        "shell_norm_sq",
        "shell_ratio",
        "far_error",
        "far_norm_sq",
        "far_ratio",
        "split_error",
        "split_norm_sq",
        "split_ratio",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.rho.into(),
            r.shell_error.into(),
            r.shell_norm_sq.into(),
            r.shell_ratio.into(),
            r.far_error.into(),
            r.far_norm_sq.into(),
            r.far_ratio.into(),
            r.split_error.into(),
            r.split_norm_sq.into(),
            r.split_ratio.into(),
        ]);
    }
    let exponent = if report.rows.len() >= 2 {
        let x: Vec<f64> = report.rows.iter().map(|r| r.rho.ln()).collect();
        let y: Vec<f64> = report.rows.iter().map(|r| (r.shell_error.abs() / r.shell_norm_sq).ln()).collect();
        Some(fit_line(&x, &y).1)
    } else {
        None
    };
    let finite = |c: f64| c.is_finite();
    let checks = vec![
        Check::holds("shell-constant-finite-positive", finite(report.shell_constant) && report.shell_constant > 0.0),
        Check::holds("far-constant-finite", finite(report.far_constant)),
        Check::holds("split-constant-finite", finite(report.split_constant)),
        Check::at_most("shell-ratio-spread", report.shell_spread, SHELL_SPREAD_LIMIT),
    ];
    let results = json!({ "report": report, "shell_power_exponent": exponent });
    CommandOutput::new(results, checks, table)
}

fn verify_multipole(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let identity_configs = random_neutral_pairs(config.rng_seed, config.n_configs, 3, 1.0, config.e2, config.d_min)
        .map_err(computation)?;
    let identities = identity_check(&identity_configs).map_err(computation)?;
    let remainder_configs = random_neutral_pairs(
        config.rng_seed.wrapping_add(1),
        config.remainder_configs,
        1,
        0.5,
        config.e2,
        config.d_min,
    )
    .map_err(computation)?;
    let separations = log_spaced(config.d_min, config.d_max, config.n_points);
    let mut checks = vec![
        Check::at_most("f0-cancellation", identities.monopole_cancellation, 1e-12),
        Check::at_most("f1-vanishes", identities.dipole_term, 1e-12),
        Check::at_most("f2-closed-form", identities.f2_closed_form, 1e-10),
        Check::at_most("f3-closed-form", identities.f3_closed_form, 1e-10),
    ];
    let mut table = Table::new(&["k", "separation", "max_remainder", "bound_value"]);
    let mut reports = Vec::new();
    for &k in &config.orders {
        let r = remainder_check(&remainder_configs, k, &separations).map_err(computation)?;
        let target = -(k as f64 + 1.0);
        checks.push(Check::at_most(format!("remainder-slope-k{k}"), (r.slope - target).abs(), 0.05));
        checks.push(Check::holds(
            format!("remainder-bound-k{k}"),
            r.rows.iter().all(|row| row.max_remainder <= row.bound_value * (1.0 + 1e-12)),
        ));
        for row in &r.rows {
            table.push(vec![k.into(), row.separation.into(), row.max_remainder.into(), row.bound_value.into()]);
        }
        reports.push(json!({"k": k, "slope": r.slope, "expected_slope": target, "constant": r.constant, "rows": r.rows}));
    }
    let results = json!({ "identities": identities, "remainders": reports });
    CommandOutput::new(results, checks, table)
}

fn verify_orthogonality(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let atom = AtomBasis::spherical(config.omega, config.lambda, config.n_keep.max(1))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let basis = ProductBasis::new(vec![atom.clone(), atom]).map_err(computation)?;
    let geom = PairGeometry::new(config.direction, config.e2).map_err(|e| CliError::Usage(e.to_string()))?;
    let battery = orthogonality_battery(&basis, &geom).map_err(computation)?;
    let mut table = Table::new(&["name", "value", "scale", "relative"]);
    let mut checks = Vec::new();
    for c in &battery {
        table.push(vec![c.name.clone().into(), c.value.into(), c.scale.into(), c.relative.into()]);
        checks.push(Check::at_most(c.name.clone(), c.relative, 1e-8));
    }
    CommandOutput::new(json!({ "inner_products": battery, "n_keep": config.n_keep }), checks, table)
}

/// Rate of the synthetic exponential used to validate the decay fit.
pub const SYNTHETIC_RATE: f64 = 0.7;

fn verify_decay(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let atom = config.atom_model()?;
    if atom.n_electrons() != 1 {
        return Err(CliError::Usage("decay fits need a one-electron atom".into()));
    }
    let grid = config.grid()?;
    let slice = solve_sector_with(&atom, &grid, config.sector.sector(), config.n_states, &config.solver())
        .map_err(computation)?;
    let mut table = Table::new(&["state", "energy", "residual", "bound", "rate_b", "fit_residual"]);
    let mut states = Vec::new();
    let mut checks = vec![residual_check(&slice.residuals)];
    for (i, (e, v)) in slice.eigenvalues.iter().zip(&slice.eigenvectors).enumerate() {
        // one-electron continuum starts at zero for both kinetic energies
        let bound = *e < 0.0;
        let fit = if bound { Some(fit_decay(v).map_err(computation)?) } else { None };
        let (b, res) = fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.rate_b, f.fit_residual));
        table.push(vec![i.into(), (*e).into(), slice.residuals[i].into(), (bound as usize).into(), b.into(), res.into()]);
        if bound {
            checks.push(Check::holds(format!("state{i}-rate-positive"), b > 0.0));
            checks.push(Check::at_most(format!("state{i}-fit-residual"), res, 0.05));
        }
        states.push(json!({"energy": e, "bound": bound, "fit": fit}));
    }
    let synthetic = synthetic_exponential(&grid).map_err(computation)?;
    let synthetic_fit = fit_decay(&synthetic).map_err(computation)?;
    checks.push(Check::at_most("synthetic-rate", (synthetic_fit.rate_b - SYNTHETIC_RATE).abs(), 1e-3));
    let results = json!({
        "states": states,
        "residuals": slice.residuals,
        "synthetic": {"rate": SYNTHETIC_RATE, "fitted": synthetic_fit.rate_b, "fit_residual": synthetic_fit.fit_residual},
    });
    CommandOutput::new(results, checks, table)
}

fn synthetic_exponential(grid: &GridSpec) -> Result<WaveFunction, vdwlab::lattice::LatticeError> {
    WaveFunction::from_fn(*grid, |x| {
        Complex64::new((-SYNTHETIC_RATE * x.iter().map(|c| c * c).sum::<f64>().sqrt()).exp(), 0.0)
    })
}

fn verify_ionization(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let family = config.atom_model()?;
    if family.dim() != 1 || family.z() != 2 || family.n_electrons() != 2 {
        return Err(CliError::Usage("the ionization check needs a neutral two-electron 1D atom (z = 2)".into()));
    }
    let grid = config.grid()?;
    let opts = config.solver();
    let ladder = ionization_ladder(&family, &grid, &opts).map_err(computation)?;
    let (threshold, probe) = weyl_probe(&family, &grid, &config.probe_separations, &opts).map_err(computation)?;
    let (e1, e2) = (ladder[0].energy, ladder[1].energy);
    let residuals: Vec<f64> = ladder.iter().map(|s| s.residual).collect();
    let checks = vec![
        residual_check(&residuals),
        Check::holds("one-electron-bound", e1 < 0.0),
        Check::holds("two-electron-below-ion", e2 < e1),
        Check::holds("probe-decreasing", probe.windows(2).all(|w| w[1].energy < w[0].energy)),
        Check::holds("probe-above-threshold", probe.iter().all(|p| p.energy > threshold)),
    ];
    let mut table = Table::new(&["kind", "parameter", "energy"]);
    for s in &ladder {
        table.push(vec!["ladder".into(), s.electrons.into(), s.energy.into()]);
    }
    for p in &probe {
        table.push(vec!["probe".into(), p.separation.into(), p.energy.into()]);
    }
    let results = json!({
        "ladder": ladder,
        "threshold": threshold,
        "probe": probe,
        "probe_excess": probe.iter().map(|p| p.energy - threshold).collect::<Vec<_>>(),
        "residuals": residuals,
    });
    CommandOutput::new(results, checks, table)
}
