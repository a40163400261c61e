//! Subcommand implementations: thin orchestration over the core library.

use num_complex::Complex64;

use ptigp::critical::critical_scan;
use ptigp::error::PtError;
use ptigp::evolve::evolve_detail;
use ptigp::gaugemap::proper_map_along;
use ptigp::numkernel::{inner, ComplexMatrix};
use ptigp::path::{latitude_circle, LoopPath};
use ptigp::phase::loop_phases;
use ptigp::ptsystem::{build_model, PTSystem};
use ptigp::thermal::{igp_from_phases, loop_level_phases};

use crate::config::{ConfigError, PathConfig, RunConfig};
use crate::output::{critical_sibling, render, write_out, Cell, Table};

/// Fraction of the final-state population outside the tracked level above
/// which an evolution run is flagged as non-adiabatic.
const LEAK_FLAG: f64 = 0.01;

/// Any failure a subcommand can produce, tagged for the exit-code contract:
/// configuration/usage problems exit 3, physics-domain failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Pt(PtError),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 3,
            CliError::Pt(e) => {
                if e.is_domain_failure() {
                    2
                } else {
                    3
                }
            }
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(e) => format!("configuration error: {e}"),
            CliError::Io(e) => format!("i/o error: {e}"),
            CliError::Pt(e @ PtError::BrokenPTPhase { .. }) => {
                format!("broken PT phase: {e}")
            }
            CliError::Pt(e) => e.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<PtError> for CliError {
    fn from(e: PtError) -> Self {
        CliError::Pt(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn build_system(cfg: &RunConfig) -> Result<PTSystem, CliError> {
    let tol = cfg.tolerances()?;
    Ok(build_model(&cfg.model.name, &cfg.model.parameters)?.with_tolerances(tol))
}

/// Densifies a polyline into `samples`-ish segments at uniform time spacing
/// (the ODE-based routes require a uniform clock).
fn polyline_path(path: &PathConfig, coords: usize) -> Result<LoopPath, CliError> {
    let mut verts = path.points.clone().expect("validated by RunConfig");
    if verts[0].len() != coords {
        return Err(ConfigError(format!(
            "path.points have {} coordinates but the model expects {coords}",
            verts[0].len()
        ))
        .into());
    }
    if path.closed && verts.first() != verts.last() {
        verts.push(verts[0].clone());
    }

    let segments = verts.len() - 1;
    let lengths: Vec<f64> = (0..segments)
        .map(|s| {
            verts[s]
                .iter()
                .zip(&verts[s + 1])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let total: f64 = lengths.iter().sum();
    if total <= 0.0 {
        return Err(ConfigError("path.points trace a zero-length polyline".into()).into());
    }

    // Largest-remainder apportionment of the sample budget, >= 1 per segment.
    let ideal: Vec<f64> = lengths
        .iter()
        .map(|l| path.samples as f64 * l / total)
        .collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x.floor() as usize).max(1)).collect();
    let mut have: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..segments).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut next = 0;
    while have < path.samples {
        counts[order[next % segments]] += 1;
        next += 1;
        have += 1;
    }

    let mut points = Vec::with_capacity(have + 1);
    for s in 0..segments {
        for k in 0..counts[s] {
            let t = k as f64 / counts[s] as f64;
            let p: Vec<f64> = verts[s]
                .iter()
                .zip(&verts[s + 1])
                .map(|(a, b)| a + (b - a) * t)
                .collect();
            points.push(p);
        }
    }
    points.push(verts[segments].clone());
    let n = points.len();
    let times: Vec<f64> = (0..n)
        .map(|k| path.tau * k as f64 / (n - 1) as f64)
        .collect();
    Ok(LoopPath::new(points, times)?)
}

fn build_path(cfg: &RunConfig, sys: &PTSystem) -> Result<LoopPath, CliError> {
    match cfg.path.kind.as_str() {
        "latitude" => {
            if sys.coords() != 2 {
                return Err(ConfigError(format!(
                    "latitude paths need a 2-coordinate model, `{}` has {}",
                    cfg.model.name,
                    sys.coords()
                ))
                .into());
            }
            Ok(latitude_circle(cfg.path.theta, cfg.path.samples, cfg.path.tau)?)
        }
        _ => polyline_path(&cfg.path, sys.coords()),
    }
}

/// `check`: validates the configured model along the configured path and
/// reports every residual against its tolerance. Exit 0 only if all pass.
pub fn cmd_check(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    let path = build_path(cfg, &sys)?;
    let tol = *sys.tolerances();
    let dim = sys.dim();

    let stride = (path.len() / 32).max(1);
    let mut max_pseudo = 0.0f64;
    let mut max_eig = 0.0f64;
    let mut max_biorth = 0.0f64;
    let mut max_complete = 0.0f64;
    let mut checked = 0usize;
    for k in (0..path.len()).step_by(stride) {
        let p = path.point(k);
        checked += 1;
        max_pseudo = max_pseudo.max(sys.pseudo_hermiticity_residual(p)?);
        let h = sys.hamiltonian_at(p)?;
        let spec = sys.spectrum_at(p)?;
        let scale = h.frobenius_norm().max(1.0);
        let mut complete = ComplexMatrix::identity(dim).scale(Complex64::new(-1.0, 0.0));
        for n in 0..dim {
            let energy = Complex64::new(spec.energies[n], 0.0);
            let r_res = h.matvec(&spec.right[n]).sub(&spec.right[n].scale(energy));
            let l_res = h
                .adjoint()
                .matvec(&spec.left[n])
                .sub(&spec.left[n].scale(energy.conj()));
            max_eig = max_eig.max(r_res.norm() / scale).max(l_res.norm() / scale);
            for m in 0..dim {
                let delta = if m == n { 1.0 } else { 0.0 };
                let overlap = inner(&spec.left[m], &spec.right[n]);
                max_biorth = max_biorth.max((overlap - delta).norm());
            }
            complete = complete.add(&ComplexMatrix::outer(&spec.right[n], &spec.left[n]));
        }
        max_complete = max_complete.max(complete.frobenius_norm());
    }
    let properness = proper_map_along(&sys, &path)?.properness;

    let rows: [(&str, f64, f64); 5] = [
        ("pseudo-hermiticity", max_pseudo, tol.pseudo_hermiticity),
        ("eigenpair residual", max_eig, tol.eig_residual),
        ("biorthonormality", max_biorth, tol.biorthonormality),
        ("completeness", max_complete, tol.completeness),
        ("gauge-map properness", properness, tol.properness),
    ];
    println!(
        "model {} (dim {}), path {} with {} samples, {} points checked",
        cfg.model.name,
        dim,
        cfg.path.kind,
        cfg.path.samples,
        checked
    );
    let mut ok = true;
    for (name, value, bound) in rows {
        let pass = value <= bound;
        ok &= pass;
        println!(
            "  {name:<22} {value:.3e}  (tolerance {bound:.1e})  {}",
            if pass { "ok" } else { "FAIL" }
        );
    }
    println!("check: {}", if ok { "ok" } else { "FAILED" });
    Ok(if ok { 0 } else { 2 })
}

/// `phases`: per-level geometric phases of the configured loop.
pub fn cmd_phases(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    let path = build_path(cfg, &sys)?;
    let phases = loop_phases(&sys, &path)?;

    let mut table = Table::new(
        "phases",
        vec![
            "level",
            "re_theta1",
            "im_theta1",
            "theta2",
            "theta_berry",
            "branch",
            "residual_theta2_berry",
            "residual_theta1_theta2",
        ],
    );
    for report in &phases.reports {
        table.push(vec![
            Cell::from(report.level),
            Cell::from(report.theta1.re),
            Cell::from(report.theta1.im),
            Cell::from(report.theta2),
            Cell::from(report.theta_berry),
            Cell::Int(report.branch),
            Cell::from(report.residual_theta2_berry),
            Cell::from(report.residual_theta1_theta2),
        ]);
    }
    write_out(&render(&table, &cfg.output.format), &cfg.output)?;
    Ok(0)
}

fn igp_row(theta: f64, beta: f64, report: &ptigp::thermal::IGPReport) -> Vec<Cell> {
    vec![
        Cell::from(theta),
        Cell::from(beta),
        Cell::from(report.theta_g),
        Cell::from(report.amplitude.norm()),
        Cell::from(report.regime.label()),
        Cell::from(report.effective_ratio()),
    ]
}

const SCAN_COLUMNS: [&str; 6] = [
    "theta",
    "beta",
    "theta_g",
    "amplitude_abs",
    "regime",
    "eff_weight_ratio",
];

fn critical_table(
    sys: &PTSystem,
    cfg: &RunConfig,
    thetas: &[f64],
    betas: &[f64],
) -> Result<Table, CliError> {
    let samples = cfg.path.samples;
    let tau = cfg.path.tau;
    let family = move |theta: f64| latitude_circle(theta, samples, tau);
    let points = critical_scan(sys, &family, thetas, betas)?;
    let mut table = Table::new("critical", vec!["param", "beta", "jump"]);
    for point in points {
        table.push(vec![
            Cell::from(point.param),
            Cell::from(point.beta),
            Cell::from(point.jump),
        ]);
    }
    Ok(table)
}

/// `igp-scan`: thermal interference phase over the theta x beta grid
/// (row-major, theta outer), plus a critical-point sidecar artifact.
pub fn cmd_igp_scan(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    if sys.coords() != 2 {
        return Err(ConfigError(format!(
            "igp-scan sweeps latitude loops and needs a 2-coordinate model, `{}` has {}",
            cfg.model.name,
            sys.coords()
        ))
        .into());
    }
    let thetas = cfg.theta_grid();
    let betas = cfg.beta_grid();

    // One spectral pass per column; the beta axis is cheap arithmetic.
    let samples = cfg.path.samples;
    let tau = cfg.path.tau;
    let columns = ptigp::scan_map(&thetas, |theta| {
        let path = latitude_circle(*theta, samples, tau)?;
        loop_level_phases(&sys, &path)
    });

    let mut table = Table::new("igp-scan", SCAN_COLUMNS.to_vec());
    for (theta, column) in thetas.iter().zip(columns) {
        let phases = column?;
        for &beta in &betas {
            let report = igp_from_phases(&phases, beta)?;
            table.push(igp_row(*theta, beta, &report));
        }
    }
    write_out(&render(&table, &cfg.output.format), &cfg.output)?;

    let critical = critical_table(&sys, cfg, &thetas, &betas)?;
    match cfg.output.path.as_deref() {
        None | Some("-") => {
            eprintln!(
                "note: {} critical point(s) found; give output.path a file to also \
                 write the `.critical` sidecar table",
                critical.rows.len()
            );
        }
        Some(path) => {
            let sidecar = critical_sibling(path);
            std::fs::write(&sidecar, render(&critical, &cfg.output.format))?;
        }
    }
    Ok(0)
}

/// `critical`: locate finite-temperature transitions on the scan grid.
pub fn cmd_critical(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    if sys.coords() != 2 {
        return Err(ConfigError(
            "critical sweeps latitude loops and needs a 2-coordinate model".into(),
        )
        .into());
    }
    let thetas = cfg.theta_grid();
    let betas = cfg.beta_grid();
    let table = critical_table(&sys, cfg, &thetas, &betas)?;
    write_out(&render(&table, &cfg.output.format), &cfg.output)?;
    Ok(0)
}

const EVOLVE_COLUMNS: [&str; 7] = [
    "ramp_factor",
    "re_phi_total",
    "im_phi_total",
    "target",
    "deviation",
    "leak",
    "flagged",
];

fn evolve_row(report: &ptigp::evolve::EvolveReport) -> Vec<Cell> {
    vec![
        Cell::from(report.ramp_factor),
        Cell::from(report.phi_total.re),
        Cell::from(report.phi_total.im),
        Cell::from(report.target),
        Cell::from(report.deviation),
        Cell::from(report.leak),
        Cell::from(report.leak > LEAK_FLAG),
    ]
}

/// `oracle`: direct time evolution at each configured ramp factor; slow
/// ramps should drive the deviation from the adiabatic prediction to zero.
/// Non-adiabatic rows are flagged, not fatal.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    let path = build_path(cfg, &sys)?;
    let mut table = Table::new("oracle", EVOLVE_COLUMNS.to_vec());
    for &ramp in &cfg.oracle.ramps {
        let report = evolve_detail(&sys, &path, cfg.oracle.level, ramp)?;
        table.push(evolve_row(&report));
    }
    write_out(&render(&table, &cfg.output.format), &cfg.output)?;
    Ok(0)
}

/// `evolve`: one gated evolution run; a leak above the adiabatic threshold
/// is a domain failure (exit 2).
pub fn cmd_evolve(cfg: &RunConfig) -> Result<i32, CliError> {
    let sys = build_system(cfg)?;
    let path = build_path(cfg, &sys)?;
    let report = evolve_detail(&sys, &path, cfg.evolve.level, cfg.evolve.ramp)?;
    if report.leak > LEAK_FLAG {
        return Err(PtError::AdiabaticityBreakdown { leak: report.leak }.into());
    }
    let mut table = Table::new("evolve", EVOLVE_COLUMNS.to_vec());
    table.push(evolve_row(&report));
    write_out(&render(&table, &cfg.output.format), &cfg.output)?;
    Ok(0)
}
