//! The subcommands, as library functions.

use crate::config::RunConfig;
use crate::convergence::{convergence_table, table_csv, ConvergenceRow};
use crate::plot::scatter_svg;
use crate::report::{read_poles_file, write_poles_csv, PoleRow, SolveReport};
use crate::CliError;
use dtn_core::linalg::C64;
use dtn_core::mesh::{export_mesh, refine_uniform, Mesh};
use dtn_core::multilevel::{track_poles, MultilevelReport};
use dtn_core::nep::ResonanceOperator;
use dtn_core::oracle::{disk_exact_poles, mie_scattered_field};
use dtn_core::Region;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Validates, builds the level-1 mesh and tracks poles up to `config.level`.
pub fn run(config: &RunConfig) -> Result<MultilevelReport, CliError> {
    config.validate()?;
    let base = config.base_mesh()?;
    let shape = config.shape.obstacle();
    Ok(track_poles(
        base,
        shape.as_ref(),
        config.radius,
        config.n_max,
        &config.region,
        config.level,
        config.search_level,
        &config.sim,
    )?)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub run: MultilevelReport,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

/// [`run`], then `poles.csv` and `report.json` in the output directory.
/// With `export_modes`, also the finest mesh and one file of nodal real
/// parts per pole.
pub fn cmd_solve(config: &RunConfig, export_modes: bool) -> Result<SolveOutcome, CliError> {
    let run = run(config)?;
    let report = SolveReport::new(config, &run);
    let csv_path = config.out_dir.join("poles.csv");
    let json_path = config.out_dir.join("report.json");
    write_file(&csv_path, &write_poles_csv(&report.poles)?)?;
    write_file(&json_path, &report.to_json()?)?;
    if export_modes {
        write_file(&config.out_dir.join("mesh.txt"), &export_mesh(&config.mesh_at_level()?))?;
        for (i, p) in run.poles().iter().enumerate() {
            write_file(&config.out_dir.join(format!("mode_{}.txt", i + 1)), &mode_text(&p.vector))?;
        }
    }
    Ok(SolveOutcome {
        report,
        run,
        csv_path,
        json_path,
    })
}

/// Real part of `u` after rotating its largest entry onto the positive axis.
fn mode_text(u: &[C64]) -> String {
    let big = u
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
    let mut s = format!("values {}\n", u.len());
    for v in u {
        let _ = writeln!(s, "{:.16e}", (v * phase).re);
    }
    s
}

/// Oracle poles of the unit disk in `region` in the pole CSV schema.
pub fn cmd_reference(region: &Region, m_max: usize) -> Result<String, CliError> {
    let rows: Vec<PoleRow> = disk_exact_poles(region, m_max).iter().map(PoleRow::from).collect();
    write_poles_csv(&rows)
}

/// Runs up to `levels` and tabulates the finest poles inside the region.
pub fn cmd_convergence(config: &RunConfig, levels: usize) -> Result<(Vec<ConvergenceRow>, MultilevelReport), CliError> {
    let cfg = RunConfig {
        level: levels,
        search_level: 1,
        ..config.clone()
    };
    let run = run(&cfg)?;
    let rows = convergence_from(&run);
    Ok((rows, run))
}

pub fn convergence_from(run: &MultilevelReport) -> Vec<ConvergenceRow> {
    let levels: Vec<(usize, f64, Vec<C64>)> = run
        .levels
        .iter()
        .map(|l| (l.level, l.mesh_size, l.poles.iter().map(|p| p.lambda).collect()))
        .collect();
    let tracked: Vec<C64> = run.poles().iter().map(|p| p.lambda).collect();
    convergence_table(&levels, &tracked)
}

pub fn write_convergence(config: &RunConfig, rows: &[ConvergenceRow]) -> Result<PathBuf, CliError> {
    let path = config.out_dir.join("convergence.csv");
    write_file(&path, &table_csv(rows))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterLevel {
    pub level: usize,
    pub ndof: usize,
    pub mesh_size: f64,
    pub relative_l2_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterCheck {
    pub k: f64,
    pub levels: Vec<ScatterLevel>,
    /// `log2` of successive error ratios.
    pub orders: Vec<f64>,
}

/// Plane wave `e^{ikx}` on the unit disk: finite element solution against
/// the Mie series in the mass-matrix norm, levels `1..=levels`.
pub fn cmd_scatter_check(config: &RunConfig, k: f64, levels: usize) -> Result<ScatterCheck, CliError> {
    if !(k > 0.0) || !k.is_finite() || k > 50.0 {
        return Err(CliError::Config(format!("k = {k} out of range (0, 50]")));
    }
    if config.shape != crate::config::ShapeSpec::Disk {
        return Err(CliError::Config("scatter-check needs shape = disk".into()));
    }
    if levels == 0 {
        return Err(CliError::Config("need at least one level".into()));
    }
    let shape = config.shape.obstacle();
    let mut mesh: Mesh = config.base_mesh()?;
    let mut out = vec![];
    for level in 1..=levels {
        if level > 1 {
            mesh = refine_uniform(&mesh, shape.as_ref(), config.radius)?;
        }
        let op = ResonanceOperator::new(mesh.clone(), config.radius, config.n_max);
        let uh = op.solve_scattering(k, [1.0, 0.0])?;
        let exact = mie_scattered_field(k, [1.0, 0.0], &mesh.vertices)?;
        let diff: Vec<C64> = uh.iter().zip(&exact).map(|(a, b)| a - b).collect();
        out.push(ScatterLevel {
            level,
            ndof: op.ndof(),
            mesh_size: dtn_core::mesh::mesh_size(&mesh),
            relative_l2_error: op.l2_norm(&diff) / op.l2_norm(&exact),
        });
    }
    let orders = out
        .windows(2)
        .map(|w| (w[0].relative_l2_error / w[1].relative_l2_error).log2())
        .collect();
    Ok(ScatterCheck { k, levels: out, orders })
}

/// The mesh of `config.level` in the native format.
pub fn cmd_mesh(config: &RunConfig) -> Result<String, CliError> {
    config.validate()?;
    Ok(export_mesh(&config.mesh_at_level()?))
}

/// SVG of the poles in `computed` and `reference` CSV files.
pub fn cmd_plot(region: &Region, computed: &[PathBuf], reference: &[PathBuf]) -> Result<String, CliError> {
    let load = |files: &[PathBuf]| -> Result<Vec<C64>, CliError> {
        let mut out = vec![];
        for f in files {
            out.extend(read_poles_file(f)?.iter().map(PoleRow::k));
        }
        Ok(out)
    };
    Ok(scatter_svg(region, &load(computed)?, &load(reference)?))
}
