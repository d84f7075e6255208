use clap::{Args, Parser, Subcommand};
use dtn_cli::commands;
use dtn_cli::config::{parse_region, RunConfig};
use dtn_cli::convergence::table_csv;
use dtn_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dtnres", version, about = "Scattering resonances of sound-hard obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search the region and write poles.csv and report.json.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the finest mesh and the real parts of the eigenvectors.
        #[arg(long)]
        export_modes: bool,
    },
    /// Exact poles of the unit disk as a pole CSV.
    Reference {
        #[arg(long, default_value = "0 4 -4 0", allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 12)]
        m_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative errors and orders over levels 1..=levels.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Plane-wave scattering by the unit disk against the Mie series.
    ScatterCheck {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Print the mesh of the configured level in the native format.
    Mesh {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG scatter of pole CSV files.
    Plot {
        #[arg(long, num_args = 0..)]
        computed: Vec<PathBuf>,
        #[arg(long, num_args = 0..)]
        reference: Vec<PathBuf>,
        #[arg(long, default_value = "0 4 -4 0", allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long = "R")]
    radius: Option<String>,
    #[arg(long = "N")]
    n_max: Option<String>,
    /// Four numbers: re_min re_max im_min im_max.
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    search_level: Option<String>,
    #[arg(long)]
    n_quad: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    min_cell: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    dedupe_radius: Option<String>,
    #[arg(long)]
    residual_tol: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("shape", &self.shape),
            ("R", &self.radius),
            ("N", &self.n_max),
            ("region", &self.region),
            ("level", &self.level),
            ("search_level", &self.search_level),
            ("n_quad", &self.n_quad),
            ("threshold", &self.threshold),
            ("min_cell", &self.min_cell),
            ("seed", &self.seed),
            ("dedupe_radius", &self.dedupe_radius),
            ("residual_tol", &self.residual_tol),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.apply_env()?;
        if let Some(v) = &self.workers {
            cfg.set("workers", v)?;
        }
        Ok(cfg)
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { run, export_modes } => {
            let cfg = run.resolve()?;
            let out = commands::cmd_solve(&cfg, export_modes)?;
            for p in &out.report.poles {
                println!("{:+.6} {:+.6}i  residual {:.1e}  group {}", p.re_k, p.im_k, p.residual, p.group_size);
            }
            eprintln!(
                "{} poles; wrote {} and {}",
                out.report.poles.len(),
                out.csv_path.display(),
                out.json_path.display()
            );
        }
        Command::Reference { region, m_max, out } => {
            emit(&out, &commands::cmd_reference(&parse_region(&region)?, m_max)?)?;
        }
        Command::Convergence { run, levels } => {
            let cfg = run.resolve()?;
            let (rows, _) = commands::cmd_convergence(&cfg, levels)?;
            let path = commands::write_convergence(&cfg, &rows)?;
            print!("{}", table_csv(&rows));
            eprintln!("wrote {}", path.display());
        }
        Command::ScatterCheck { run, k, levels } => {
            let cfg = run.resolve()?;
            let check = commands::cmd_scatter_check(&cfg, k, levels)?;
            println!("level,ndof,h,rel_l2_error,order");
            for (i, l) in check.levels.iter().enumerate() {
                let order = if i == 0 { String::new() } else { format!("{:.3}", check.orders[i - 1]) };
                println!("{},{},{:.6},{:.6e},{order}", l.level, l.ndof, l.mesh_size, l.relative_l2_error);
            }
        }
        Command::Mesh { run, out } => {
            emit(&out, &commands::cmd_mesh(&run.resolve()?)?)?;
        }
        Command::Plot {
            computed,
            reference,
            region,
            out,
        } => {
            emit(&out, &commands::cmd_plot(&parse_region(&region)?, &computed, &reference)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
