use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sgvem::geometry::Rect;
use sgvem::harness::{self, Check, ExperimentConfig, MeshFamily, TestId};
use sgvem::mesh::{check_regularity, write_mesh};

/// Virtual element solver for the damped semilinear sine-Gordon equation.
#[derive(Parser)]
#[command(name = "sgvem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Run the experiment described by a TOML configuration file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a convergence benchmark with its default configuration.
    Sweep {
        /// 1, 2 or 3.
        #[arg(long)]
        test: String,
        #[command(flatten)]
        common: Common,
    },
    /// Ring-soliton collision.
    Solitons {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a mesh and write it in the plain-text mesh format.
    Gen {
        #[arg(long, default_value = "voronoi")]
        family: String,
        /// Cells (voronoi) or cells per side (grid families).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        lloyd: usize,
        #[arg(long, default_value_t = 0.3)]
        distortion: f64,
        /// Domain as xmin,xmax,ymin,ymax.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 1.0, 0.0, 1.0])]
        domain: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Exit with status 1 when an acceptance check fails.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the mesh sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    mesh_sizes: Option<Vec<usize>>,
    /// Write zero wall times so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(m) = &self.mesh_sizes {
            cfg.mesh_sizes = m.clone();
        }
        if self.no_timing {
            cfg.timing = false;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

fn experiment(mut cfg: ExperimentConfig, common: &Common) -> Result<bool> {
    common.apply(&mut cfg);
    let summary = harness::run_experiment(&cfg).with_context(|| format!("running {}", cfg.test.name()))?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    for c in &summary.checks {
        println!("{c}");
    }
    Ok(!common.check || summary.checks.iter().all(Check::passed))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Mesh { command: MeshCommand::Gen { family, n, seed, lloyd, distortion, domain, out } } => {
            let family: MeshFamily = family.parse()?;
            let [x0, x1, y0, y1] = domain[..] else { bail!("--domain needs four numbers") };
            let mesh = harness::build_mesh(family, n, Rect::new(x0, x1, y0, y1), lloyd, distortion, seed)?;
            write_mesh(&mesh, &out).with_context(|| format!("writing {}", out.display()))?;
            let q = check_regularity(&mesh);
            println!(
                "{} vertices, {} cells, h = {:.6}, min star ratio {:.4}, min edge ratio {:.4} (cell {})",
                mesh.n_vertices(),
                mesh.n_cells(),
                mesh.mesh_size(),
                q.min_star_ratio,
                q.min_edge_ratio,
                q.worst_cell_id
            );
            Ok(true)
        }
        Command::Solve { config, common } => experiment(ExperimentConfig::from_file(&config)?, &common),
        Command::Sweep { test, common } => {
            let id: TestId = test.parse()?;
            if id == TestId::Solitons {
                bail!("use the solitons subcommand for the soliton run");
            }
            experiment(ExperimentConfig::defaults(id), &common)
        }
        Command::Solitons { common } => experiment(ExperimentConfig::defaults(TestId::Solitons), &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
