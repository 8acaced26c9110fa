use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use knotph_cli::commands::{self, Labeling, TestRequest};
use knotph_cli::config::PipelineConfig;
use knotph_cli::synthetic::{synth_dataset, write_dataset, SynthParams};
use knotph_cli::CliError;

#[derive(Parser)]
#[command(
    name = "knotph",
    version,
    about = "Topological analysis of knotted protein backbones"
)]
struct Cli {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker lanes (default: available parallelism).
    #[arg(long, global = true)]
    lanes: Option<usize>,
    /// Override any config key, e.g. `--set n_neighbors=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read `.xyz` backbones and annotations, write interpolated clouds.
    Ingest {
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        annotation: Option<PathBuf>,
        /// Pairwise sequence similarity CSV used to derive homology classes.
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[arg(long)]
        interp_factor: Option<usize>,
    },
    /// Degree-1 persistence diagrams and landscapes.
    Ph {
        /// `auto` or a positive number.
        #[arg(long)]
        max_scale: Option<String>,
    },
    /// Distance matrix, Isomap embedding and silhouettes.
    Compare {
        /// `landscape` or `wasserstein`.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        n_neighbors: Option<usize>,
        #[arg(long)]
        embed_dim: Option<usize>,
        #[arg(long)]
        landscape_p: Option<f64>,
    },
    /// Average landscapes and randomization test between two classes.
    Test {
        class_a: String,
        class_b: String,
        /// `homology` or `depth`.
        #[arg(long, default_value = "homology")]
        by: String,
        /// Number of permutations.
        #[arg(long)]
        k: Option<usize>,
        /// Layer set for the heat map, e.g. `2` or `1,2`.
        #[arg(long)]
        layers: Option<String>,
    },
    /// Cycle representative behind a landscape peak.
    Generator {
        id: String,
        /// Landscape layer.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Pick the local maximum nearest to this t instead of the global one.
        #[arg(long)]
        t_star: Option<f64>,
    },
    /// Rerun ph and compare on perturbed clouds.
    Noise {
        /// Comma-separated standard deviations.
        #[arg(long)]
        sigmas: Option<String>,
    },
    /// Write a synthetic set of open trefoils with deep and shallow knots.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        deep: usize,
        #[arg(long, default_value_t = 20)]
        shallow: usize,
    },
}

fn apply(cfg: &mut PipelineConfig, key: &str, value: Option<String>) -> Result<(), CliError> {
    match value {
        Some(v) => cfg.set(key, &v, Path::new(".")),
        None => Ok(()),
    }
}

fn path_str(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim(), Path::new("."))?;
    }
    apply(&mut cfg, "seed", cli.seed.map(|s| s.to_string()))?;
    apply(&mut cfg, "output_dir", path_str(cli.out))?;
    apply(&mut cfg, "lanes", cli.lanes.map(|l| l.to_string()))?;

    match cli.command {
        Command::Ingest {
            input_dir,
            annotation,
            similarity,
            interp_factor,
        } => {
            apply(&mut cfg, "input_dir", path_str(input_dir))?;
            apply(&mut cfg, "annotation_path", path_str(annotation))?;
            apply(&mut cfg, "similarity_path", path_str(similarity))?;
            apply(&mut cfg, "interp_factor", interp_factor.map(|d| d.to_string()))?;
            let m = commands::ingest(&cfg)?;
            println!(
                "ingested {} structures into {}",
                m.structures.len(),
                cfg.output_dir.display()
            );
        }
        Command::Ph { max_scale } => {
            apply(&mut cfg, "max_scale", max_scale)?;
            let m = commands::ph(&cfg)?;
            println!("computed {} diagrams", m.structures.len());
        }
        Command::Compare {
            metric,
            n_neighbors,
            embed_dim,
            landscape_p,
        } => {
            apply(&mut cfg, "metric", metric)?;
            apply(&mut cfg, "n_neighbors", n_neighbors.map(|k| k.to_string()))?;
            apply(&mut cfg, "embed_dim", embed_dim.map(|d| d.to_string()))?;
            apply(&mut cfg, "landscape_p", landscape_p.map(|p| p.to_string()))?;
            let s = commands::compare(&cfg)?;
            let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
            println!("silhouette by homology class: {}", show(s.homology));
            println!("silhouette by depth class: {}", show(s.depth));
        }
        Command::Test {
            class_a,
            class_b,
            by,
            k,
            layers,
        } => {
            apply(&mut cfg, "randomization_k", k.map(|k| k.to_string()))?;
            let labeling: Labeling = by.parse().map_err(CliError::Config)?;
            let layers = layers.as_deref().map(commands::parse_layers).transpose()?;
            let req = TestRequest {
                class_a,
                class_b,
                labeling,
                layers,
            };
            let o = commands::test(&cfg, &req)?;
            println!(
                "t_obs = {}, p = {} ({} permutations)",
                o.t_obs, o.p_value, o.permutations
            );
        }
        Command::Generator { id, k, t_star } => {
            let r = commands::generator(&cfg, &id, k, t_star)?;
            let overlap = r.overlap.map_or("NA".to_string(), |v| format!("{v:.3}"));
            println!(
                "pair ({}, {}) at t = {}: {} edges, core overlap {overlap}",
                r.birth, r.death, r.t_peak, r.edges
            );
        }
        Command::Noise { sigmas } => {
            apply(&mut cfg, "sigmas", sigmas)?;
            for row in commands::noise(&cfg)? {
                let s = row.silhouettes.as_ref();
                let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
                println!(
                    "sigma {}: homology {}, depth {}",
                    row.sigma,
                    show(s.and_then(|s| s.homology)),
                    show(s.and_then(|s| s.depth))
                );
            }
        }
        Command::Synth { dir, deep, shallow } => {
            let chains = synth_dataset(deep, shallow, cfg.seed, &SynthParams::default());
            write_dataset(&dir, &chains).map_err(|e| CliError::Run(e.into()))?;
            println!("wrote {} chains to {}", chains.len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
