use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comfortsense::pipeline::{run_pipeline, run_stage, RunConfig, Stage};
use comfortsense::preference::Dimension;
use comfortsense::{Error, Result};

#[derive(Parser)]
#[command(name = "comfortsense", version, about = "Occupant comfort-preference batch pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for all artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of trees per forest
    #[arg(long, global = true)]
    trees: Option<usize>,
    #[arg(long, global = true)]
    timezone: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic study into <out>/sim
    Simulate {
        #[arg(long)]
        occupants: Option<usize>,
        #[arg(long)]
        days: Option<u32>,
        #[arg(long)]
        response_noise: Option<f64>,
    },
    Ingest,
    Fuse,
    Cluster {
        #[arg(long)]
        k: Option<usize>,
    },
    Featurize,
    Train {
        #[arg(long)]
        feature_set: Option<String>,
        #[arg(long, value_delimiter = ',')]
        dimensions: Option<Vec<Dimension>>,
    },
    Evaluate {
        #[arg(long, value_delimiter = ',')]
        feature_sets: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        dimensions: Option<Vec<Dimension>>,
    },
    Coldstart {
        #[arg(long)]
        feature_set: Option<String>,
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        #[arg(long)]
        max_targets: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        dimensions: Option<Vec<Dimension>>,
    },
    Forecast {
        #[arg(long, value_delimiter = ',')]
        zones: Option<Vec<String>>,
        #[arg(long)]
        grid_minutes: Option<u32>,
    },
    /// Every stage in order (generating inputs first if configured to simulate)
    Pipeline,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = common.trees {
        cfg.forest.n_trees = t;
    }
    if let Some(tz) = &common.timezone {
        cfg.timezone = tz.clone();
    }
    Ok(cfg)
}

fn apply(cmd: &Command, cfg: &mut RunConfig) -> Result<Stage> {
    let stage = match cmd {
        Command::Simulate {
            occupants,
            days,
            response_noise,
        } => {
            let sim = cfg.simulate.get_or_insert_with(Default::default);
            if let Some(n) = occupants {
                sim.n_occupants = *n;
            }
            if let Some(d) = days {
                sim.days = *d;
            }
            if let Some(p) = response_noise {
                *sim = sim.clone().with_response_noise(*p);
            }
            Stage::Simulate
        }
        Command::Ingest => Stage::Ingest,
        Command::Fuse => Stage::Fuse,
        Command::Cluster { k } => {
            if let Some(k) = k {
                cfg.cluster.k = *k;
            }
            Stage::Cluster
        }
        Command::Featurize => Stage::Featurize,
        Command::Train {
            feature_set,
            dimensions,
        } => {
            if let Some(f) = feature_set {
                cfg.train.feature_set = f.clone();
            }
            if let Some(d) = dimensions {
                cfg.train.dimensions = d.clone();
            }
            Stage::Train
        }
        Command::Evaluate {
            feature_sets,
            dimensions,
        } => {
            if let Some(f) = feature_sets {
                cfg.evaluate.feature_sets = f.clone();
            }
            if let Some(d) = dimensions {
                cfg.evaluate.dimensions = d.clone();
            }
            Stage::Evaluate
        }
        Command::Coldstart {
            feature_set,
            permutations,
            k_grid,
            max_targets,
            dimensions,
        } => {
            if let Some(f) = feature_set {
                cfg.coldstart.feature_set = f.clone();
            }
            if let Some(r) = permutations {
                cfg.coldstart.permutations = *r;
            }
            if let Some(k) = k_grid {
                cfg.coldstart.k_grid = Some(k.clone());
            }
            if let Some(m) = max_targets {
                cfg.coldstart.max_targets = Some(*m);
            }
            if let Some(d) = dimensions {
                cfg.coldstart.dimensions = d.clone();
            }
            Stage::Coldstart
        }
        Command::Forecast { zones, grid_minutes } => {
            if let Some(z) = zones {
                cfg.forecast.zones = z.clone();
            }
            if let Some(g) = grid_minutes {
                cfg.forecast.settings.grid_minutes = *g;
            }
            Stage::Forecast
        }
        Command::Pipeline => return Err(Error::InvalidConfig("pipeline is not a single stage".into())),
    };
    cfg.validate()?;
    Ok(stage)
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    if let Command::Pipeline = cli.command {
        if cfg.inputs.is_none() && cfg.simulate.is_none() {
            log::info!("no inputs configured; simulating the default study");
            cfg.simulate = Some(Default::default());
        }
        cfg.validate()?;
        for s in run_pipeline(&cfg)? {
            println!("{}: {}", s.stage, s.summary);
        }
        println!("pipeline: manifest at {}", cfg.out_dir.join("manifest.json").display());
        return Ok(());
    }
    let stage = apply(&cli.command, &mut cfg)?;
    let s = run_stage(stage, &cfg)?;
    println!("{}: {}", s.stage, s.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
