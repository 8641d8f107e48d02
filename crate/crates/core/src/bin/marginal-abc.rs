use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use marginal_abc::experiment::{
    build_setup, compare, run_requests, ExperimentConfig, ExperimentId, ExperimentResult, RunRequest,
};
use marginal_abc::io::ArtifactWriter;
use marginal_abc::reference::{
    ma2_alternate_root, ma2_binding, normal_exact_marginals, s3_asymptotic_check, AlternateRoot,
};
use marginal_abc::rng::RandomStream;
use marginal_abc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "marginal-abc",
    version,
    about = "SMC-ABC with pilot-localised marginal summaries"
)]
struct Cli {
    /// Worker threads (output is identical for any count).
    #[arg(long, global = true, env = "ABC_LOCALIZE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_id)]
    experiment: Option<ExperimentId>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    n_particles: Option<usize>,
    /// Simulation budget per run.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    n_obs: Option<usize>,
    /// Shorter MA(2) and g-and-k series.
    #[arg(long)]
    reduced_n: bool,
    /// Pilot acceptance-rate threshold.
    #[arg(long)]
    p0: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the observed dataset and its summaries.
    Simulate(Common),
    /// Plain SMC-ABC on the full summaries, or on one parameter's subset.
    Abc {
        #[command(flatten)]
        common: Common,
        /// Match only this parameter's summaries.
        #[arg(long)]
        only: Option<String>,
    },
    /// Pilot run on the full summaries.
    Pilot(Common),
    /// Pilot plus marginal continuation for the given parameters.
    Localize {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true, value_delimiter = ',')]
        params: Vec<String>,
    },
    /// Exact or numerical reference quantities.
    Reference {
        #[command(flatten)]
        common: Common,
        /// Replications for the lag-2 autocovariance check (MA(2)).
        #[arg(long, default_value_t = 2000)]
        replications: usize,
        /// Series length for the lag-2 check (MA(2)).
        #[arg(long, default_value_t = 10_000)]
        check_n: usize,
    },
    /// Compare labelled populations of a run directory with the gold run.
    Compare {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, default_value = "gold")]
        gold: String,
        #[arg(long, required = true, value_delimiter = ',')]
        labels: Vec<String>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The full run matrix.
    Experiment(Common),
}

fn parse_id(s: &str) -> std::result::Result<ExperimentId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn build_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.config, c.experiment, c.seed) {
        (Some(path), _, _) => ExperimentConfig::load(path)?,
        (None, Some(id), Some(seed)) => ExperimentConfig::new(id, seed),
        (None, None, _) => return Err(Error::InvalidArgument("give --config or --experiment".into())),
        (None, Some(_), None) => return Err(Error::InvalidArgument("a seed is required (--seed)".into())),
    };
    if let Some(id) = c.experiment {
        cfg.experiment = id;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.data_seed {
        cfg.data_seed = Some(v);
    }
    if let Some(v) = c.n_particles {
        cfg.smc.n_particles = v;
    }
    if let Some(v) = c.budget {
        cfg.smc.max_simulations = v;
    }
    if let Some(v) = c.n_obs {
        cfg.n_obs = Some(v);
    }
    if c.reduced_n {
        cfg = cfg.reduced_n();
    }
    if let Some(v) = c.p0 {
        cfg.pilot_acc_threshold = Some(v);
    }
    if let Some(v) = &c.out {
        cfg.output_dir = Some(v.clone());
    }
    Ok(cfg)
}

fn report_runs(result: &ExperimentResult) {
    for r in &result.runs {
        let s = &r.summary;
        println!(
            "{:<24} iterations {:>4}  simulations {:>9}  stop {:?}",
            s.label, s.iterations, s.simulations, s.stop_reason
        );
    }
    if let Some(dir) = &result.dir {
        println!("artifacts in {}", dir.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = build_config(&common)?.resolved()?;
            let setup = build_setup(&cfg)?;
            if let Some(dir) = &cfg.output_dir {
                let mut w = ArtifactWriter::new(dir)?;
                w.write("data.csv", &setup.data.to_csv())?;
                let obs: Vec<(String, f64)> = setup
                    .observed
                    .names
                    .iter()
                    .cloned()
                    .zip(setup.observed.values.iter().copied())
                    .collect();
                w.write("summaries.json", &(serde_json::to_string_pretty(&obs)? + "\n"))?;
            }
            for (n, v) in setup.observed.names.iter().zip(&setup.observed.values) {
                println!("{n} = {v}");
            }
        }
        Command::Abc { common, only } => {
            let req = match only {
                Some(p) => RunRequest::MarginalOnly(p),
                None => RunRequest::Gold,
            };
            report_runs(&run_requests(&build_config(&common)?, Some(&[req]))?);
        }
        Command::Pilot(common) => {
            report_runs(&run_requests(&build_config(&common)?, Some(&[RunRequest::Pilot]))?);
        }
        Command::Localize { common, params } => {
            let reqs: Vec<RunRequest> = params.into_iter().map(RunRequest::PilotPlus).collect();
            report_runs(&run_requests(&build_config(&common)?, Some(&reqs))?);
        }
        Command::Reference {
            common,
            replications,
            check_n,
        } => {
            let cfg = build_config(&common)?.resolved()?;
            let setup = build_setup(&cfg)?;
            let mut w = cfg.output_dir.as_deref().map(ArtifactWriter::new).transpose()?;
            match cfg.experiment {
                ExperimentId::Normal | ExperimentId::NormalIdealized => {
                    let marginalized = match &setup.data {
                        marginal_abc::experiment::ObservedData::Univariate(y) => {
                            normal_exact_marginals(y, &setup.normal_hyper.unwrap_or_default())?
                        }
                        _ => unreachable!("normal data are univariate"),
                    };
                    for (name, g) in marginalized.named() {
                        println!("{name}: mean {:.6} sd {:.6}", g.mean(), g.sd());
                        if let Some(w) = w.as_mut() {
                            w.write(&format!("{name}.csv"), &g.to_csv())?;
                        }
                    }
                }
                ExperimentId::Ma2 => {
                    let theta = &setup.true_theta.values;
                    println!("binding function at theta: {:?}", ma2_binding(theta));
                    match ma2_alternate_root(theta)? {
                        AlternateRoot::Root(p) => println!("second root: {:?}", p.values),
                        AlternateRoot::Unique => println!("second root: none"),
                    }
                    let report = s3_asymptotic_check(theta, check_n, replications, &RandomStream::root(cfg.seed))?;
                    let json = serde_json::to_string_pretty(&report)? + "\n";
                    print!("{json}");
                    if let Some(w) = w.as_mut() {
                        w.write("s3_check.json", &json)?;
                    }
                }
                other => {
                    return Err(Error::InvalidArgument(format!("no reference quantities for `{other}`")));
                }
            }
        }
        Command::Compare {
            run_dir,
            gold,
            labels,
            out,
        } => {
            let json = compare(&run_dir, &gold, &labels)?.to_json()? + "\n";
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
        }
        Command::Experiment(common) => {
            report_runs(&run_requests(&build_config(&common)?, None)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
