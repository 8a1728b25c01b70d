//! `hawkes-ruin`: run ruin-probability experiments from a config file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hawkes_ruin::asymptotics::{cramer_curve, heavy_tail_curve, AsymptoticsReport};
use hawkes_ruin::config::{ExperimentConfig, Method, Mode};
use hawkes_ruin::hawkes::simulate_thinning;
use hawkes_ruin::lundberg::closed_form_exp;
use hawkes_ruin::mc::{derive_seed, stream};
use hawkes_ruin::measure_change::{is_ruin_estimate, tilt_model};
use hawkes_ruin::risk::{crude_ruin_mc, ruin_outcomes};
use hawkes_ruin::stationary::{
    ks_stationary_check, recurrence_mgf_diagnostic, sample_recurrence_times, stationary_spec,
    StationarySpec,
};
use hawkes_ruin::verify::{run_criterion, VerifyContext, VerifyReport, CRITERIA};
use hawkes_ruin::{adjustment_coefficient, Error, Executor, MonteCarlo};

const VERSION: &str = env!("HAWKES_RUIN_VERSION");

#[derive(Parser, Debug)]
#[command(name = "hawkes-ruin", version = VERSION, about = "Ruin probabilities under marked Hawkes claim arrivals")]
struct Cli {
    /// Experiment config (JSON, or TOML by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-path ruin outcomes as CSV, or the events of one path with --events.
    Simulate {
        #[arg(long)]
        events: bool,
    },
    /// Ruin probability estimate as JSON.
    Ruin {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Adjustment coefficient and related quantities as JSON.
    Lundberg,
    /// Scaled ruin curve as CSV.
    Asymptotics {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Long-run intensity against its stationary law, as JSON.
    Stationary,
    /// Return times of the intensity to a level, as CSV.
    Recurrence,
    /// Run the acceptance checks and report JSON.
    Verify {
        /// Comma-separated criterion ids; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Is,
    Crude,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Cramer,
    Heavy,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

#[derive(Serialize)]
struct Provenance {
    seed: u64,
    n: usize,
    version: &'static str,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    #[serde(flatten)]
    body: T,
    #[serde(flatten)]
    provenance: &'a Provenance,
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

struct Sink(Box<dyn Write>);

impl Sink {
    fn open(out: Option<&Path>) -> Result<Self, Failure> {
        Ok(Sink(match out {
            Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        }))
    }

    fn json<T: Serialize>(mut self, value: &T) -> Result<(), Failure> {
        serde_json::to_writer_pretty(&mut self.0, value)?;
        writeln!(self.0)?;
        Ok(self.0.flush()?)
    }

    fn csv<T: Serialize>(self, rows: impl IntoIterator<Item = T>) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.0);
        for r in rows {
            w.serialize(r)?;
        }
        Ok(w.flush()?)
    }
}

fn executor(workers: Option<usize>) -> Executor {
    match workers {
        Some(1) => Executor::Sequential,
        _ => Executor::default(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_pool(cli.workers, || run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Failure::Validation("--workers must be at least 1".into()));
        }
        b = b.num_threads(w);
    }
    let pool = b.build().map_err(|e| Failure::Numeric(e.to_string()))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure>,
) -> Result<T, Failure> {
    if workers == Some(0) {
        return Err(Failure::Validation("--workers must be at least 1".into()));
    }
    f()
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::Verify { only } = &cli.command {
        return verify(cli, only);
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Validation("--config is required for this command".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(n) = cli.n {
        cfg.run.n = n;
    }
    if cli.workers.is_some() {
        cfg.run.workers = cli.workers;
    }
    match &cli.command {
        Command::Ruin { method: Some(m) } => {
            cfg.options.method = match m {
                MethodArg::Is => Method::Is,
                MethodArg::Crude => Method::Crude,
            }
        }
        Command::Asymptotics { mode: Some(m) } => {
            cfg.options.mode = match m {
                ModeArg::Cramer => Mode::Cramer,
                ModeArg::Heavy => Mode::Heavy,
            }
        }
        _ => {}
    }
    let model = cfg.validate()?;
    let prov = Provenance {
        seed: cfg.run.seed,
        n: cfg.run.n,
        version: VERSION,
    };
    let mc = MonteCarlo::new(cfg.run.seed, cfg.run.n).with_executor(executor(cfg.run.workers));
    let sink = Sink::open(cli.out.as_deref())?;

    match &cli.command {
        Command::Simulate { events: true } => {
            let mut rng = stream(cfg.run.seed, 0);
            let ev = simulate_thinning(&model.hawkes, model.lambda0, cfg.run.horizon, &mut rng)?;
            sink.csv(ev)
        }
        Command::Simulate { events: false } => {
            #[derive(Serialize)]
            struct Row {
                ruined: bool,
                tau: f64,
                deficit: f64,
                lambda_at_tau: f64,
            }
            let rows = ruin_outcomes(&model, cfg.run.horizon, &mc)?
                .into_iter()
                .map(|o| Row {
                    ruined: o.ruined,
                    tau: o.tau,
                    deficit: o.deficit,
                    lambda_at_tau: o.lambda_at_tau,
                });
            sink.csv(rows)
        }
        Command::Ruin { .. } => {
            #[derive(Serialize)]
            struct Out {
                method: Method,
                u: f64,
                lambda0: f64,
                psi_hat: f64,
                stderr: f64,
                capped_fraction: Option<f64>,
                horizon: Option<f64>,
                #[serde(rename = "R")]
                r: Option<f64>,
                alpha_r: Option<f64>,
            }
            let out = match cfg.options.method {
                Method::Is => {
                    let sol = adjustment_coefficient(&model)?;
                    let est = is_ruin_estimate(&model, &sol, &mc, cfg.run.time_cap)?;
                    if est.capped_flag {
                        eprintln!(
                            "warning: {:.2e} of paths hit the time cap",
                            est.capped_fraction
                        );
                    }
                    Out {
                        method: Method::Is,
                        u: model.u,
                        lambda0: model.lambda0,
                        psi_hat: est.estimate.value,
                        stderr: est.estimate.stderr,
                        capped_fraction: Some(est.capped_fraction),
                        horizon: None,
                        r: Some(sol.adjustment),
                        alpha_r: Some(sol.alpha_at_adjustment),
                    }
                }
                Method::Crude => {
                    let est = crude_ruin_mc(&model, cfg.run.horizon, &mc)?;
                    let sol = adjustment_coefficient(&model).ok();
                    Out {
                        method: Method::Crude,
                        u: model.u,
                        lambda0: model.lambda0,
                        psi_hat: est.value,
                        stderr: est.stderr,
                        capped_fraction: None,
                        horizon: Some(cfg.run.horizon),
                        r: sol.as_ref().map(|s| s.adjustment),
                        alpha_r: sol.as_ref().map(|s| s.alpha_at_adjustment),
                    }
                }
            };
            sink.json(&Tagged {
                body: out,
                provenance: &prov,
            })
        }
        Command::Lundberg => {
            #[derive(Serialize)]
            struct Out {
                #[serde(rename = "R")]
                r: f64,
                r_max: Option<f64>,
                alpha_r: f64,
                theta_slope_at_zero: f64,
                tilted_drift: Option<f64>,
                closed_form_r: Option<f64>,
                premium_ceiling: Option<f64>,
                version: &'static str,
            }
            let sol = adjustment_coefficient(&model)?;
            let cf = closed_form_exp(&model).transpose()?;
            let drift = tilt_model(&model, &sol, sol.adjustment)
                .ok()
                .map(|q| q.drift());
            sink.json(&Out {
                r: sol.adjustment,
                r_max: sol.r_max.is_finite().then_some(sol.r_max),
                alpha_r: sol.alpha_at_adjustment,
                theta_slope_at_zero: sol.system.theta_derivative(0.0)?,
                tilted_drift: drift,
                closed_form_r: cf.map(|c| c.adjustment),
                premium_ceiling: cf.map(|c| c.ceiling),
                version: VERSION,
            })
        }
        Command::Asymptotics { .. } => {
            let rep: AsymptoticsReport = match cfg.options.mode {
                Mode::Cramer => {
                    let sol = adjustment_coefficient(&model)?;
                    cramer_curve(&model, &sol, &cfg.run.u_grid, &mc, cfg.run.time_cap)?
                }
                Mode::Heavy => heavy_tail_curve(&model, &cfg.run.u_grid, cfg.run.horizon, &mc)?,
            };
            if let Some(w) = &rep.warning {
                eprintln!("warning: {w}");
            }
            #[derive(Serialize)]
            struct Row {
                u: f64,
                psi_hat: f64,
                stderr: f64,
                scaled: f64,
                target: f64,
                seed: u64,
                n: usize,
                version: &'static str,
            }
            sink.csv(rep.points.iter().map(|p| Row {
                u: p.u,
                psi_hat: p.psi_hat,
                stderr: p.stderr,
                scaled: p.scaled,
                target: p.target,
                seed: prov.seed,
                n: prov.n,
                version: VERSION,
            }))
        }
        Command::Stationary => {
            #[derive(Serialize)]
            struct Targets {
                mean: f64,
                var: f64,
                law: Option<StationarySpec>,
            }
            #[derive(Serialize)]
            struct Out {
                ks: f64,
                mean: f64,
                var: f64,
                targets: Targets,
                burn_in: f64,
                thin: f64,
            }
            let mut rng = stream(cfg.run.seed, 0);
            let c = ks_stationary_check(
                &model.hawkes,
                model.lambda0,
                cfg.options.burn_in,
                cfg.run.n,
                cfg.options.thin,
                &mut rng,
            )?;
            sink.json(&Tagged {
                body: Out {
                    ks: c.ks,
                    mean: c.mean,
                    var: c.var,
                    targets: Targets {
                        mean: c.target_mean,
                        var: c.target_var,
                        law: stationary_spec(&model.hawkes).ok(),
                    },
                    burn_in: cfg.options.burn_in,
                    thin: cfg.options.thin,
                },
                provenance: &prov,
            })
        }
        Command::Recurrence => {
            let level = cfg
                .options
                .level
                .unwrap_or_else(|| model.hawkes.stationary_mean_intensity());
            let mut rng = stream(derive_seed(cfg.run.seed, 1), 0);
            let s = sample_recurrence_times(&model.hawkes, level, cfg.run.n, &mut rng)?;
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let d = recurrence_mgf_diagnostic(&s, 0.5 / mean);
            eprintln!(
                "heuristic MGF diagnostic at q={:.4}: half {:.4}±{:.4}, full {:.4}±{:.4}, stable={}",
                d.q, d.half.value, d.half.stderr, d.full.value, d.full.stderr, d.stable
            );
            #[derive(Serialize)]
            struct Row {
                s1: f64,
                level: f64,
                seed: u64,
                n: usize,
                version: &'static str,
            }
            sink.csv(s.into_iter().map(|s1| Row {
                s1,
                level,
                seed: prov.seed,
                n: prov.n,
                version: VERSION,
            }))
        }
        Command::Verify { .. } => unreachable!("handled above"),
    }
}

fn verify(cli: &Cli, only: &[u8]) -> Result<(), Failure> {
    let mut ctx = VerifyContext::new(cli.seed.unwrap_or(1));
    ctx.executor = executor(cli.workers);
    let ids: Vec<u8> = if only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        only.to_vec()
    };
    let mut results = Vec::new();
    for id in ids {
        let r = run_criterion(id, &ctx)
            .ok_or_else(|| Failure::Validation(format!("unknown criterion {id}")))?;
        eprintln!(
            "[{}] {:>2} {} ({:.1}s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.detail
        );
        results.push(r);
    }
    let report = VerifyReport {
        seed: ctx.seed,
        all_passed: results.iter().all(|r| r.passed),
        results,
    };
    Sink::open(cli.out.as_deref())?.json(&Tagged {
        body: report,
        provenance: &Provenance {
            seed: ctx.seed,
            n: 0,
            version: VERSION,
        },
    })
}
