use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigFile, ExperimentConfig, ExperimentKind, SequenceSpec};
use super::summary::{BoundRow, BoundRule, RunSummary, Summary};
use super::trace::{records_from_ledger, write_trace, TraceRecord};
use crate::adversary::{self, AdversarySequence, ADVERSARY_CONSTANTS};
use crate::bounds;
use crate::error::{Error, Result};
use crate::games::{simulate, tsogd_players, UpdateOrder};
use crate::geometry::{ConvexBody, Point};
use crate::losses::{
    builtin_loss_on, default_half_width, random_builtin_sequence, Constants, LossFunction,
    StochasticGradientOracle,
};
use crate::minimizers::{
    NewtonConfig, OnlineLearner, RegretLedger, StochasticConfig, StochasticTsogd, TimeSmoothedNewton,
    Tsogd, TsogdConfig,
};
use crate::parallel::{with_threads, Execution};

/// Command-line overrides for [`run_config`].
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Replaces every experiment's seed list.
    pub seed_override: Option<Vec<u64>>,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    /// Replaces the config's output directory.
    pub out_dir: Option<PathBuf>,
    pub execution: Execution,
}

/// Where a completed [`run_config`] wrote its files and which bounds failed.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub summaries: Vec<PathBuf>,
    pub failures: Vec<(String, BoundRow)>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A run's traces and summary before they are written.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: Summary,
    /// `(file name, rows)` for every trace named in the summary.
    pub traces: Vec<(String, Vec<TraceRecord>)>,
}

/// Per-seed result before aggregation.
struct SeedOutput {
    run: RunSummary,
    traces: Vec<(String, Vec<TraceRecord>)>,
    /// Deterministic and exact rows for this seed.
    rows: Vec<BoundRow>,
    /// Regret sample and its bound for expectation rows.
    sample: Option<(f64, f64)>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "results";

/// Validates the config, runs every experiment and writes traces and
/// summaries. Errors mean the config is unusable; bound failures are listed
/// in the report.
pub fn run_config(config: &ConfigFile, options: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    let out_dir = options
        .out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let plan: Vec<(&ExperimentConfig, Vec<u64>)> = config
        .experiments
        .iter()
        .map(|e| (e, options.seed_override.clone().unwrap_or_else(|| e.seed_list())))
        .collect();
    for (exp, seeds) in &plan {
        if seeds.is_empty() {
            return Err(Error::Config(format!("experiment {:?}: seed list is empty", exp.name)));
        }
        for seed in seeds {
            prepare(exp, *seed)?;
        }
    }

    let mut report = RunReport::default();
    for (exp, seeds) in plan {
        let output = with_threads(options.threads, || run_experiment(exp, &seeds, options.execution))?;
        let dir = out_dir.join(&exp.name);
        std::fs::create_dir_all(&dir)?;
        for (name, records) in &output.traces {
            write_trace(&dir.join(name), records)?;
        }
        let path = dir.join("summary.json");
        output.summary.write(&path)?;
        report.failures.extend(
            output
                .summary
                .failures()
                .map(|r| (exp.name.clone(), r.clone())),
        );
        report.summaries.push(path);
    }
    Ok(report)
}

/// Runs one experiment over `seeds` without touching the filesystem.
pub fn run_experiment(exp: &ExperimentConfig, seeds: &[u64], execution: Execution) -> Result<ExperimentOutput> {
    exp.validate()?;
    let outputs = execution.try_map(seeds.len(), |i| run_seed(exp, seeds[i]))?;
    let mut bounds = Vec::new();

    // per-seed rows: report the seed with the least slack
    let names: Vec<String> = outputs
        .first()
        .map(|o| o.rows.iter().map(|r| r.name.clone()).collect())
        .unwrap_or_default();
    for (k, name) in names.iter().enumerate() {
        let (seed, worst) = outputs
            .iter()
            .zip(seeds)
            .map(|(o, s)| (*s, &o.rows[k]))
            .min_by(|a, b| a.1.margin().total_cmp(&b.1.margin()))
            .expect("at least one seed");
        let mut row = worst.clone();
        row.name = format!("{name} (worst seed {seed})");
        row.samples = outputs.len();
        bounds.push(row);
    }
    let samples: Vec<(f64, f64)> = outputs.iter().filter_map(|o| o.sample).collect();
    if !samples.is_empty() {
        let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
        // per-seed bounds can differ for random sequences; use the tightest
        let theoretical = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let (name, rule) = match exp.kind {
            ExperimentKind::AdversaryVsTsogd => (
                "mean local regret >= (1/(4w))*floor(T/(2w))",
                BoundRule::MeanLower,
            ),
            _ => ("mean local regret <= (8*beta*M + sigma^2)*T/w", BoundRule::MeanUpper),
        };
        bounds.push(BoundRow::from_samples(name, rule, &values, theoretical));
    }

    let mut traces = Vec::new();
    let mut runs = Vec::with_capacity(outputs.len());
    for o in outputs {
        traces.extend(o.traces);
        runs.push(o.run);
    }
    Ok(ExperimentOutput {
        summary: Summary {
            experiment: exp.name.clone(),
            kind: exp.kind,
            horizon: exp.horizon,
            window: exp.window,
            assert_bounds: exp.assert_bounds && exp.order == UpdateOrder::Simultaneous,
            seeds: seeds.to_vec(),
            runs,
            bounds,
        },
        traces,
    })
}

/// The learner and loss sequence of one seed, fully validated.
enum Prepared {
    Tsogd(Tsogd, Vec<LossFunction>),
    Stochastic(StochasticTsogd, Vec<StochasticGradientOracle>, f64),
    Newton(TimeSmoothedNewton, Vec<LossFunction>),
    Adversary(Tsogd, AdversarySequence),
    Game,
}

fn config_error(exp: &ExperimentConfig, seed: u64, e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(format!("experiment {:?}, seed {seed}: {other}", exp.name)),
    }
}

fn sequence(exp: &ExperimentConfig, body: &ConvexBody, seed: u64) -> Result<Vec<LossFunction>> {
    let n = body.dim();
    match exp.sequence.as_ref().expect("validated") {
        SequenceSpec::Builtin {
            name,
            params,
            half_width,
        } => {
            let r = match (half_width, body.sup_extent()) {
                (Some(r), _) => *r,
                (None, Some(extent)) => extent,
                (None, None) => default_half_width(name)?,
            };
            let f = builtin_loss_on(name, params, n, r)?;
            Ok(vec![f; exp.horizon])
        }
        SequenceSpec::Random { pool } => {
            let r = body.sup_extent().unwrap_or(1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_builtin_sequence(pool, n, r, exp.horizon, &mut rng)
        }
    }
}

fn start(exp: &ExperimentConfig) -> Result<Option<Point>> {
    exp.start.clone().map(Point::new).transpose()
}

fn prepare(exp: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    prepare_inner(exp, seed).map_err(|e| config_error(exp, seed, e))
}

fn prepare_inner(exp: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let w = exp.window;
    match exp.kind {
        ExperimentKind::Tsogd => {
            let body = exp.body.as_ref().expect("validated").build()?;
            let losses = sequence(exp, &body, seed)?;
            crate::losses::check_sequence_on(&losses, &body)?;
            let mut config = TsogdConfig::new(body, w);
            config.eta = exp.eta;
            config.delta = exp.delta;
            config.start = start(exp)?;
            if let Some(cap) = exp.safety_cap {
                config.safety_cap = cap;
            }
            let learner = Tsogd::new(config, Constants::uniform(&losses))?;
            Ok(Prepared::Tsogd(learner, losses))
        }
        ExperimentKind::Stochastic => {
            let body = exp.body.as_ref().expect("validated").build()?;
            let losses = sequence(exp, &body, seed)?;
            crate::losses::check_sequence_on(&losses, &body)?;
            let constants = Constants::uniform(&losses);
            if let Some(eta) = exp.eta {
                let beta = constants.smoothness;
                if beta > 0.0 && eta > 1.0 / beta {
                    return Err(Error::Config(format!(
                        "experiment {:?}: eta = {eta} violates eta <= 1/beta = {}",
                        exp.name,
                        1.0 / beta
                    )));
                }
            }
            let sigma = exp.sigma.unwrap_or(0.0);
            let mut config = StochasticConfig::new(body.dim(), w).noise(sigma, seed);
            config.eta = exp.eta;
            config.start = start(exp)?;
            let learner = StochasticTsogd::new(config, constants)?;
            let oracles = losses
                .into_iter()
                .enumerate()
                .map(|(t, f)| StochasticGradientOracle::with_stream(f, sigma, seed, t as u64 + 1))
                .collect::<Result<Vec<_>>>()?;
            Ok(Prepared::Stochastic(learner, oracles, sigma))
        }
        ExperimentKind::Newton => {
            let body = exp.body.as_ref().expect("validated").build()?;
            let losses = sequence(exp, &body, seed)?;
            crate::losses::check_sequence_on(&losses, &body)?;
            if let Some(f) = losses.iter().find(|f| !f.has_hessian()) {
                return Err(Error::Precondition(format!("loss {f:?} has no Hessian oracle")));
            }
            let mut config = NewtonConfig::new(body.dim(), w);
            config.delta = exp.delta;
            config.start = start(exp)?;
            if let Some(cap) = exp.safety_cap {
                config.safety_cap = cap;
            }
            let learner = TimeSmoothedNewton::new(config, Constants::uniform(&losses))?;
            Ok(Prepared::Newton(learner, losses))
        }
        ExperimentKind::AdversaryVsTsogd => {
            let seq = adversary::generate(exp.horizon, w, seed)?;
            let mut config = TsogdConfig::new(AdversarySequence::body(), w);
            config.eta = exp.eta;
            config.delta = exp.delta;
            config.start = start(exp)?;
            if let Some(cap) = exp.safety_cap {
                config.safety_cap = cap;
            }
            let learner = Tsogd::new(config, ADVERSARY_CONSTANTS)?;
            Ok(Prepared::Adversary(learner, seq))
        }
        ExperimentKind::Game => {
            let game = exp.game.as_ref().expect("validated").build()?;
            tsogd_players(&game, w)?;
            Ok(Prepared::Game)
        }
    }
}

fn play<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    losses: impl IntoIterator<Item = LossFunction>,
) -> Result<Vec<Point>> {
    let mut iterates = Vec::new();
    for f in losses {
        iterates.push(learner.current().clone());
        learner.observe(f)?;
    }
    Ok(iterates)
}

fn single_run(seed: u64, ledger: &RegretLedger, iterates: &[Point]) -> (RunSummary, Vec<(String, Vec<TraceRecord>)>) {
    let name = format!("seed-{seed}.csv");
    let records = records_from_ledger(&format!("seed-{seed}"), ledger, Some(iterates));
    let run = RunSummary {
        seed,
        traces: vec![name.clone()],
        regrets: vec![ledger.regret()],
        total_steps: vec![ledger.total_steps()],
        calls: vec![ledger.calls()],
        phi_total: None,
        equilibrium: None,
    };
    (run, vec![(name, records)])
}

fn run_seed(exp: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let w = exp.window;
    let t = exp.horizon;
    match prepare(exp, seed)? {
        Prepared::Tsogd(mut learner, losses) => {
            let iterates = play(&mut learner, losses)?;
            let (run, traces) = single_run(seed, learner.ledger(), &iterates);
            let rows = vec![
                BoundRow::new(
                    "local regret <= (delta + 2L)^2*T/w^2",
                    BoundRule::DeterministicUpper,
                    learner.ledger().regret(),
                    learner.regret_bound(),
                ),
                BoundRow::new(
                    "inner steps <= M/(delta^2*(eta - beta*eta^2/2))*(2Tw + w^2)",
                    BoundRule::DeterministicUpper,
                    learner.ledger().total_steps() as f64,
                    learner.step_bound(),
                ),
            ];
            Ok(SeedOutput {
                run,
                traces,
                rows,
                sample: None,
            })
        }
        Prepared::Stochastic(mut learner, oracles, sigma) => {
            let mut iterates = Vec::with_capacity(oracles.len());
            for o in oracles {
                iterates.push(learner.current().clone());
                learner.observe_oracle(o)?;
            }
            let (run, traces) = single_run(seed, learner.ledger(), &iterates);
            let rows = vec![BoundRow::new(
                "stochastic samples == sum_t min(t, w)",
                BoundRule::Exact,
                learner.ledger().calls().stochastic as f64,
                bounds::stochastic_sample_count(t, w) as f64,
            )];
            Ok(SeedOutput {
                run,
                traces,
                rows,
                sample: Some((learner.ledger().regret(), learner.regret_bound(sigma))),
            })
        }
        Prepared::Newton(mut learner, losses) => {
            let iterates = play(&mut learner, losses)?;
            let (mut run, traces) = single_run(seed, learner.ledger(), &iterates);
            run.phi_total = Some(learner.ledger().phi_total());
            let mut rows = vec![
                BoundRow::new(
                    "sum of Phi <= C1*T/w^2",
                    BoundRule::DeterministicUpper,
                    learner.ledger().phi_total(),
                    learner.phi_bound(),
                ),
                BoundRow::new(
                    "inner steps <= (2*beta*M/delta^3)*(2Tw^2 + w^3)",
                    BoundRule::DeterministicUpper,
                    learner.ledger().total_steps() as f64,
                    learner.step_bound(),
                ),
            ];
            let Constants { bound, smoothness: beta, .. } = *learner.constants();
            if learner.delta() == beta {
                rows.push(BoundRow::new(
                    "inner steps <= (6M/beta^2)*T*w^2",
                    BoundRule::DeterministicUpper,
                    learner.ledger().total_steps() as f64,
                    bounds::newton_step_bound_coarse(bound, beta, t, w),
                ));
            }
            Ok(SeedOutput {
                run,
                traces,
                rows,
                sample: None,
            })
        }
        Prepared::Adversary(mut learner, seq) => {
            let iterates = play(&mut learner, seq.to_losses())?;
            let (run, traces) = single_run(seed, learner.ledger(), &iterates);
            Ok(SeedOutput {
                run,
                traces,
                rows: Vec::new(),
                sample: Some((learner.ledger().regret(), seq.expected_lower_bound())),
            })
        }
        Prepared::Game => {
            let game = exp.game.as_ref().expect("validated").build()?;
            let players = tsogd_players(&game, w)?;
            let outcome = simulate(&game, players, t, exp.order, None)?;
            let report = outcome.certify(&game)?;
            let mut traces = Vec::new();
            for (i, ledger) in outcome.ledgers.iter().enumerate() {
                let xs: Vec<Point> = outcome.history.iter().map(|j| j[i].clone()).collect();
                let name = format!("seed-{seed}-player-{i}.csv");
                traces.push((
                    name,
                    records_from_ledger(&format!("seed-{seed}-player-{i}"), ledger, Some(&xs)),
                ));
            }
            let rows = vec![BoundRow::new(
                "min over t in [w, T] of equilibrium epsilon <= sqrt(sum_i R_i/(T - w))",
                BoundRule::DeterministicUpper,
                report.epsilon,
                report.theorem_bound.expect("certify attaches the bound"),
            )];
            let run = RunSummary {
                seed,
                traces: traces.iter().map(|(n, _)| n.clone()).collect(),
                regrets: outcome.regrets(),
                total_steps: outcome.ledgers.iter().map(|l| l.total_steps()).collect(),
                calls: outcome.ledgers.iter().map(|l| l.calls()).collect(),
                phi_total: None,
                equilibrium: Some(report),
            };
            Ok(SeedOutput {
                run,
                traces,
                rows,
                sample: None,
            })
        }
    }
}

/// Writes nothing; used by tests and the CLI to check a config up front.
pub fn validate_config(config: &ConfigFile, seed_override: Option<&[u64]>) -> Result<()> {
    config.validate()?;
    for exp in &config.experiments {
        let seeds = seed_override.map(<[u64]>::to_vec).unwrap_or_else(|| exp.seed_list());
        for seed in seeds {
            prepare(exp, seed)?;
        }
    }
    Ok(())
}

/// The directory a summary's trace names are relative to.
pub fn summary_dir(summary_path: &Path) -> PathBuf {
    summary_path.parent().map(Path::to_path_buf).unwrap_or_default()
}
