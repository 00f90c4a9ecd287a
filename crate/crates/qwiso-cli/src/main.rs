//! Command-line surface over the simulator and experiment drivers. Every
//! subcommand is a pure function of its flags plus the seed, so rerunning
//! an invocation reproduces its output files byte for byte.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use qwiso::experiments::{
    resource_csv, resource_estimate, run_accuracy_sweep, run_eps_sweep, run_noise_sweep,
    run_scaling,
};
use qwiso::graph::{gen_no_instance, gen_yes_instance, Instance};
use qwiso::lower_bound::{
    advantage_csv_header, build_hard_no, transcript_advantage, BaselineAdapter,
    CollisionMismatch, GSideProbe, Strategy,
};
use qwiso::pipeline::{baseline_decide, decide, PipelineConfig};
use qwiso::product::{chain_spectrum, spectrum_csv};
use qwiso::rng;
use qwiso::spectral::{qpe_spectrum_sample, spectral_decide, SpectralConfig};
use qwiso::szegedy::{
    chain_reference_phases, depolarized_prob, trajectory_csv, walk_eigenphases, walk_probe,
    ProbeConvention, EIGENPHASE_SIZE_LIMIT,
};

#[derive(Parser)]
#[command(
    name = "qwiso",
    about = "Quantum-walk approximate graph isomorphism: decision pipeline, \
             baselines, and batch experiments",
    version
)]
struct Cli {
    /// Master seed; every stream the run uses derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output (CSV or JSON) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` defaults file (# comments); explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LabelArg {
    Yes,
    No,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Stationary,
    Cesaro,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Collision,
    Baseline,
    Gside,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a promise instance and print it as one JSON line.
    Gen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        label: Option<LabelArg>,
    },
    /// Run the full decision pipeline on a fresh instance; one verdict
    /// JSON line.
    Decide {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        label: Option<LabelArg>,
    },
    /// Run the classical relabeling baseline; one verdict JSON line.
    Baseline {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        label: Option<LabelArg>,
        /// Total query budget the baseline may spend.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Matching-set probability trajectory of the bare walk; CSV.
    WalkProbe {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        t_max: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
        /// Per-gate depolarizing rate for the noisy column.
        #[arg(long)]
        p_err: Option<f64>,
    },
    /// Product-chain spectrum CSV, plus an eigenphase cross-check at
    /// sizes small enough to diagonalize the walk.
    SpectrumCheck {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Accuracy of pipeline, walk-only variant, and budget-matched
    /// baseline per size; CSV.
    Accuracy {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Budget search to a target accuracy per size for both deciders,
    /// with log-log exponent fits; CSV plus a fit JSON line.
    Scaling {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Accuracy and query totals across tolerance values at fixed n; CSV.
    EpsSweep {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        eps_list: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Simulated vs analytic accuracy under depolarizing noise; CSV.
    NoiseSweep {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        p_err_list: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Distinguishing advantage of classical strategies against the TV
    /// bound over an (n, q) grid; CSV.
    LbAdvantage {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        q_list: Option<Vec<u64>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Adversarial far pair indistinguishable from a close pair; prints
    /// the shared transcript CSV and a summary JSON line.
    LbHard {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Sampled-spectrum estimate CSV for one graph plus the spectral
    /// comparison verdict on an instance pair.
    Spectral {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        label: Option<LabelArg>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Qubit, query, and gate estimates per size; CSV.
    Resources {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

/// Key=value defaults loaded from --config. Values are raw strings;
/// typed access parses on demand so unused malformed keys stay harmless.
struct Config(BTreeMap<String, String>);

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Config, String> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("config {}: {e}", path.display()))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or(format!(
                    "config {} line {}: expected key = value",
                    path.display(),
                    idx + 1
                ))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
        }
    }

    fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
        }
    }

    /// Flag beats config beats built-in default.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    fn pick_list<T: FromStr>(
        &self,
        flag: Option<Vec<T>>,
        key: &str,
        default: &[T],
    ) -> Result<Vec<T>, String>
    where
        T: Clone,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get_list(key)?.unwrap_or_else(|| default.to_vec())),
        }
    }

    /// Apply any pipeline knob keys present in the file.
    fn apply_pipeline_keys(&self, cfg: &mut PipelineConfig) -> Result<(), String> {
        for key in [
            "r",
            "threshold",
            "s",
            "search_rounds",
            "walk_steps_per_round",
            "ae_grid",
            "decide_restarts",
            "use_score_ae",
        ] {
            if let Some(raw) = self.0.get(key) {
                cfg.set(key, raw).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }
}

/// Primary output sink: --out file when given, stdout otherwise.
struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    /// Write the primary payload (CSV or JSON line).
    fn primary(&self, payload: &str) -> Result<(), String> {
        match &self.out {
            Some(path) => fs::write(path, payload)
                .map_err(|e| format!("writing {}: {e}", path.display())),
            None => {
                print!("{payload}");
                Ok(())
            }
        }
    }

    /// Companion diagnostics line: stdout when the primary went to a
    /// file, stderr otherwise, so piped primary output stays clean.
    fn diagnostics(&self, line: impl Display) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn gen_instance(n: usize, epsilon: f64, label: LabelArg, seed: u64) -> qwiso::error::Result<Instance> {
    match label {
        LabelArg::Yes => gen_yes_instance(n, epsilon, seed),
        LabelArg::No => gen_no_instance(n, epsilon, seed),
    }
}

fn strategy_of(arg: StrategyArg) -> Box<dyn Strategy> {
    match arg {
        StrategyArg::Collision => Box::new(CollisionMismatch),
        StrategyArg::Baseline => Box::new(BaselineAdapter),
        StrategyArg::Gside => Box::new(GSideProbe),
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let config = Config::load(cli.config.as_ref())?;
    let seed = config.pick(cli.seed, "seed", 7u64)?;
    let sink = Sink { out: cli.out.clone() };
    let fail = |e: qwiso::Error| e.to_string();

    match cli.cmd {
        Cmd::Gen { n, epsilon, label } => {
            let n = config.pick(n, "n", 12)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let label = label.unwrap_or(LabelArg::Yes);
            let inst = gen_instance(n, epsilon, label, seed).map_err(fail)?;
            let json = serde_json::to_string(&inst).map_err(|e| e.to_string())?;
            sink.primary(&format!("{json}\n"))?;
        }
        Cmd::Decide { n, epsilon, label } => {
            let n = config.pick(n, "n", 12)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let label = label.unwrap_or(LabelArg::Yes);
            let mut cfg = PipelineConfig::defaults(n, epsilon).map_err(fail)?;
            config.apply_pipeline_keys(&mut cfg)?;
            let mut cell = rng::cell(seed, &[101]);
            let iseed: u64 = rand_u64(&mut cell);
            let dseed: u64 = rand_u64(&mut cell);
            let inst = gen_instance(n, epsilon, label, iseed).map_err(fail)?;
            let (verdict, _) = decide(&inst.g, &inst.h, epsilon, dseed, &cfg).map_err(fail)?;
            let json = serde_json::to_string(&verdict).map_err(|e| e.to_string())?;
            sink.primary(&format!("{json}\n"))?;
        }
        Cmd::Baseline { n, epsilon, label, budget } => {
            let n = config.pick(n, "n", 12)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let budget = config.pick(budget, "budget", 2000)?;
            let label = label.unwrap_or(LabelArg::Yes);
            let mut cell = rng::cell(seed, &[102]);
            let iseed: u64 = rand_u64(&mut cell);
            let dseed: u64 = rand_u64(&mut cell);
            let inst = gen_instance(n, epsilon, label, iseed).map_err(fail)?;
            let (verdict, _) =
                baseline_decide(&inst.g, &inst.h, epsilon, budget, dseed).map_err(fail)?;
            let json = serde_json::to_string(&verdict).map_err(|e| e.to_string())?;
            sink.primary(&format!("{json}\n"))?;
        }
        Cmd::WalkProbe { n, epsilon, t_max, trials, convention, p_err } => {
            let n = config.pick(n, "n", 8)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let t_max = config.pick(t_max, "t_max", 30)?;
            let trials = config.pick(trials, "trials", 20)?;
            let p_err = config.pick(p_err, "p_err", 0.0)?;
            let convention = convention.unwrap_or(ConventionArg::Cesaro);
            let mut cell = rng::cell(seed, &[103]);
            let iseed: u64 = rand_u64(&mut cell);
            let inst = gen_yes_instance(n, epsilon, iseed).map_err(fail)?;
            let pi = inst.planted.as_ref().expect("planted pairing on a close pair");
            let conv = match convention {
                ConventionArg::Stationary => ProbeConvention::Stationary,
                ConventionArg::Cesaro => ProbeConvention::VertexStartCesaro,
            };
            let ideal =
                walk_probe(&inst.g, &inst.h, pi, t_max, conv, trials, &mut cell).map_err(fail)?;
            let gates = (5.0 * (n as f64).log2()).ceil() as u32;
            let noisy: Vec<f64> = ideal
                .iter()
                .enumerate()
                .map(|(t, &p)| depolarized_prob(p, t as u32, p_err, gates, 1.0 / n as f64))
                .collect();
            sink.primary(&trajectory_csv(&ideal, &noisy))?;
        }
        Cmd::SpectrumCheck { n, epsilon } => {
            let n = config.pick(n, "n", 4)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let mut cell = rng::cell(seed, &[104]);
            let iseed: u64 = rand_u64(&mut cell);
            let inst = gen_yes_instance(n, epsilon, iseed).map_err(fail)?;
            let spectrum = chain_spectrum(&inst.g, &inst.h).map_err(fail)?;
            sink.primary(&spectrum_csv(&spectrum))?;
            if n <= EIGENPHASE_SIZE_LIMIT {
                let walk = walk_eigenphases(&inst.g, &inst.h).map_err(fail)?;
                let reference = chain_reference_phases(&inst.g, &inst.h).map_err(fail)?;
                let deviation = walk
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                sink.diagnostics(format!(
                    "{{\"eigenphase_pairs\":{},\"max_phase_deviation\":{:e}}}",
                    walk.len(),
                    deviation
                ));
            }
        }
        Cmd::Accuracy { n_list, epsilon, trials } => {
            let n_list = config.pick_list(n_list, "n_list", &[6, 8, 10])?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let trials = config.pick(trials, "trials", 50)?;
            let (_, csv) = run_accuracy_sweep(&n_list, epsilon, trials, seed).map_err(fail)?;
            sink.primary(&csv)?;
        }
        Cmd::Scaling { n_list, epsilon, target } => {
            let n_list = config.pick_list(n_list, "n_list", &[6, 8, 10, 12, 14, 16, 18, 20])?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let target = config.pick(target, "target", 0.8)?;
            let (report, csv) = run_scaling(&n_list, epsilon, target, seed).map_err(fail)?;
            sink.primary(&csv)?;
            // json! maps a degenerate fit (NaN from a single-point list) to
            // null instead of emitting unparseable output.
            sink.diagnostics(
                serde_json::json!({
                    "quantum_exponent": report.quantum_exponent,
                    "quantum_coeff": report.quantum_coeff,
                    "classical_exponent": report.classical_exponent,
                    "classical_coeff": report.classical_coeff,
                    "unmet": report.unmet,
                })
                .to_string(),
            );
        }
        Cmd::EpsSweep { n, eps_list, trials } => {
            let n = config.pick(n, "n", 14)?;
            let eps_list =
                config.pick_list(eps_list, "eps_list", &[0.01, 0.02, 0.05, 0.1, 0.15])?;
            let trials = config.pick(trials, "trials", 50)?;
            let (_, csv) = run_eps_sweep(n, &eps_list, trials, seed).map_err(fail)?;
            sink.primary(&csv)?;
        }
        Cmd::NoiseSweep { n_list, p_err_list, trials } => {
            let n_list = config.pick_list(n_list, "n_list", &[6, 10, 14])?;
            let p_err_list =
                config.pick_list(p_err_list, "p_err_list", &[0.0, 1e-4, 1e-3, 1e-2])?;
            let trials = config.pick(trials, "trials", 120)?;
            let (_, csv) = run_noise_sweep(&n_list, &p_err_list, trials, seed).map_err(fail)?;
            sink.primary(&csv)?;
        }
        Cmd::LbAdvantage { n_list, q_list, epsilon, trials, strategy } => {
            let n_list = config.pick_list(n_list, "n_list", &[12, 16, 20])?;
            let q_list = config.pick_list(q_list, "q_list", &[10, 20, 40])?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let trials = config.pick(trials, "trials", 2000)?;
            let strategies: Vec<Box<dyn Strategy>> = match strategy {
                Some(arg) => vec![strategy_of(arg)],
                None => vec![Box::new(CollisionMismatch), Box::new(BaselineAdapter)],
            };
            let mut csv = String::from(advantage_csv_header());
            for &n in &n_list {
                for &q in &q_list {
                    for strat in &strategies {
                        let report = transcript_advantage(
                            n, epsilon, q, strat.as_ref(), trials, seed, false,
                        )
                        .map_err(fail)?;
                        csv.push_str(&report.csv_row());
                    }
                }
            }
            sink.primary(&csv)?;
        }
        Cmd::LbHard { n, epsilon, budget, strategy } => {
            let n = config.pick(n, "n", 8)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let budget = config.pick(budget, "budget", 20)?;
            let strategy = strategy_of(strategy.unwrap_or(StrategyArg::Gside));
            let hard = build_hard_no(n, epsilon, strategy.as_ref(), budget, seed).map_err(fail)?;
            sink.primary(&hard.counter_yes.transcript_csv())?;
            sink.diagnostics(format!(
                "{{\"transcripts_identical\":{},\"answer_close\":\"{:?}\",\
                 \"answer_far\":\"{:?}\",\"far_edges\":{}}}",
                hard.transcripts_identical(),
                hard.answer_yes,
                hard.answer_no,
                hard.h_no.edge_count()
            ));
        }
        Cmd::Spectral { n, epsilon, label, alpha, beta } => {
            let n = config.pick(n, "n", 10)?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let alpha = config.pick(alpha, "alpha", 0.5)?;
            let beta = config.pick(beta, "beta", 3.0)?;
            let label = label.unwrap_or(LabelArg::Yes);
            let cfg = SpectralConfig::defaults(n, alpha, beta).map_err(fail)?;
            let mut cell = rng::cell(seed, &[105]);
            let iseed: u64 = rand_u64(&mut cell);
            let inst = gen_instance(n, epsilon, label, iseed).map_err(fail)?;
            let estimate = qpe_spectrum_sample(&inst.g, &cfg, &mut cell).map_err(fail)?;
            sink.primary(&estimate.csv())?;
            let verdict = spectral_decide(&inst.g, &inst.h, &cfg, &mut cell).map_err(fail)?;
            let json = serde_json::to_string(&verdict).map_err(|e| e.to_string())?;
            sink.diagnostics(json);
        }
        Cmd::Resources { n_list, epsilon } => {
            let n_list =
                config.pick_list(n_list, "n_list", &[6, 8, 10, 12, 14, 16, 18, 20])?;
            let epsilon = config.pick(epsilon, "epsilon", 0.05)?;
            let mut estimates = Vec::new();
            for &n in &n_list {
                estimates.push(resource_estimate(n, epsilon).map_err(fail)?);
            }
            sink.primary(&resource_csv(&estimates))?;
        }
    }
    Ok(())
}

fn rand_u64(stream: &mut qwiso::rng::Stream) -> u64 {
    use rand::Rng;
    stream.gen()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
