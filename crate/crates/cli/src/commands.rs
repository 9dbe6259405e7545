use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seqtomo::bench::{self, SweepCell};
use seqtomo::rl::{reconstruct_rl, rl_disentangle, RlConfig, RlRecord};
use seqtomo::vqc::{disentangle, reconstruct, DisentangleRecord, OptimizerConfig};
use seqtomo::{seeded_rng, stream_rng, StateVector};

use crate::config::{FileValues, IntList, RealList};
use crate::failure::Failure;
use crate::{
    BenchCommand, Cli, Command, GenStateArgs, ReconstructArgs, RlArgs, SgdArgs, StateSource,
    SweepArgs, Table1Args, VqcArgs,
};

pub const OUTPUT_DIR_ENV: &str = "SEQTOMO_OUTPUT_DIR";

/// A run record as written to disk, tagged with the method that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunRecord {
    Vqc(DisentangleRecord),
    Rl(RlRecord),
}

/// Checkpoint of one sweep cell, kept only while the settings match.
#[derive(Debug, Serialize, Deserialize)]
struct CellCheckpoint {
    config: OptimizerConfig,
    cell: SweepCell,
}

const GLOBAL_KEYS: [&str; 2] = ["output-dir", "jobs"];

struct Context {
    out_dir: PathBuf,
    file: FileValues,
}

impl Context {
    fn new(cli_out: Option<PathBuf>, config: Option<&Path>, keys: &[&str]) -> Result<Self, Failure> {
        let allowed: Vec<&str> = keys.iter().chain(GLOBAL_KEYS.iter()).copied().collect();
        let file = FileValues::load(config, &allowed)?;
        let out_dir = match file.pick(cli_out, "output-dir")? {
            Some(dir) => dir,
            None => std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        fs::create_dir_all(&out_dir).map_err(|e| {
            Failure::run("io", format!("cannot create {}: {e}", out_dir.display()))
        })?;
        Ok(Self { out_dir, file })
    }

    fn path(&self, explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit.unwrap_or_else(|| self.out_dir.join(default_name))
    }
}

fn keys_for(command: &Command) -> &'static [&'static str] {
    match command {
        Command::GenState(_) => &["qubits", "seed", "haar", "out"],
        Command::Vqc(_) => &[
            "state", "qubits", "seed", "r", "tol", "precision", "max-epochs", "learning-rate",
            "progress-every",
        ],
        Command::Rl(_) => &[
            "state", "qubits", "seed", "episode-len", "dataset", "epochs", "reward-stop",
            "learning-rate", "hidden",
        ],
        Command::Reconstruct(_) => &["record", "reference", "out"],
        Command::Bench(BenchCommand::Table1(_)) => &["qubits", "r", "seed", "tol", "max-epochs"],
        Command::Bench(BenchCommand::Sweep(_)) => {
            &["qubits", "precisions", "seeds", "seed", "r", "max-epochs"]
        }
        Command::Bench(BenchCommand::Sgd(_)) => {
            &["qubits", "r", "seeds", "seed", "tol", "max-epochs"]
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Context::new(cli.output_dir, cli.config.as_deref(), keys_for(&cli.command))?;
    if let Some(jobs) = ctx.file.pick(cli.jobs, "jobs")? {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::run("internal", e.to_string()))?;
    }
    match cli.command {
        Command::GenState(a) => gen_state(&ctx, a),
        Command::Vqc(a) => vqc(&ctx, a),
        Command::Rl(a) => rl(&ctx, a),
        Command::Reconstruct(a) => reconstruct_cmd(&ctx, a),
        Command::Bench(BenchCommand::Table1(a)) => table1(&ctx, a),
        Command::Bench(BenchCommand::Sweep(a)) => sweep(&ctx, a),
        Command::Bench(BenchCommand::Sgd(a)) => sgd(&ctx, a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::run("internal", e.to_string()))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Failure::run("io", format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not valid: {e}", path.display())))
}

fn write_csv(path: &Path, write: impl FnOnce(fs::File) -> seqtomo::Result<()>) -> Result<(), Failure> {
    let file = fs::File::create(path)
        .map_err(|e| Failure::run("io", format!("cannot write {}: {e}", path.display())))?;
    write(file)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn gen_state(ctx: &Context, a: GenStateArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let n = f.pick_required(a.qubits, "qubits")?;
    let seed = f.pick_required(a.seed, "seed")?;
    let haar = f.flag(a.haar, "haar")?;
    let mut rng = seeded_rng(seed);
    let psi = if haar {
        StateVector::random_haar(n, &mut rng)?
    } else {
        StateVector::random(n, &mut rng)?
    };
    let path = ctx.path(f.pick(a.out, "out")?, "state.json");
    write_json(&path, &psi)?;
    println!("{}", path.display());
    Ok(())
}

/// Loads `--state` or draws a random state from `--seed`; also returns the
/// seed for the training stream.
fn load_source(ctx: &Context, s: StateSource) -> Result<(StateVector, u64), Failure> {
    let f = &ctx.file;
    let path = f.pick(s.state, "state")?;
    let qubits = f.pick(s.qubits, "qubits")?;
    let seed = f.pick(s.seed, "seed")?;
    match (path, qubits) {
        (Some(_), Some(_)) => Err(Failure::usage("give either --state or --qubits, not both")),
        (Some(path), None) => Ok((read_json(&path)?, seed.unwrap_or(0))),
        (None, Some(n)) => {
            let seed = seed.ok_or_else(|| Failure::usage("--qubits needs --seed"))?;
            let psi = seqtomo::random_state(n, &mut seeded_rng(seed))?;
            write_json(&ctx.out_dir.join("input_state.json"), &psi)?;
            Ok((psi, seed))
        }
        (None, None) => Err(Failure::usage("--state or --qubits is required")),
    }
}

/// `r` comes resolved from the caller since `bench sgd` reads it as a list.
fn optimizer_config(
    f: &FileValues,
    r: Option<usize>,
    tol: Option<f64>,
    precision: Option<f64>,
    max_epochs: Option<usize>,
) -> Result<OptimizerConfig, Failure> {
    let mut cfg = OptimizerConfig {
        progress_every: 500,
        ..OptimizerConfig::default()
    };
    if let Some(r) = r {
        cfg.repetition_r = r;
    }
    let tol = f.pick(tol, "tol")?;
    let precision = f.pick(precision, "precision")?;
    if tol.is_some() && precision.is_some() {
        return Err(Failure::usage("give either --tol or --precision, not both"));
    }
    if let Some(t) = tol {
        cfg.loss_tolerance = t;
    }
    cfg.precision_target = precision;
    if let Some(m) = f.pick(max_epochs, "max-epochs")? {
        cfg.max_epochs_per_sequence = m;
    }
    Ok(cfg)
}

fn print_fidelity(reconstructed: &StateVector, reference: &StateVector) -> Result<(), Failure> {
    let fid = reconstructed.fidelity(reference)?;
    println!("fidelity {fid:.12}");
    Ok(())
}

fn vqc(ctx: &Context, a: VqcArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let mut cfg = optimizer_config(f, f.pick(a.r, "r")?, a.tol, a.precision, a.max_epochs)?;
    if let Some(lr) = f.pick(a.learning_rate, "learning-rate")? {
        cfg.learning_rate = lr;
    }
    if let Some(p) = f.pick(a.progress_every, "progress-every")? {
        cfg.progress_every = p;
    }
    cfg.validate()?;
    let (psi, seed) = load_source(ctx, a.source)?;
    let record = disentangle(&psi, &cfg, &mut stream_rng(seed, 1))?;
    let converged = record.converged;
    write_json(&ctx.out_dir.join("vqc_record.json"), &RunRecord::Vqc(record.clone()))?;
    if !converged {
        return Err(Failure::run(
            "unconverged",
            format!(
                "sequence {} did not converge within {} epochs",
                record.sequences.len(),
                cfg.max_epochs_per_sequence
            ),
        ));
    }
    let rebuilt = reconstruct(&record)?;
    write_json(&ctx.out_dir.join("reconstructed.json"), &rebuilt)?;
    println!("average_m {:.12}", record.average_m);
    print_fidelity(&rebuilt, &psi)
}

fn rl(ctx: &Context, a: RlArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let mut cfg = RlConfig::default();
    if let Some(v) = f.pick(a.episode_len, "episode-len")? {
        cfg.episode_len = v;
    }
    if let Some(v) = f.pick(a.dataset, "dataset")? {
        cfg.dataset_size = v;
    }
    if let Some(v) = f.pick(a.epochs, "epochs")? {
        cfg.epochs_per_sequence = v;
    }
    if let Some(v) = f.pick(a.reward_stop, "reward-stop")? {
        cfg.reward_stop = v;
    }
    if let Some(v) = f.pick(a.learning_rate, "learning-rate")? {
        cfg.policy_learning_rate = v;
    }
    if let Some(IntList(h)) = f.pick(a.hidden, "hidden")? {
        cfg.hidden_sizes = h;
    }
    cfg.validate()?;
    let (psi, seed) = load_source(ctx, a.source)?;
    let record = rl_disentangle(&psi, &cfg, &mut stream_rng(seed, 1))?;
    write_json(&ctx.out_dir.join("rl_record.json"), &RunRecord::Rl(record.clone()))?;
    if !record.success {
        return Err(Failure::run(
            "synthesis_failure",
            format!(
                "no disentangling action sequence for {} qubits within {} epochs",
                record.sequences.last().map_or(0, |s| s.n_active),
                cfg.epochs_per_sequence
            ),
        ));
    }
    let rebuilt = reconstruct_rl(&record)?;
    write_json(&ctx.out_dir.join("reconstructed.json"), &rebuilt)?;
    if let Some(res) = record.final_residual {
        println!("final_residual {res:.12}");
    }
    print_fidelity(&rebuilt, &psi)
}

fn reconstruct_cmd(ctx: &Context, a: ReconstructArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let path: PathBuf = f.pick_required(a.record, "record")?;
    let record: RunRecord = read_json(&path)?;
    let rebuilt = match &record {
        RunRecord::Vqc(r) => reconstruct(r)?,
        RunRecord::Rl(r) => reconstruct_rl(r)?,
    };
    let out = ctx.path(f.pick(a.out, "out")?, "reconstructed.json");
    write_json(&out, &rebuilt)?;
    if let Some(reference) = f.pick::<PathBuf>(a.reference, "reference")? {
        let reference: StateVector = read_json(&reference)?;
        print_fidelity(&rebuilt, &reference)?;
    }
    Ok(())
}

fn table1(ctx: &Context, a: Table1Args) -> Result<(), Failure> {
    let f = &ctx.file;
    let n = f.pick_required(a.qubits, "qubits")?;
    let cfg = optimizer_config(f, f.pick(a.r, "r")?, a.tol, None, a.max_epochs)?;
    let table = match f.pick(a.seed, "seed")? {
        None => bench::gate_stats(n, cfg.repetition_r)?,
        Some(seed) => {
            cfg.validate()?;
            let psi = seqtomo::random_state(n, &mut seeded_rng(seed))?;
            bench::run_sequential_bench(&psi, &cfg, &mut stream_rng(seed, 1))?
        }
    };
    let path = ctx.out_dir.join("table1.csv");
    write_csv(&path, |w| table.write_csv(w))?;
    if let Some(total) = table.total_s_gd {
        println!("total_s_gd {total}");
    }
    if !table.converged {
        return Err(Failure::run("unconverged", "a sequence hit the epoch cap"));
    }
    Ok(())
}

fn seed_list(f: &FileValues, count: Option<usize>, first: Option<u64>) -> Result<Vec<u64>, Failure> {
    let count = f.pick_required(count, "seeds")?;
    if count == 0 {
        return Err(Failure::usage("--seeds must be positive"));
    }
    let first = f.pick(first, "seed")?.unwrap_or(0);
    Ok((0..count as u64).map(|k| first + k).collect())
}

fn sweep(ctx: &Context, a: SweepArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let IntList(ns) = f.pick_required(a.qubits, "qubits")?;
    let RealList(ms) = f.pick_required(a.precisions, "precisions")?;
    let seeds = seed_list(f, a.seeds, a.seed)?;
    let mut cfg = optimizer_config(f, f.pick(a.r, "r")?, None, None, a.max_epochs)?;
    cfg.progress_every = 0;
    for &m in &ms {
        OptimizerConfig {
            precision_target: Some(m),
            ..cfg.clone()
        }
        .validate()?;
    }

    let cell_dir = ctx.out_dir.join("sweep_cells");
    fs::create_dir_all(&cell_dir)
        .map_err(|e| Failure::run("io", format!("cannot create {}: {e}", cell_dir.display())))?;
    let mut grid = Vec::with_capacity(ns.len() * ms.len() * seeds.len());
    for &n in &ns {
        for &m in &ms {
            grid.extend(seeds.iter().map(|&s| (n, m, s)));
        }
    }
    let cells = grid
        .par_iter()
        .map(|&(n, m, s)| {
            let path = cell_dir.join(format!("n{n}_m{m}_s{s}.json"));
            if let Ok(text) = fs::read_to_string(&path) {
                match serde_json::from_str::<CellCheckpoint>(&text) {
                    Ok(cp) if cp.config == cfg => return Ok(cp.cell),
                    _ => warn!("recomputing stale checkpoint {}", path.display()),
                }
            }
            let cell = bench::sweep_cell(n, m, s, &cfg)?;
            info!("n={n} precision={m} seed={s} fidelity={:?}", cell.fidelity);
            write_json(&path, &CellCheckpoint { config: cfg.clone(), cell: cell.clone() })?;
            Ok(cell)
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    write_csv(&ctx.out_dir.join("sweep.csv"), |w| bench::write_sweep_csv(&cells, w))?;
    for p in bench::aggregate(&cells) {
        println!(
            "n={} precision={} mean_fidelity={:.6} seeds={} failures={}",
            p.n_qubits, p.precision, p.mean_fidelity, p.seeds, p.failures
        );
    }
    Ok(())
}

fn sgd(ctx: &Context, a: SgdArgs) -> Result<(), Failure> {
    let f = &ctx.file;
    let n = f.pick_required(a.qubits, "qubits")?;
    let IntList(rs) = f.pick_required(a.r, "r")?;
    let seeds = seed_list(f, a.seeds, a.seed)?;
    let mut cfg = optimizer_config(f, None, a.tol, None, a.max_epochs)?;
    cfg.progress_every = 0;
    cfg.validate()?;
    let rows = bench::sgd_comparison(n, &rs, &seeds, &cfg)?;
    write_csv(&ctx.out_dir.join("sgd.csv"), |w| bench::write_sgd_csv(&rows, w))?;
    for row in &rows {
        println!(
            "r={} scheme={} s_gd={:.1} normalized={:.4} unconverged={}",
            row.r,
            row.scheme.as_str(),
            row.s_gd,
            row.s_gd_normalized,
            row.unconverged_runs
        );
    }
    Ok(())
}
