//! Gate and gradient-work accounting, the sequential versus joint training
//! comparison, and the reconstruction-fidelity sweep.

use std::io::Write;

use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{sequence_circuit, ParamCircuit};
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::state::{random_state, StateVector};
use crate::vqc::{all_qubit_weights, diagonal_expectation_and_gradient};
use crate::vqc::{disentangle, reconstruct, OptimizerConfig};
use crate::{seeded_rng, stream_rng};

/// One sequence's gate budget and, once trained, its gradient-descent work
/// `s_gd = parameters × epochs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub j: usize,
    pub gates: usize,
    pub parameters: usize,
    pub epochs: Option<usize>,
    pub s_gd: Option<usize>,
}

impl BenchRow {
    fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = Some(epochs);
        self.s_gd = Some(self.parameters * epochs);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub total_gates: usize,
    pub total_parameters: usize,
    pub total_s_gd: Option<usize>,
    /// False if some sequence stopped at the epoch cap.
    pub converged: bool,
}

impl BenchTable {
    fn from_rows(rows: Vec<BenchRow>, converged: bool) -> Self {
        let total_s_gd = rows.iter().map(|r| r.s_gd).sum::<Option<usize>>();
        Self {
            total_gates: rows.iter().map(|r| r.gates).sum(),
            total_parameters: rows.iter().map(|r| r.parameters).sum(),
            total_s_gd,
            rows,
            converged,
        }
    }

    /// CSV with header `j,gates,parameters,epochs,s_gd` and a final `total` row.
    /// Unfilled columns are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        fn opt(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "gates", "parameters", "epochs", "s_gd"])?;
        for r in &self.rows {
            w.write_record([
                r.j.to_string(),
                r.gates.to_string(),
                r.parameters.to_string(),
                opt(r.epochs),
                opt(r.s_gd),
            ])?;
        }
        let total_epochs = self.rows.iter().map(|r| r.epochs).sum::<Option<usize>>();
        w.write_record([
            "total".to_string(),
            self.total_gates.to_string(),
            self.total_parameters.to_string(),
            opt(total_epochs),
            opt(self.total_s_gd),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Gate and parameter counts of the sequence circuits for an `n`-qubit
/// state with `r` repetitions: row `j` works on `n − j + 1` qubits.
pub fn gate_stats(n: usize, r: usize) -> Result<BenchTable> {
    if n == 0 || r == 0 {
        return Err(Error::invalid(format!(
            "need n ≥ 1 and r ≥ 1, got n = {n}, r = {r}"
        )));
    }
    let rows = (1..=n)
        .map(|j| {
            let ns = n - j + 1;
            let gates = r * ns * ns;
            BenchRow {
                j,
                gates,
                parameters: 3 * gates,
                epochs: None,
                s_gd: None,
            }
        })
        .collect();
    Ok(BenchTable::from_rows(rows, true))
}

/// Trains the sequential decomposition and fills epochs and S_GD per row.
///
/// Rows keep the nominal gate counts even when a sequence was skipped
/// because its qubit was already disentangled (it then spent 0 epochs).
pub fn run_sequential_bench<R: Rng + ?Sized>(
    psi: &StateVector,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<BenchTable> {
    let stats = gate_stats(psi.n_qubits(), cfg.repetition_r)?;
    let record = disentangle(psi, cfg, rng)?;
    let rows = stats
        .rows
        .into_iter()
        .zip(&record.sequences)
        .map(|(row, seq)| row.with_epochs(seq.epochs_used))
        .collect();
    Ok(BenchTable::from_rows(rows, record.converged))
}

/// Every sequence circuit `n, n−1, …, 1` concatenated on the full register.
pub fn full_circuit(n: usize, r: usize) -> Result<ParamCircuit> {
    let mut circuit = ParamCircuit::empty(n)?;
    for ns in (1..=n).rev() {
        circuit.extend(&sequence_circuit(ns, r)?)?;
    }
    Ok(circuit)
}

/// Result of training the whole stack at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRun {
    pub gates: usize,
    pub parameters: usize,
    pub epochs: usize,
    pub s_gd: usize,
    pub final_loss: f64,
    pub converged: bool,
}

/// Trains [`full_circuit`] on the loss `1 − (1/n) Σ_q P(qubit q = 0)`, every
/// parameter jointly. The epoch budget is `n × max_epochs_per_sequence`, the
/// same total the sequential scheme may spend.
pub fn run_nonsequential_bench<R: Rng + ?Sized>(
    psi: &StateVector,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<JointRun> {
    cfg.validate()?;
    let n = psi.n_qubits();
    let circuit = full_circuit(n, cfg.repetition_r)?;
    let weights = all_qubit_weights(n);
    let budget = n * cfg.max_epochs_per_sequence;
    let reached = |loss: f64| loss <= cfg.loss_tolerance;

    let mut run = JointRun {
        gates: circuit.n_rotations(),
        parameters: circuit.n_params(),
        epochs: 0,
        s_gd: 0,
        final_loss: 0.0,
        converged: true,
    };
    let initial: f64 = psi
        .amplitudes()
        .iter()
        .zip(&weights)
        .map(|(a, w)| w * a.norm_sqr())
        .sum();
    if reached(initial) {
        run.final_loss = initial;
        return Ok(run);
    }

    let scale = cfg.init_scale;
    let mut params: Vec<f64> = (0..circuit.n_params())
        .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
        .collect();
    let mut adam = Adam::new(cfg.adam(), params.len())?;
    let mut epoch = 0;
    loop {
        let (loss, grad) = diagonal_expectation_and_gradient(psi, &circuit, &params, &weights)?;
        if cfg.progress_every > 0 && epoch % cfg.progress_every == 0 {
            info!("joint epoch={epoch} loss={loss:.3e}");
        }
        if reached(loss) || epoch >= budget {
            run.final_loss = loss;
            run.converged = reached(loss);
            break;
        }
        adam.step(&mut params, &grad)?;
        epoch += 1;
    }
    run.epochs = epoch;
    run.s_gd = run.parameters * epoch;
    Ok(run)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sequential,
    NonSequential,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Sequential => "sequential",
            Scheme::NonSequential => "non_sequential",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdRow {
    pub r: usize,
    pub scheme: Scheme,
    /// Mean total S_GD over seeds.
    pub s_gd: f64,
    /// `s_gd` divided by the largest non-sequential mean in the table.
    pub s_gd_normalized: f64,
    pub unconverged_runs: usize,
}

/// Both schemes on the same `seeds` states for each `r`. The state for seed
/// `s` is `random_state(n)` drawn from `seeded_rng(s)`; training uses stream 1
/// (sequential) and stream 2 (joint) of the same seed.
pub fn sgd_comparison(
    n: usize,
    r_list: &[usize],
    seeds: &[u64],
    base: &OptimizerConfig,
) -> Result<Vec<SgdRow>> {
    if r_list.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("need at least one r and one seed"));
    }
    let jobs: Vec<(usize, u64)> = r_list
        .iter()
        .flat_map(|&r| seeds.iter().map(move |&s| (r, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(r, seed)| {
            let cfg = OptimizerConfig {
                repetition_r: r,
                ..base.clone()
            };
            let psi = random_state(n, &mut seeded_rng(seed))?;
            let seq = run_sequential_bench(&psi, &cfg, &mut stream_rng(seed, 1))?;
            let joint = run_nonsequential_bench(&psi, &cfg, &mut stream_rng(seed, 2))?;
            info!(
                "n={n} r={r} seed={seed}: sequential S_GD {:?}, joint S_GD {}",
                seq.total_s_gd, joint.s_gd
            );
            Ok((seq, joint))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(2 * r_list.len());
    for (i, &r) in r_list.iter().enumerate() {
        let chunk = &results[i * seeds.len()..(i + 1) * seeds.len()];
        let k = seeds.len() as f64;
        let seq_mean = chunk
            .iter()
            .map(|(s, _)| s.total_s_gd.unwrap_or(0) as f64)
            .sum::<f64>()
            / k;
        let joint_mean = chunk.iter().map(|(_, j)| j.s_gd as f64).sum::<f64>() / k;
        rows.push(SgdRow {
            r,
            scheme: Scheme::Sequential,
            s_gd: seq_mean,
            s_gd_normalized: 0.0,
            unconverged_runs: chunk.iter().filter(|(s, _)| !s.converged).count(),
        });
        rows.push(SgdRow {
            r,
            scheme: Scheme::NonSequential,
            s_gd: joint_mean,
            s_gd_normalized: 0.0,
            unconverged_runs: chunk.iter().filter(|(_, j)| !j.converged).count(),
        });
    }
    let max_joint = rows
        .iter()
        .filter(|r| r.scheme == Scheme::NonSequential)
        .map(|r| r.s_gd)
        .fold(0.0, f64::max);
    for row in &mut rows {
        row.s_gd_normalized = if max_joint > 0.0 { row.s_gd / max_joint } else { 0.0 };
    }
    Ok(rows)
}

/// CSV with header `r,scheme,s_gd,s_gd_normalized`.
pub fn write_sgd_csv<W: Write>(rows: &[SgdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "scheme", "s_gd", "s_gd_normalized"])?;
    for row in rows {
        w.write_record([
            row.r.to_string(),
            row.scheme.as_str().to_string(),
            row.s_gd.to_string(),
            row.s_gd_normalized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One (N, m̄, seed) run of the fidelity sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: usize,
    pub precision: f64,
    pub seed: u64,
    /// Absent when some sequence missed the precision target.
    pub fidelity: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_qubits: usize,
    pub precision: f64,
    pub mean_fidelity: f64,
    /// Converged runs entering the mean.
    pub seeds: usize,
    pub failures: usize,
}

/// Disentangles `random_state(n)` from `seeded_rng(seed)` with every sequence
/// stopped at `m_q ≥ precision`, reconstructs, and measures the fidelity.
pub fn sweep_cell(n: usize, precision: f64, seed: u64, base: &OptimizerConfig) -> Result<SweepCell> {
    let cfg = OptimizerConfig {
        precision_target: Some(precision),
        ..base.clone()
    };
    cfg.validate()?;
    let psi = random_state(n, &mut seeded_rng(seed))?;
    let record = disentangle(&psi, &cfg, &mut stream_rng(seed, 1))?;
    let fidelity = if record.converged {
        Some(reconstruct(&record)?.fidelity(&psi)?)
    } else {
        None
    };
    Ok(SweepCell {
        n,
        precision,
        seed,
        fidelity,
        converged: record.converged,
    })
}

/// Means over seeds for each (N, m̄), in first-seen order. Unconverged cells
/// are excluded and counted as failures.
pub fn aggregate(cells: &[SweepCell]) -> Vec<SweepPoint> {
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for c in cells {
        let idx = match points
            .iter()
            .position(|p| p.n_qubits == c.n && p.precision == c.precision)
        {
            Some(i) => i,
            None => {
                points.push(SweepPoint {
                    n_qubits: c.n,
                    precision: c.precision,
                    mean_fidelity: f64::NAN,
                    seeds: 0,
                    failures: 0,
                });
                sums.push(0.0);
                points.len() - 1
            }
        };
        match c.fidelity {
            Some(f) if c.converged => {
                points[idx].seeds += 1;
                sums[idx] += f;
            }
            _ => points[idx].failures += 1,
        }
    }
    for (p, s) in points.iter_mut().zip(sums) {
        if p.seeds > 0 {
            p.mean_fidelity = s / p.seeds as f64;
        }
    }
    points
}

/// All cells of the grid, computed in parallel.
pub fn fidelity_sweep(
    n_list: &[usize],
    precision_list: &[f64],
    seeds: &[u64],
    base: &OptimizerConfig,
) -> Result<(Vec<SweepCell>, Vec<SweepPoint>)> {
    if n_list.is_empty() || precision_list.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("sweep grid must be non-empty"));
    }
    let grid: Vec<(usize, f64, u64)> = n_list
        .iter()
        .flat_map(|&n| {
            precision_list
                .iter()
                .flat_map(move |&m| seeds.iter().map(move |&s| (n, m, s)))
        })
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(n, m, s)| sweep_cell(n, m, s, base))
        .collect::<Result<Vec<_>>>()?;
    let points = aggregate(&cells);
    Ok((cells, points))
}

/// CSV with header `n,precision,seed,fidelity,converged`.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "precision", "seed", "fidelity", "converged"])?;
    for c in cells {
        w.write_record([
            c.n.to_string(),
            c.precision.to_string(),
            c.seed.to_string(),
            c.fidelity.map(|f| f.to_string()).unwrap_or_default(),
            c.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
