use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{altmin_recover, check_rank, factored_gd_recover, nuclear_norm_recover, random_low_rank, RecoveryResult, Solver, SolverOptions, SolverOverrides};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::linalg::ComplexMatrix;
use crate::measurements::{sample_ensemble, EnsembleKind};
use crate::rng::RngStream;

const EXPERIMENT: &str = "recovery-sweep";

/// Grid of recovery experiments. Every `(K, trial)` pair shares one truth across
/// solvers and ensemble kinds, and every `(K, ensemble, trial)` shares one ensemble
/// across solvers, so cells are matched.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub ks: Vec<usize>,
    pub solvers: Vec<Solver>,
    pub ensembles: Vec<EnsembleKind>,
    pub trials: usize,
    pub master_seed: u64,
    pub noise_std: f64,
    /// Applied on top of each solver's [`Solver::default_options`].
    pub overrides: SolverOverrides,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_rank(self.r, self.m, self.n)?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(invalid("K values must be positive and non-empty"));
        }
        if self.solvers.is_empty() || self.ensembles.is_empty() || self.trials == 0 {
            return Err(invalid("sweep needs at least one solver, ensemble and trial"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(invalid("noise standard deviation must be finite and non-negative"));
        }
        for &s in &self.solvers {
            self.options_for(s).validate()?;
        }
        Ok(())
    }

    pub fn options_for(&self, solver: Solver) -> SolverOptions {
        self.overrides.apply(solver.default_options())
    }

    /// Cells in output order: K, then solver, then ensemble, then trial.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::with_capacity(self.ks.len() * self.solvers.len() * self.ensembles.len() * self.trials);
        for &k in &self.ks {
            for &solver in &self.solvers {
                for &ensemble in &self.ensembles {
                    for trial in 0..self.trials {
                        out.push(SweepCell { k, solver, ensemble, trial });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepCell {
    pub k: usize,
    pub solver: Solver,
    pub ensemble: EnsembleKind,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub solver: Solver,
    pub ensemble: EnsembleKind,
    pub trial: usize,
    /// NaN when the cell failed before producing an estimate.
    pub rel_error: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<String>,
}

/// Runs one cell and returns the truth alongside the solver output.
pub fn sweep_cell(config: &SweepConfig, cell: SweepCell) -> Result<(ComplexMatrix, RecoveryResult)> {
    let SweepCell { k, solver, ensemble, trial } = cell;
    let base = RngStream::for_experiment(config.master_seed, EXPERIMENT);
    let (k64, t64) = (k as u64, trial as u64);
    let truth = random_low_rank(config.m, config.n, config.r, &mut base.substream_at(&[k64, t64, 0]).rng())?;
    let tag = u64::from(ensemble.tag());
    let ens = sample_ensemble(ensemble, config.m, config.n, k, &base.substream_at(&[k64, t64, 1 + tag]))?;
    let y = ens.measure(&truth, config.noise_std, &mut base.substream_at(&[k64, t64, 3 + tag]).rng())?;
    let options = config.options_for(solver);
    let result = match solver {
        Solver::Nuclear => nuclear_norm_recover(&ens, &y, &options, Some(&truth))?,
        Solver::AltMin => altmin_recover(&ens, &y, config.r, &options, Some(&truth))?,
        Solver::Gd => factored_gd_recover(&ens, &y, config.r, &options, Some(&truth))?,
    };
    Ok((truth, result))
}

/// Runs every cell; a failing cell is recorded and the sweep continues.
pub fn recovery_phase_sweep<E: Executor>(config: &SweepConfig, exec: &E) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let cells = config.cells();
    Ok(exec.map(cells.len(), |i| {
        let cell = cells[i];
        let SweepCell { k, solver, ensemble, trial } = cell;
        match sweep_cell(config, cell) {
            Ok((_, res)) => SweepRow {
                k,
                solver,
                ensemble,
                trial,
                rel_error: res.rel_error.unwrap_or(f64::NAN),
                residual: res.residual,
                iterations: res.iterations,
                converged: res.converged,
                failure: res.failure.map(|e| e.to_string()),
            },
            Err(e) => SweepRow {
                k,
                solver,
                ensemble,
                trial,
                rel_error: f64::NAN,
                residual: f64::NAN,
                iterations: 0,
                converged: false,
                failure: Some(e.to_string()),
            },
        }
    }))
}

/// Median with NaN ranked above every number, so failed cells count as unrecovered.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median rel_error per K for one solver and ensemble, in increasing K.
pub fn median_by_k(rows: &[SweepRow], solver: Solver, ensemble: EnsembleKind) -> Vec<(usize, f64)> {
    let mut ks: Vec<usize> = rows.iter().filter(|r| r.solver == solver && r.ensemble == ensemble).map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .filter_map(|k| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.k == k && r.solver == solver && r.ensemble == ensemble)
                .map(|r| r.rel_error)
                .collect();
            median(&errs).map(|m| (k, m))
        })
        .collect()
}

/// Smallest K whose median rel_error is at most `threshold`.
pub fn transition_k(rows: &[SweepRow], solver: Solver, ensemble: EnsembleKind, threshold: f64) -> Option<usize> {
    median_by_k(rows, solver, ensemble).into_iter().find(|&(_, m)| m <= threshold).map(|(k, _)| k)
}
