use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, pretrain, run_active_learning, split_dataset, ALConfig, ALState, Seeds};
use crate::acquisition::AcquisitionKind;
use crate::data::NormStats;
use crate::{Error, Result, Window};

pub const CSV_HEADER: &str = "eta,max_entropy,bald,variation_ratios,random";

/// Final test accuracy of one `(kind, eta, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kind: AcquisitionKind,
    pub eta: f64,
    pub seed: u64,
    pub accuracy: f64,
    /// Acquired window ids, in acquisition order.
    pub acquired: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kinds: Vec<AcquisitionKind>,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub cells: Vec<SweepCell>,
    /// Pre-trained accuracy per seed.
    pub baselines: BTreeMap<u64, f64>,
    /// Pool window ids per seed.
    pub pools: BTreeMap<u64, Vec<String>>,
}

/// Everything produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub baseline: f64,
    pub pool_ids: Vec<String>,
    pub cells: Vec<SweepCell>,
}

/// Splits, normalizes with train statistics, pre-trains once, then runs
/// every `(kind, eta)` combination from that same baseline.
pub fn run_seed(
    data: &[Window],
    test: &[Window],
    kinds: &[AcquisitionKind],
    etas: &[f64],
    seed: u64,
    config: &ALConfig,
) -> Result<SeedRun> {
    let seeds = Seeds::from_master(seed);
    let base_cfg = ALConfig { seeds, ..*config };
    let (train, pool) = split_dataset(data, config.split_ratio, seeds.split)?;
    let stats = NormStats::fit(&train)?;
    let (train, pool, test) = (stats.apply_all(&train), stats.apply_all(&pool), stats.apply_all(test));
    let (model, baseline) = pretrain(&train, &test, &base_cfg)?;

    let combos: Vec<(AcquisitionKind, f64)> = kinds.iter().flat_map(|&k| etas.iter().map(move |&e| (k, e))).collect();
    let cells = combos
        .par_iter()
        .map(|&(kind, eta)| {
            let cfg = ALConfig { kind, eta, ..base_cfg };
            let (mut state, mut oracle) = ALState::simulate(model.clone(), train.clone(), pool.clone(), eta)?;
            run_active_learning(&mut state, &cfg, &mut oracle, None)?;
            let accuracy = evaluate(&state.model, &test, cfg.passes, seeds.evaluation())?;
            Ok(SweepCell {
                kind,
                eta,
                seed,
                accuracy,
                acquired: state.acquired_ids().map(str::to_owned).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun {
        seed,
        baseline,
        pool_ids: pool.iter().map(|w| w.id.clone()).collect(),
        cells,
    })
}

/// Accuracy grid over acquisition kinds, η values and seeds.
///
/// Each seed gets its own split and pre-trained baseline, shared by every
/// kind and η for that seed. Seeds run in parallel.
pub fn eta_sweep(
    data: &[Window],
    test: &[Window],
    kinds: &[AcquisitionKind],
    etas: &[f64],
    seeds: &[u64],
    config: &ALConfig,
) -> Result<SweepReport> {
    if let Some(e) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::config(format!("eta {e} outside [0, 1]")));
    }
    let runs = seeds
        .par_iter()
        .map(|&s| run_seed(data, test, kinds, etas, s, config))
        .collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport {
        kinds: kinds.to_vec(),
        etas: etas.to_vec(),
        seeds: seeds.to_vec(),
        cells: Vec::new(),
        baselines: BTreeMap::new(),
        pools: BTreeMap::new(),
    };
    for run in runs {
        report.baselines.insert(run.seed, run.baseline);
        report.pools.insert(run.seed, run.pool_ids);
        report.cells.extend(run.cells);
    }
    Ok(report)
}

impl SweepReport {
    /// Accuracies for `(kind, eta)` in seed order.
    pub fn accuracies(&self, kind: AcquisitionKind, eta: f64) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|&s| self.cell(kind, eta, s).map(|c| c.accuracy))
            .collect()
    }

    pub fn cell(&self, kind: AcquisitionKind, eta: f64, seed: u64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.seed == seed && (c.eta - eta).abs() < 1e-12)
    }

    pub fn mean(&self, kind: AcquisitionKind, eta: f64) -> Option<f64> {
        let a = self.accuracies(kind, eta);
        (!a.is_empty()).then(|| a.iter().sum::<f64>() / a.len() as f64)
    }

    /// Sample standard deviation across seeds; zero for a single seed.
    pub fn stddev(&self, kind: AcquisitionKind, eta: f64) -> Option<f64> {
        let a = self.accuracies(kind, eta);
        let m = self.mean(kind, eta)?;
        if a.len() < 2 {
            return Some(0.0);
        }
        Some((a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (a.len() - 1) as f64).sqrt())
    }

    fn grid(&self, stat: impl Fn(AcquisitionKind, f64) -> Option<f64>) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for &eta in &self.etas {
            let _ = write!(out, "{eta:.1}");
            for kind in AcquisitionKind::ALL {
                match stat(kind, eta) {
                    Some(v) => {
                        let _ = write!(out, ",{v:.2}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Mean accuracy per `(eta, kind)`, two decimals.
    pub fn to_csv(&self) -> String {
        self.grid(|k, e| self.mean(k, e))
    }

    pub fn to_stddev_csv(&self) -> String {
        self.grid(|k, e| self.stddev(k, e))
    }

    /// Writes the mean grid to `path` and the spread grid next to it as
    /// `<stem>.stddev.csv`. Returns the companion path.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
        let companion = path.with_file_name(format!("{stem}.stddev.csv"));
        std::fs::write(&companion, self.to_stddev_csv())?;
        Ok(companion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> SweepReport {
        let mut cells = Vec::new();
        for (i, &seed) in [1u64, 2].iter().enumerate() {
            for kind in [AcquisitionKind::Bald, AcquisitionKind::RandomSampling] {
                for eta in [0.0, 1.0] {
                    cells.push(SweepCell {
                        kind,
                        eta,
                        seed,
                        accuracy: 80.0 + 10.0 * eta + i as f64,
                        acquired: vec![],
                    });
                }
            }
        }
        SweepReport {
            kinds: vec![AcquisitionKind::Bald, AcquisitionKind::RandomSampling],
            etas: vec![0.0, 1.0],
            seeds: vec![1, 2],
            cells,
            baselines: BTreeMap::new(),
            pools: BTreeMap::new(),
        }
    }

    #[test]
    fn csv_layout() {
        let r = report();
        assert_eq!(
            r.to_csv(),
            format!("{CSV_HEADER}\n0.0,,80.50,,80.50\n1.0,,90.50,,90.50\n")
        );
        let sd = r.to_stddev_csv();
        assert_eq!(sd.lines().nth(1).unwrap(), "0.0,,0.71,,0.71");
    }

    #[test]
    fn companion_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let companion = report().write_csv(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(companion.file_name().unwrap(), "sweep.stddev.csv");
        assert!(std::fs::read_to_string(companion).unwrap().starts_with(CSV_HEADER));
    }
}
