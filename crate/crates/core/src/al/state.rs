use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{budget_for, evaluate, ALConfig};
use crate::acquisition::score_pool;
use crate::nn::{fit, Network};
use crate::{rng, Error, Result, Window};

/// A source of labels for queried windows.
pub trait Oracle {
    /// Labels for `ids`, in the same order. Any error aborts the iteration
    /// without changing state.
    fn label(&mut self, ids: &[String]) -> Result<Vec<u8>>;
}

/// Reveals held-back ground truth, as in a simulated experiment.
#[derive(Debug, Clone, Default)]
pub struct SimulatedOracle {
    truth: HashMap<String, u8>,
}

impl SimulatedOracle {
    pub fn new<'a>(windows: impl IntoIterator<Item = &'a Window>) -> Result<Self> {
        let truth = windows
            .into_iter()
            .map(|w| {
                w.label
                    .map(|l| (w.id.clone(), l))
                    .ok_or_else(|| Error::precondition(format!("pool window `{}` has no hidden label", w.id)))
            })
            .collect::<Result<_>>()?;
        Ok(SimulatedOracle { truth })
    }
}

impl Oracle for SimulatedOracle {
    fn label(&mut self, ids: &[String]) -> Result<Vec<u8>> {
        ids.iter()
            .map(|id| {
                self.truth
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Oracle(format!("no ground truth for `{id}`")))
            })
            .collect()
    }
}

/// Adapts a closure into an [`Oracle`].
pub struct FnOracle<F>(pub F);

impl<F: FnMut(&[String]) -> Result<Vec<u8>>> Oracle for FnOracle<F> {
    fn label(&mut self, ids: &[String]) -> Result<Vec<u8>> {
        (self.0)(ids)
    }
}

/// One completed acquisition iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRecord {
    pub iteration: usize,
    /// Queried ids in rank order.
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    /// Model version after the retrain this iteration triggered.
    pub model_version: u64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Acquired { count: usize, model_version: u64 },
    PoolExhausted,
    BudgetExhausted,
}

/// Evolving experiment state. Pool windows never carry labels here.
#[derive(Debug, Clone)]
pub struct ALState {
    pub labeled: Vec<Window>,
    pub pool: Vec<Window>,
    pub model: Network<f32>,
    /// Incremented once per retrain; the pre-trained model is version 0.
    pub version: u64,
    pub log: Vec<AcquisitionRecord>,
    budget: usize,
    initial_pool: usize,
}

impl ALState {
    /// Deployment-style state: pool labels, if any, are discarded.
    pub fn new(model: Network<f32>, labeled: Vec<Window>, pool: Vec<Window>, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::config(format!("eta {eta} outside [0, 1]")));
        }
        let mut ids = HashSet::new();
        if let Some(w) = labeled.iter().chain(&pool).find(|w| !ids.insert(w.id.as_str())) {
            return Err(Error::precondition(format!("window `{}` appears twice", w.id)));
        }
        let pool: Vec<Window> = pool.iter().map(Window::unlabeled).collect();
        Ok(ALState {
            budget: budget_for(eta, pool.len()),
            initial_pool: pool.len(),
            labeled,
            pool,
            model,
            version: 0,
            log: Vec::new(),
        })
    }

    /// Simulation-mode state: pool labels are moved into the returned oracle
    /// and only revealed when a window is acquired.
    pub fn simulate(
        model: Network<f32>,
        labeled: Vec<Window>,
        pool: Vec<Window>,
        eta: f64,
    ) -> Result<(Self, SimulatedOracle)> {
        let oracle = SimulatedOracle::new(&pool)?;
        Ok((ALState::new(model, labeled, pool, eta)?, oracle))
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn acquired(&self) -> usize {
        self.log.iter().map(|r| r.ids.len()).sum()
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget - self.acquired()
    }

    pub fn initial_pool(&self) -> usize {
        self.initial_pool
    }

    pub fn acquired_ids(&self) -> impl Iterator<Item = &str> {
        self.log.iter().flat_map(|r| r.ids.iter().map(String::as_str))
    }
}

/// One iteration: score the pool, query the top `min(w_a, budget, pool)`
/// windows, move them to the labeled set and retrain from the current
/// weights. Nothing is committed unless every step succeeds.
pub fn al_step(
    state: &mut ALState,
    config: &ALConfig,
    oracle: &mut dyn Oracle,
    test: Option<&[Window]>,
) -> Result<StepOutcome> {
    if state.pool.is_empty() {
        return Ok(StepOutcome::PoolExhausted);
    }
    if state.remaining_budget() == 0 {
        return Ok(StepOutcome::BudgetExhausted);
    }
    config.validate()?;
    let iteration = state.log.len();
    let batch = config.window_batch.min(state.remaining_budget()).min(state.pool.len());

    let seed = rng::derive(config.seeds.acquisition, iteration as u64);
    let scores = score_pool(
        &state.model,
        &state.pool,
        config.kind,
        config.passes,
        seed,
        state.version,
    )?;
    let chosen = &scores[..batch];
    let ids: Vec<String> = chosen.iter().map(|s| s.window_id.clone()).collect();

    let labels = oracle.label(&ids)?;
    if labels.len() != ids.len() {
        return Err(Error::Oracle(format!(
            "{} labels returned for {} queries",
            labels.len(),
            ids.len()
        )));
    }
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Oracle(format!("label {l} is not 0 or 1")));
    }

    let queried: HashMap<&str, u8> = ids.iter().map(String::as_str).zip(labels.iter().copied()).collect();
    let mut labeled = state.labeled.clone();
    let mut pool = Vec::with_capacity(state.pool.len() - batch);
    let mut moved: HashMap<&str, Window> = HashMap::new();
    for w in &state.pool {
        match queried.get(w.id.as_str()) {
            Some(&label) => {
                moved.insert(
                    w.id.as_str(),
                    Window {
                        label: Some(label),
                        ..w.clone()
                    },
                );
            }
            None => pool.push(w.clone()),
        }
    }
    labeled.extend(
        ids.iter()
            .map(|id| moved.remove(id.as_str()).expect("queried id is in the pool")),
    );

    let version = state.version + 1;
    let mut model = state.model.clone();
    fit(
        &mut model,
        &labeled,
        config.epochs_per_iteration,
        &config.optimizer,
        rng::derive(config.seeds.train, version),
    )?;
    let test_accuracy = match test {
        Some(t) => Some(evaluate(&model, t, config.passes, config.seeds.evaluation())?),
        None => None,
    };

    log::debug!(
        "iteration {iteration}: acquired {batch}, model v{version}, {} labeled, {} left in pool",
        labeled.len(),
        pool.len()
    );
    state.labeled = labeled;
    state.pool = pool;
    state.model = model;
    state.version = version;
    state.log.push(AcquisitionRecord {
        iteration,
        scores: chosen.iter().map(|s| s.score).collect(),
        ids,
        model_version: version,
        test_accuracy,
    });
    Ok(StepOutcome::Acquired {
        count: batch,
        model_version: version,
    })
}

/// Runs [`al_step`] until the budget or the pool is exhausted.
pub fn run_active_learning(
    state: &mut ALState,
    config: &ALConfig,
    oracle: &mut dyn Oracle,
    test: Option<&[Window]>,
) -> Result<StepOutcome> {
    loop {
        match al_step(state, config, oracle, test)? {
            StepOutcome::Acquired { .. } => continue,
            done => return Ok(done),
        }
    }
}
