use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use bal::acquisition::{score_pool, AcquisitionKind, AcquisitionScore};
use bal::al::{budget_for, evaluate};
use bal::data::{save_ndjson, Dataset};
use bal::nn::{fit, save_file, Network, OptimizerHyper};
use bal::{rng, Result, Window};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub kind: AcquisitionKind,
    pub passes: usize,
    /// Retrain automatically once this many new labels have arrived.
    pub auto_retrain_every: Option<usize>,
    /// Epochs used by automatic retrains.
    pub retrain_epochs: usize,
    /// Fraction of the initial pool the oracle may label; unlimited if unset.
    pub eta: Option<f64>,
    pub optimizer: OptimizerHyper,
    pub seed: u64,
    /// Directory for the model blob and labeled set after each retrain.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            kind: AcquisitionKind::VariationRatios,
            passes: 10,
            auto_retrain_every: None,
            retrain_epochs: 10,
            eta: None,
            optimizer: OptimizerHyper::default(),
            seed: 0,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub id: String,
    pub kind: AcquisitionKind,
    pub score: f64,
    pub model_version: u64,
    pub mean_probs: Vec<f64>,
    pub channels: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub model_version: u64,
    pub training: bool,
    /// Labels received from the oracle; the pre-training set is not counted.
    pub labeled_count: usize,
    pub pool_remaining: usize,
    /// Oracle labels as a fraction of the initial pool.
    pub eta_consumed: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelError {
    UnknownId,
    AlreadyLabeled,
    InvalidLabel,
    BudgetExhausted,
}

impl LabelError {
    pub fn reason(self) -> &'static str {
        match self {
            LabelError::UnknownId => "unknown_id",
            LabelError::AlreadyLabeled => "already_labeled",
            LabelError::InvalidLabel => "invalid_label",
            LabelError::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrainStart {
    Started { version: u64 },
    NothingNew { version: u64 },
    Busy,
    NotReady,
}

/// Everything a retrain needs, copied out so the lock is not held while
/// training.
pub struct RetrainJob {
    model: Network<f32>,
    labeled: Vec<Window>,
    pool: Vec<Window>,
    test: Option<Vec<Window>>,
    epochs: usize,
    next_version: u64,
    labels_included: usize,
    config: ServiceConfig,
}

pub struct RetrainResult {
    model: Network<f32>,
    version: u64,
    queue: Vec<AcquisitionScore>,
    test_accuracy: Option<f64>,
    labels_included: usize,
}

impl RetrainJob {
    /// Trains on the labeled snapshot, then rescores the pool snapshot and
    /// the test set with the new model.
    pub fn run(mut self) -> Result<RetrainResult> {
        let seed = rng::derive(self.config.seed, self.next_version);
        fit(
            &mut self.model,
            &self.labeled,
            self.epochs,
            &self.config.optimizer,
            seed,
        )?;
        let queue = score_pool(
            &self.model,
            &self.pool,
            self.config.kind,
            self.config.passes,
            rng::derive_str(seed, "score"),
            self.next_version,
        )?;
        let test_accuracy = match &self.test {
            Some(t) => Some(evaluate(
                &self.model,
                t,
                self.config.passes,
                rng::derive_str(self.config.seed, "evaluate"),
            )?),
            None => None,
        };
        if let Some(dir) = &self.config.checkpoint_dir {
            std::fs::create_dir_all(dir)?;
            save_file(&self.model, dir.join("model.balm"))?;
            save_ndjson(
                &Dataset::new(self.labeled.clone(), Vec::new())?,
                dir.join("labeled.ndjson"),
            )?;
        }
        Ok(RetrainResult {
            model: self.model,
            version: self.next_version,
            queue,
            test_accuracy,
            labels_included: self.labels_included,
        })
    }
}

/// The service's single state owner. Every method is synchronous; the HTTP
/// layer serializes writes through a lock.
pub struct ServiceState {
    config: ServiceConfig,
    model: Option<Network<f32>>,
    version: u64,
    pool: BTreeMap<String, Window>,
    labeled: Vec<Window>,
    labeled_ids: HashSet<String>,
    oracle_labels: usize,
    labels_at_last_retrain: usize,
    initial_pool: usize,
    queue: Vec<AcquisitionScore>,
    training: bool,
    test: Option<Vec<Window>>,
    test_accuracy: Option<f64>,
    last_error: Option<String>,
}

impl ServiceState {
    /// `pretrain` windows join every retrain but never enter the pool.
    pub fn new(
        model: Option<Network<f32>>,
        pool: Vec<Window>,
        pretrain: Vec<Window>,
        test: Option<Vec<Window>>,
        config: ServiceConfig,
    ) -> Result<Self> {
        let labeled_ids: HashSet<String> = pretrain.iter().map(|w| w.id.clone()).collect();
        let mut map = BTreeMap::new();
        for w in pool {
            if labeled_ids.contains(&w.id) || map.contains_key(&w.id) {
                return Err(bal::Error::Precondition(format!("window `{}` appears twice", w.id)));
            }
            map.insert(w.id.clone(), w.unlabeled());
        }
        let mut state = ServiceState {
            initial_pool: map.len(),
            config,
            model: None,
            version: 0,
            pool: map,
            labeled: pretrain,
            labeled_ids,
            oracle_labels: 0,
            labels_at_last_retrain: 0,
            queue: Vec::new(),
            training: false,
            test,
            test_accuracy: None,
            last_error: None,
        };
        if let Some(model) = model {
            state.install_model(model)?;
        }
        Ok(state)
    }

    /// Loads a model as version 0 and scores the pool against it.
    pub fn install_model(&mut self, model: Network<f32>) -> Result<()> {
        let pool: Vec<Window> = self.pool.values().cloned().collect();
        let seed = rng::derive_str(rng::derive(self.config.seed, 0), "score");
        self.queue = score_pool(&model, &pool, self.config.kind, self.config.passes, seed, 0)?;
        self.test_accuracy = match &self.test {
            Some(t) => Some(evaluate(
                &model,
                t,
                self.config.passes,
                rng::derive_str(self.config.seed, "evaluate"),
            )?),
            None => None,
        };
        self.model = Some(model);
        self.version = 0;
        Ok(())
    }

    pub fn is_ready(&self) -> bool {
        self.model.is_some()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn last_error(&self) -> Option<&str> {
        self.last_error.as_deref()
    }

    pub fn budget(&self) -> Option<usize> {
        self.config.eta.map(|eta| budget_for(eta, self.initial_pool))
    }

    /// Top `limit` queued windows; `None` until a model is installed.
    pub fn queue(&self, limit: usize) -> Option<Vec<QueueItem>> {
        self.model.as_ref()?;
        Some(
            self.queue
                .iter()
                .take(limit)
                .map(|s| QueueItem {
                    id: s.window_id.clone(),
                    kind: s.kind,
                    score: s.score,
                    model_version: s.model_version,
                    mean_probs: s.mean_probs.clone(),
                    channels: self.pool[&s.window_id].channels.clone(),
                })
                .collect(),
        )
    }

    /// Moves `id` from the pool to the labeled set.
    pub fn submit_label(&mut self, id: &str, label: i64) -> std::result::Result<usize, LabelError> {
        if !(0..=1).contains(&label) {
            return Err(LabelError::InvalidLabel);
        }
        if self.labeled_ids.contains(id) {
            return Err(LabelError::AlreadyLabeled);
        }
        if !self.pool.contains_key(id) {
            return Err(LabelError::UnknownId);
        }
        if self.budget().is_some_and(|b| self.oracle_labels >= b) {
            return Err(LabelError::BudgetExhausted);
        }
        let window = self.pool.remove(id).expect("checked above");
        self.queue.retain(|s| s.window_id != id);
        self.labeled_ids.insert(id.to_owned());
        self.labeled.push(Window {
            label: Some(label as u8),
            ..window
        });
        self.oracle_labels += 1;
        Ok(self.oracle_labels)
    }

    pub fn labels_since_retrain(&self) -> usize {
        self.oracle_labels - self.labels_at_last_retrain
    }

    /// Whether the auto-retrain threshold has been reached.
    pub fn wants_auto_retrain(&self) -> bool {
        !self.training
            && self
                .config
                .auto_retrain_every
                .is_some_and(|every| every > 0 && self.labels_since_retrain() >= every)
    }

    /// Marks a retrain as running and returns the work to do off-lock.
    pub fn begin_retrain(&mut self, epochs: usize) -> (RetrainStart, Option<RetrainJob>) {
        if self.training {
            return (RetrainStart::Busy, None);
        }
        let Some(model) = self.model.clone() else {
            return (RetrainStart::NotReady, None);
        };
        if self.labels_since_retrain() == 0 || self.labeled.is_empty() {
            return (RetrainStart::NothingNew { version: self.version }, None);
        }
        self.training = true;
        let job = RetrainJob {
            model,
            labeled: self.labeled.clone(),
            pool: self.pool.values().cloned().collect(),
            test: self.test.clone(),
            epochs,
            next_version: self.version + 1,
            labels_included: self.oracle_labels,
            config: self.config.clone(),
        };
        (RetrainStart::Started { version: self.version }, Some(job))
    }

    /// Installs a finished retrain. Windows labeled while it ran are dropped
    /// from the new queue.
    pub fn finish_retrain(&mut self, result: Result<RetrainResult>) {
        self.training = false;
        match result {
            Ok(r) => {
                self.model = Some(r.model);
                self.version = r.version;
                self.queue = r
                    .queue
                    .into_iter()
                    .filter(|s| self.pool.contains_key(&s.window_id))
                    .collect();
                self.test_accuracy = r.test_accuracy.or(self.test_accuracy);
                self.labels_at_last_retrain = r.labels_included;
                self.last_error = None;
            }
            Err(e) => {
                log::error!("retrain failed: {e}");
                self.last_error = Some(e.to_string());
            }
        }
    }

    pub fn status(&self) -> Status {
        Status {
            model_version: self.version,
            training: self.training,
            labeled_count: self.oracle_labels,
            pool_remaining: self.pool.len(),
            eta_consumed: if self.initial_pool == 0 {
                0.0
            } else {
                self.oracle_labels as f64 / self.initial_pool as f64
            },
            test_accuracy: self.test_accuracy,
        }
    }
}
