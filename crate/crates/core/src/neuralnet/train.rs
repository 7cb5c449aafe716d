use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neuralnet::{
    mse_loss, DropoutMasks, Mode, NetworkConfig, NetworkParams, OptimizerConfig, RmsProp, StopCriterion,
};
use crate::retrieval::cosine;
use crate::textvec::SentenceVector;

/// A sentence vector and the visual feature it should regress to.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl TrainingPair {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        TrainingPair { input, target }
    }
}

impl From<(SentenceVector, Vec<f64>)> for TrainingPair {
    fn from((sv, target): (SentenceVector, Vec<f64>)) -> Self {
        TrainingPair {
            input: sv.values,
            target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best monitored score.
    pub params: NetworkParams,
    pub best_epoch: usize,
    /// Validation loss of the freshly initialized network.
    pub initial_val_loss: f64,
    pub history: Vec<EpochStats>,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn best_stats(&self) -> &EpochStats {
        &self.history[self.best_epoch - 1]
    }
}

/// Scores the network after each epoch; lower is better.
pub trait StopMonitor {
    fn score(&mut self, params: &NetworkParams, epoch: usize) -> Result<f64>;
}

impl<F> StopMonitor for F
where
    F: FnMut(&NetworkParams, usize) -> f64,
{
    fn score(&mut self, params: &NetworkParams, epoch: usize) -> Result<f64> {
        Ok(self(params, epoch))
    }
}

/// Mean validation MSE in inference mode.
pub fn dataset_loss(params: &NetworkParams, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("empty dataset".into()));
    }
    let mut total = 0.0;
    for pair in pairs {
        total += mse_loss(&params.predict(&pair.input)?, &pair.target)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Fraction of pairs whose prediction is closest (by cosine) to its own
/// target among the distinct targets of the set.
pub fn dataset_recall_at_1(params: &NetworkParams, pairs: &[TrainingPair]) -> Result<f64> {
    let mut targets: Vec<&[f64]> = Vec::new();
    for pair in pairs {
        if !targets.contains(&pair.target.as_slice()) {
            targets.push(&pair.target);
        }
    }
    let mut hits = 0usize;
    for pair in pairs {
        let pred = params.predict(&pair.input)?;
        let own = cosine(&pred, &pair.target).unwrap_or(f64::NEG_INFINITY);
        let beaten = targets
            .iter()
            .any(|t| *t != pair.target.as_slice() && cosine(&pred, t).is_ok_and(|s| s > own));
        if own.is_finite() && !beaten {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

struct DefaultMonitor<'a> {
    val: &'a [TrainingPair],
    criterion: StopCriterion,
}

impl StopMonitor for DefaultMonitor<'_> {
    fn score(&mut self, params: &NetworkParams, _epoch: usize) -> Result<f64> {
        match self.criterion {
            StopCriterion::ValLoss => dataset_loss(params, self.val),
            StopCriterion::ValRecallAt1 => dataset_recall_at_1(params, self.val).map(|r| -r),
        }
    }
}

/// Patience-based early stopping on a lower-is-better score.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    /// Records `score` for `epoch`. Returns whether it is a new best.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        if score < self.best {
            self.best = score;
            self.best_epoch = epoch;
            self.wait = 0;
            true
        } else {
            self.wait += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.wait >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn check_pairs(pairs: &[TrainingPair], config: &NetworkConfig, what: &str) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Empty(format!("{what} set is empty")));
    }
    for pair in pairs {
        if pair.input.len() != config.input_dim() {
            return Err(Error::dims(
                format!("{what} input"),
                config.input_dim(),
                pair.input.len(),
            ));
        }
        if pair.target.len() != config.output_dim() {
            return Err(Error::dims(
                format!("{what} target"),
                config.output_dim(),
                pair.target.len(),
            ));
        }
    }
    Ok(())
}

/// Trains with the stopping signal chosen by `opt.stop_on`.
pub fn train(
    train_set: &[TrainingPair],
    val_set: &[TrainingPair],
    net: &NetworkConfig,
    opt: &OptimizerConfig,
) -> Result<TrainOutcome> {
    let monitor = DefaultMonitor {
        val: val_set,
        criterion: opt.stop_on,
    };
    train_with_monitor(train_set, val_set, net, opt, monitor)
}

/// Mini-batch RMSprop with early stopping driven by `monitor`.
///
/// The history's `val_loss` column is always the validation MSE; `monitor`
/// only decides which epoch is best and when to stop.
pub fn train_with_monitor<M: StopMonitor>(
    train_set: &[TrainingPair],
    val_set: &[TrainingPair],
    net: &NetworkConfig,
    opt: &OptimizerConfig,
    mut monitor: M,
) -> Result<TrainOutcome> {
    net.validate()?;
    opt.validate()?;
    check_pairs(train_set, net, "training")?;
    check_pairs(val_set, net, "validation")?;

    let mut params = NetworkParams::init(net, opt.seed)?;
    let mut optimizer = RmsProp::new(&params, opt.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rng.set_stream(1);

    let initial_val_loss = dataset_loss(&params, val_set)?;
    let mut stopper = EarlyStopping::new(opt.patience);
    let mut best_params = params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopped_early = false;

    for epoch in 1..=opt.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(opt.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grads = params.zeros_like();
            for &i in batch {
                let pair = &train_set[i];
                let masks = DropoutMasks::sample(&params, net.dropout, &mut rng);
                let acts = params.forward(&pair.input, Mode::Train(&masks))?;
                loss_sum += mse_loss(acts.output(), &pair.target)?;
                params.backward(&acts, &pair.target, scale, &mut grads)?;
            }
            optimizer.step(&mut params, &grads)?;
        }
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss: dataset_loss(&params, val_set)?,
        };
        history.push(stats);

        let score = monitor.score(&params, epoch)?;
        if stopper.observe(epoch, score) {
            best_params.clone_from(&params);
        }
        if stopper.should_stop() {
            stopped_early = true;
            break;
        }
    }

    if stopper.best_epoch() == 0 {
        return Err(Error::Config("monitor never produced a comparable score".into()));
    }
    Ok(TrainOutcome {
        params: best_params,
        best_epoch: stopper.best_epoch(),
        initial_val_loss,
        history,
        stopped_early,
    })
}
