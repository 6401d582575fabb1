//! Alternating adversarial trainer shared by every model family.
//!
//! A model exposes two parameter groups (discriminator and generator). Each
//! epoch runs `n_d` full passes over the discriminator units followed by
//! `n_g` full passes over the generator units. Losses only ever produce
//! gradients for their own group, so the inactive side cannot move.

mod checkpoint;
mod config;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{AgeError, Result};
use crate::tensor::{Grads, Tensor};

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{Norm, TrainConfig};

/// One element of a training batch. Items fall into at most two
/// categories, and each category's losses are averaged separately
/// (e.g. structure pairs vs. adversarial fakes).
pub trait BatchItem: Send + Sync {
    fn category(&self) -> usize {
        0
    }
}

/// Per-category item counts of a full batch, used as mean denominators so
/// that a batch split across workers still yields the batch mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Denoms(pub [f64; 2]);

impl Denoms {
    pub fn of<T: BatchItem>(items: &[T]) -> Self {
        let mut n = [0.0; 2];
        for it in items {
            n[it.category()] += 1.0;
        }
        Denoms(n)
    }

    #[inline]
    pub fn weight(&self, category: usize) -> f64 {
        1.0 / self.0[category].max(1.0)
    }
}

/// Contract between the trainer and a model family.
pub trait AdversarialModel: Sync {
    type DiscItem: BatchItem;
    type GenItem: BatchItem;

    fn disc_units(&self) -> usize;
    fn gen_units(&self) -> usize;

    fn begin_disc_pass(&mut self, _rng: &mut ChaCha8Rng) {}

    /// Builds the items for one discriminator mini-batch, drawing fresh
    /// fakes from the current generator. Fakes are stored as constants.
    fn disc_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<Self::DiscItem>;
    fn disc_loss(&self, items: &[Self::DiscItem], denoms: &Denoms) -> (f64, Grads);
    fn apply_disc(&mut self, grads: &Grads) -> Result<()>;
    fn disc_tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// Builds generator items; the standard-normal draws are stored in the
    /// items so the loss is a deterministic function of the parameters.
    fn gen_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<Self::GenItem>;
    fn gen_loss(&self, items: &[Self::GenItem], denoms: &Denoms) -> (f64, Grads);
    fn apply_gen(&mut self, grads: &Grads) -> Result<()>;
    fn gen_tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// Every parameter table, named, for checkpoints.
    fn tables(&self) -> Vec<(String, &Tensor)>;
    fn tables_mut(&mut self) -> Vec<(String, &mut Tensor)>;

    fn disc_fingerprint(&mut self) -> u64 {
        combine(self.disc_tensors_mut().iter().map(|t| t.fingerprint()))
    }

    fn gen_fingerprint(&mut self) -> u64 {
        combine(self.gen_tensors_mut().iter().map(|t| t.fingerprint()))
    }
}

fn combine(hashes: impl Iterator<Item = u64>) -> u64 {
    hashes.fold(0x9e37_79b9_7f4a_7c15, |acc, h| acc.rotate_left(5) ^ h)
}

/// Independent stream seed derived from a master seed (splitmix64 step).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_WALKS: u64 = 2;
pub(crate) const STREAM_TRAIN: u64 = 3;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub disc_loss: f64,
    pub gen_loss: f64,
    pub disc_updates: u64,
    pub gen_updates: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
    /// Unit samples processed by discriminator updates (units x n_s).
    pub n_disc_updates: u64,
    pub n_gen_updates: u64,
    /// Optimizer steps actually taken (one per mini-batch).
    pub disc_steps: u64,
    pub gen_steps: u64,
    pub wall_seconds: f64,
}

/// Runs the alternating schedule. `on_epoch` sees each epoch's report as
/// soon as it is complete.
pub fn train<M: AdversarialModel>(
    model: &mut M,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_TRAIN));
    let mut report = TrainReport {
        epochs: Vec::with_capacity(cfg.n_epoch),
        n_disc_updates: 0,
        n_gen_updates: 0,
        disc_steps: 0,
        gen_steps: 0,
        wall_seconds: 0.0,
    };
    for epoch in 0..cfg.n_epoch {
        let epoch_start = Instant::now();

        let gen_before = model.gen_fingerprint();
        let mut disc_loss = Mean::default();
        for it in 0..cfg.n_d {
            model.begin_disc_pass(&mut rng);
            for units in shuffled_batches(model.disc_units(), cfg.batch_size, &mut rng) {
                let items = model.disc_items(&units, cfg.n_s, &mut rng);
                let (loss, grads) = sharded(&items, cfg.threads, |part, d| model.disc_loss(part, d));
                finite(loss, "discriminator", epoch, it)?;
                model.apply_disc(&grads).map_err(|e| with_context(e, "discriminator", epoch, it))?;
                disc_loss.add(loss, units.len());
                report.n_disc_updates += (units.len() * cfg.n_s) as u64;
                report.disc_steps += 1;
            }
        }
        if model.gen_fingerprint() != gen_before {
            return Err(AgeError::invalid("generator parameters changed during a discriminator phase"));
        }

        let disc_before = model.disc_fingerprint();
        let mut gen_loss = Mean::default();
        for it in 0..cfg.n_g {
            for units in shuffled_batches(model.gen_units(), cfg.batch_size, &mut rng) {
                let items = model.gen_items(&units, cfg.n_s, &mut rng);
                let (loss, grads) = sharded(&items, cfg.threads, |part, d| model.gen_loss(part, d));
                finite(loss, "generator", epoch, it)?;
                model.apply_gen(&grads).map_err(|e| with_context(e, "generator", epoch, it))?;
                gen_loss.add(loss, units.len());
                report.n_gen_updates += (units.len() * cfg.n_s) as u64;
                report.gen_steps += 1;
            }
        }
        if model.disc_fingerprint() != disc_before {
            return Err(AgeError::invalid("discriminator parameters changed during a generator phase"));
        }

        let e = EpochReport {
            epoch,
            disc_loss: disc_loss.value(),
            gen_loss: gen_loss.value(),
            disc_updates: report.n_disc_updates,
            gen_updates: report.n_gen_updates,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        log::debug!("epoch {epoch}: D {:.5} G {:.5}", e.disc_loss, e.gen_loss);
        on_epoch(&e);
        report.epochs.push(e);
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn shuffled_batches(n: usize, batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(|c| c.to_vec()).collect()
}

/// Evaluates `loss` over the batch, split into contiguous shards when more
/// than one thread is requested. Gradients are merged in shard order, so
/// results depend on the thread count but not on scheduling.
fn sharded<T: BatchItem>(
    items: &[T],
    threads: usize,
    loss: impl Fn(&[T], &Denoms) -> (f64, Grads) + Sync,
) -> (f64, Grads) {
    let denoms = Denoms::of(items);
    if threads <= 1 || items.len() < 2 * threads {
        return loss(items, &denoms);
    }
    let chunk = items.len().div_ceil(threads);
    let parts: Vec<(f64, Grads)> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let loss = &loss;
                let denoms = &denoms;
                s.spawn(move || loss(part, denoms))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("loss worker panicked")).collect()
    });
    let mut it = parts.into_iter();
    let (mut total, mut grads) = it.next().expect("at least one shard");
    for (l, g) in it {
        total += l;
        grads.merge(&g);
    }
    (total, grads)
}

fn finite(loss: f64, phase: &str, epoch: usize, it: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(AgeError::NonFinite {
            context: format!("{phase} loss at epoch {epoch}, iteration {it}"),
        })
    }
}

fn with_context(e: AgeError, phase: &str, epoch: usize, it: usize) -> AgeError {
    match e {
        AgeError::NonFinite { context } => AgeError::NonFinite {
            context: format!("{context} ({phase} step at epoch {epoch}, iteration {it})"),
        },
        other => other,
    }
}

#[derive(Default)]
struct Mean {
    sum: f64,
    weight: f64,
}

impl Mean {
    fn add(&mut self, value: f64, weight: usize) {
        self.sum += value * weight as f64;
        self.weight += weight as f64;
    }

    fn value(&self) -> f64 {
        if self.weight > 0.0 {
            self.sum / self.weight
        } else {
            0.0
        }
    }
}
