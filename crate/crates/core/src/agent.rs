//! Centralized dispatcher: decision epochs with soft updates, episodes,
//! training by experience replay, and greedy solving with a trained network.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::SimState;
use crate::error::ContractError;
use crate::features::{FeatureVector, FeatureView};
use crate::instance_io::{derive_seed, training_set, GeneratorConfig};
use crate::model::{Instance, Solution, DEPOT};
use crate::reward::{depot_step_context, step_reward, total_reward, RewardWeights};
use crate::valuenet::{train_batch, Adam, AdamConfig, Experience, Network, ReplayBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.0, decay_episodes: 300 }
    }
}

impl EpsilonSchedule {
    /// Linear decay from `start` to `end`, then flat; fixed for a whole episode.
    pub fn value(&self, episode: u64) -> f64 {
        if self.decay_episodes == 0 || episode >= self.decay_episodes {
            return self.end;
        }
        let frac = episode as f64 / self.decay_episodes as f64;
        (self.start + (self.end - self.start) * frac).max(self.end.min(self.start))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSetSpec {
    pub count: usize,
    pub generator: GeneratorConfig,
}

impl Default for TrainingSetSpec {
    fn default() -> Self {
        Self { count: 20, generator: GeneratorConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_episodes: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub train_steps_per_episode: usize,
    pub master_seed: u64,
    pub epsilon: EpsilonSchedule,
    pub reward: RewardWeights,
    pub adam: AdamConfig,
    pub training_set: TrainingSetSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_episodes: 700,
            batch_size: 32,
            buffer_capacity: 50_000,
            train_steps_per_episode: 1,
            master_seed: 0,
            epsilon: EpsilonSchedule::default(),
            reward: RewardWeights::default(),
            adam: AdamConfig::default(),
            training_set: TrainingSetSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.training_set.count == 0 {
            return Err(ContractError::Other("batch size, buffer capacity and training-set size must be positive".into()));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(ContractError::Other("batch size exceeds buffer capacity".into()));
        }
        self.reward.validate()?;
        self.training_set.generator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Serve(usize),
    Depot,
}

/// A real commitment produced by a decision epoch, with what was known when
/// it was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub vehicle: usize,
    pub action: Action,
    pub features: FeatureVector,
    pub step_reward: f64,
    pub q_pred: f64,
}

/// Anything that scores a feature vector. Every vehicle goes through the same scorer.
pub trait ValueFn {
    fn value(&self, x: &FeatureVector) -> f64;
}

impl ValueFn for Network {
    fn value(&self, x: &FeatureVector) -> f64 {
        self.eval(x)
    }
}

impl<F: Fn(&FeatureVector) -> f64> ValueFn for F {
    fn value(&self, x: &FeatureVector) -> f64 {
        self(x)
    }
}

/// Decides what each trigger vehicle does next.
///
/// Works on a soft copy of `s`: repeatedly scores every feasible pair over the
/// whole fleet (busy vehicles included, at their projected position), picks
/// one (uniformly at random with probability `epsilon`, else the best value,
/// ties to the lowest vehicle then customer), and applies it to the copy. The
/// loop stops once every trigger vehicle either has a customer or has none
/// left it can reach. Only the triggers' choices are returned; a trigger with
/// nothing to do gets [`Action::Depot`]. `s` itself is not modified.
pub fn decision_epoch<V: ValueFn, R: Rng + ?Sized>(
    s: &SimState,
    triggers: &[usize],
    value: &V,
    epsilon: f64,
    weights: &RewardWeights,
    rng: &mut R,
) -> Vec<Decision> {
    let mut soft = s.clone_for_soft();
    let mut waiting: Vec<usize> = triggers.iter().copied().filter(|&k| !s.vehicle(k).retired).collect();
    waiting.sort_unstable();
    waiting.dedup();
    let mut out = Vec::with_capacity(waiting.len());

    // Bounded: every iteration consumes one active customer.
    while !waiting.is_empty() {
        let eligible = |k: usize| !soft.vehicle(k).parked || waiting.contains(&k);
        // Unused vehicles at the depot are interchangeable: same features,
        // same values, and ties go to the lowest id anyway. Scoring only the
        // first of them keeps greedy choices intact and epochs with many
        // woken spares cheap.
        let spare = (0..soft.vehicles().len()).find(|&k| eligible(k) && is_spare(&soft, k));
        let pairs: Vec<(usize, usize)> = soft
            .feasible_pairs()
            .into_iter()
            .filter(|&(k, _)| eligible(k) && (Some(k) == spare || !is_spare(&soft, k)))
            .collect();
        if !waiting.iter().any(|k| pairs.iter().any(|p| p.0 == *k)) {
            break;
        }
        let view = FeatureView::new(&soft);
        let scored: Vec<(FeatureVector, f64)> = pairs
            .iter()
            .map(|&(k, i)| {
                let x = view.features(k, i).expect("pair is feasible");
                let q = value.value(&x);
                (x, q)
            })
            .collect();
        let pick = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            rng.gen_range(0..pairs.len())
        } else {
            let mut best = 0;
            for (idx, (_, q)) in scored.iter().enumerate() {
                if *q > scored[best].1 {
                    best = idx;
                }
            }
            best
        };
        let (k, i) = pairs[pick];
        if let Some(pos) = waiting.iter().position(|&w| w == k) {
            waiting.remove(pos);
            let ctx = view.step_context(k, i).expect("pair is feasible");
            out.push(Decision {
                vehicle: k,
                action: Action::Serve(i),
                features: scored[pick].0,
                step_reward: step_reward(&ctx, weights),
                q_pred: scored[pick].1,
            });
        }
        drop(view);
        soft.apply_assignment(k, i).expect("pair is feasible");
    }

    if !waiting.is_empty() {
        let view = FeatureView::new(&soft);
        for k in waiting {
            let features = view.depot_features(k);
            out.push(Decision {
                vehicle: k,
                action: Action::Depot,
                features,
                step_reward: step_reward(&depot_step_context(&soft, k), weights),
                q_pred: value.value(&features),
            });
        }
    }
    out.sort_by_key(|d| d.vehicle);
    out
}

fn is_spare(s: &SimState, k: usize) -> bool {
    let v = s.vehicle(k);
    !v.retired && !v.is_busy() && v.visits_so_far == 0 && v.node == DEPOT && v.remaining_capacity == s.instance().fleet().capacity
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub epsilon: f64,
    pub record: bool,
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub solution: Solution,
    /// Per-vehicle trips in order, stages `1..=N_k`, terminal bonus filled in.
    pub experiences: Vec<Experience>,
    /// Wall time of each decision epoch, seconds.
    pub epoch_latencies: Vec<f64>,
}

/// Simulates one episode from reset to the end. Solution wall time covers
/// the whole run.
pub fn run_episode<V: ValueFn, R: Rng + ?Sized>(
    inst: &Arc<Instance>,
    value: &V,
    weights: &RewardWeights,
    opts: EpisodeOptions,
    rng: &mut R,
) -> EpisodeOutcome {
    let started = Instant::now();
    let mut s = SimState::new(Arc::clone(inst));
    let mut trips: Vec<Vec<Decision>> = vec![Vec::new(); inst.fleet().count];
    let mut latencies = Vec::new();

    while let Some(trigger) = s.advance() {
        if opts.record {
            for &k in &trigger.woken {
                trips[k].truncate(s.vehicle(k).visits_so_far);
            }
        }
        let triggers = trigger.vehicles();
        if triggers.is_empty() {
            continue;
        }
        let t0 = Instant::now();
        let decisions = decision_epoch(&s, &triggers, value, opts.epsilon, weights, rng);
        for d in decisions {
            let k = d.vehicle;
            match d.action {
                Action::Serve(i) => s.apply_assignment(k, i).expect("soft choice is feasible in the real state"),
                Action::Depot => {
                    let went_out = s.vehicle(k).has_departed();
                    s.release(k);
                    if !(went_out && s.vehicle(k).retired) {
                        continue;
                    }
                }
            }
            if opts.record {
                trips[k].push(d);
            }
        }
        latencies.push(t0.elapsed().as_secs_f64());
    }

    let mut solution = s.finalize();
    solution.wall_time_sec = started.elapsed().as_secs_f64();

    let mut experiences = Vec::new();
    if opts.record {
        let f = solution.fulfilment;
        for (k, trip) in trips.into_iter().enumerate() {
            let n_k = trip.len();
            for (idx, d) in trip.into_iter().enumerate() {
                let stage = idx + 1;
                let bonus = total_reward(0.0, f, n_k, stage, weights.gamma).expect("stage within trip");
                experiences.push(Experience {
                    features: d.features,
                    step_reward: d.step_reward,
                    q_pred: d.q_pred,
                    episode: opts.episode,
                    stage,
                    vehicle: k,
                    terminal_bonus: bonus,
                });
            }
        }
    }
    EpisodeOutcome { solution, experiences, epoch_latencies: latencies }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub epoch_latencies: Vec<f64>,
}

/// Greedy run with a trained network. Static mode ignores reveal times.
pub fn solve(inst: &Instance, net: &Network, mode: Mode) -> SolveOutcome {
    let inst = match mode {
        Mode::Dynamic => inst.clone(),
        Mode::Static => {
            let mut cs = inst.customers().to_vec();
            cs.iter_mut().for_each(|c| c.reveal_time = 0.0);
            inst.with_customers(cs).expect("same customers")
        }
    };
    // The greedy policy draws no random numbers; the generator only satisfies the signature.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = EpisodeOptions { epsilon: 0.0, record: false, episode: 0 };
    let out = run_episode(&Arc::new(inst), net, &RewardWeights::default(), opts, &mut rng);
    SolveOutcome { solution: out.solution, epoch_latencies: out.epoch_latencies }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u64,
    pub fulfilment: f64,
    pub distance: f64,
    /// Empty until the buffer holds one batch.
    pub loss: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Network,
    pub curve: Vec<CurvePoint>,
}

/// Seed streams derived from the master seed.
const STREAM_TRAINING_SET: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_EPISODES: u64 = 2;
const STREAM_REPLAY: u64 = 3;

/// Trains from a freshly initialized network.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome, ContractError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, STREAM_INIT));
    train_from(cfg, Network::random(&mut rng))
}

/// Continues training `net`; episode numbering (and so the exploration
/// schedule) picks up at `net.trained_episodes`.
pub fn train_from(cfg: &TrainConfig, mut net: Network) -> Result<TrainOutcome, ContractError> {
    cfg.validate()?;
    let set: Vec<Arc<Instance>> = training_set(
        &cfg.training_set.generator,
        cfg.training_set.count,
        derive_seed(cfg.master_seed, STREAM_TRAINING_SET),
    )?
    .into_iter()
    .map(Arc::new)
    .collect();

    let first = net.trained_episodes;
    let mut ep_rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(cfg.master_seed, STREAM_EPISODES), first));
    let mut replay_rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(cfg.master_seed, STREAM_REPLAY), first));
    let mut adam = Adam::new(&net, cfg.adam);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut curve = Vec::with_capacity(cfg.n_episodes as usize);

    for episode in first..first + cfg.n_episodes {
        let epsilon = cfg.epsilon.value(episode);
        let inst = &set[ep_rng.gen_range(0..set.len())];
        let opts = EpisodeOptions { epsilon, record: true, episode };
        let out = run_episode(inst, &net, &cfg.reward, opts, &mut ep_rng);
        for e in out.experiences {
            buffer.push(e);
        }
        let mut loss = None;
        for _ in 0..cfg.train_steps_per_episode {
            let Ok(sample) = buffer.sample(cfg.batch_size, &mut replay_rng) else { break };
            let batch: Vec<(FeatureVector, f64)> = sample.iter().map(|e| (e.features, e.target())).collect();
            loss = Some(train_batch(&mut net, &mut adam, &batch)?);
        }
        net.trained_episodes = episode + 1;
        curve.push(CurvePoint {
            episode,
            fulfilment: out.solution.fulfilment,
            distance: out.solution.total_distance,
            loss,
            epsilon,
        });
    }
    Ok(TrainOutcome { net, curve })
}
