//! Q-network dataflow selector trained offline from dataset rewards.
//!
//! Each decision is a single step with no successor state, so every stored
//! transition is terminal and the regression target is the immediate reward.
//! The network is one rectifier hidden layer with a linear output per action.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, DatasetRow};
use crate::features::{Feature, FeatureVector, Scaler, NUM_FEATURES};
use crate::{DataflowLabel, Error, Result};

pub const STATE_DIM: usize = 5;
pub const HIDDEN: usize = 1024;
pub const ACTIONS: usize = 3;

/// Fully connected `input -> hidden -> 3` network, weights stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    input: usize,
    hidden: usize,
    /// `hidden x input`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `ACTIONS x hidden`
    pub w2: Vec<f64>,
    pub b2: [f64; ACTIONS],
}

/// Production network: 5 inputs, 1024 hidden units.
pub fn init_network(seed: u64) -> QNetwork {
    QNetwork::random(STATE_DIM, HIDDEN, seed)
}

impl QNetwork {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; ACTIONS * hidden],
            b2: [0.0; ACTIONS],
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(input, hidden);
        let a1 = 1.0 / (input as f64).sqrt();
        net.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        let a2 = 1.0 / (hidden as f64).sqrt();
        net.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + ACTIONS
    }

    /// Parameters in layer order: w1, b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.extend_from_slice(&self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
        Ok(())
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.input {
            return Err(Error::DimensionMismatch(format!(
                "state has {} values, network expects {}",
                s.len(),
                self.input
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        Ok(())
    }

    pub fn forward(&self, s: &[f64]) -> Result<[f64; ACTIONS]> {
        self.check_state(s)?;
        let mut h = vec![0.0; self.hidden];
        Ok(self.forward_into(s, &mut h))
    }

    /// Forward pass leaving the rectified hidden activations in `h`.
    fn forward_into(&self, s: &[f64], h: &mut [f64]) -> [f64; ACTIONS] {
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.input..(j + 1) * self.input];
            let pre = self.b1[j] + row.iter().zip(s).map(|(w, x)| w * x).sum::<f64>();
            *hj = pre.max(0.0);
        }
        let mut q = self.b2;
        for (a, qa) in q.iter_mut().enumerate() {
            let row = &self.w2[a * self.hidden..(a + 1) * self.hidden];
            *qa += row.iter().zip(h.iter()).map(|(w, x)| w * x).sum::<f64>();
        }
        q
    }

    /// Greedy action; ties go to the lower code. Invalid states fall back to IP.
    pub fn predict_action(&self, s: &[f64]) -> DataflowLabel {
        match self.forward(s) {
            Ok(q) => argmax(&q),
            Err(_) => DataflowLabel::Ip,
        }
    }

    /// Adds `scale * dLoss/dparam` of `(q(s)[action] - target)^2` into `grad`.
    fn accumulate_grad(
        &self,
        s: &[f64],
        action: usize,
        target: f64,
        scale: f64,
        h: &mut [f64],
        grad: &mut Grad,
    ) -> f64 {
        let q = self.forward_into(s, h);
        let err = q[action] - target;
        let dq = 2.0 * err * scale;
        grad.b2[action] += dq;
        let w2row = &self.w2[action * self.hidden..(action + 1) * self.hidden];
        let g2row = &mut grad.w2[action * self.hidden..(action + 1) * self.hidden];
        for j in 0..self.hidden {
            if h[j] <= 0.0 {
                continue;
            }
            g2row[j] += dq * h[j];
            let gh = dq * w2row[j];
            grad.b1[j] += gh;
            let g1row = &mut grad.w1[j * self.input..(j + 1) * self.input];
            for (g, x) in g1row.iter_mut().zip(s) {
                *g += gh * x;
            }
        }
        err * err
    }

    fn apply(&mut self, grad: &Grad, lr: f64) {
        for (w, g) in self.w1.iter_mut().zip(&grad.w1) {
            *w -= lr * g;
        }
        for (w, g) in self.b1.iter_mut().zip(&grad.b1) {
            *w -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grad.w2) {
            *w -= lr * g;
        }
        for (w, g) in self.b2.iter_mut().zip(&grad.b2) {
            *w -= lr * g;
        }
    }

    /// Mean squared TD error of terminal transitions.
    pub fn batch_loss(&self, batch: &[Transition]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        let total: f64 = batch
            .iter()
            .map(|t| (self.forward_into(&t.state, &mut h)[t.action.index()] - t.reward).powi(2))
            .sum();
        total / batch.len().max(1) as f64
    }

    /// One gradient-descent step on [`batch_loss`](Self::batch_loss); returns the loss before the step.
    pub fn sgd_step(&mut self, batch: &[Transition], lr: f64) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let mut grad = Grad::zeros(self);
        let mut h = vec![0.0; self.hidden];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for t in batch {
            loss += self.accumulate_grad(&t.state, t.action.index(), t.reward, scale, &mut h, &mut grad);
        }
        self.apply(&grad, lr);
        loss * scale
    }

    /// Flat analytic gradient of `(q(s)[action] - target)^2`, in [`params`](Self::params) order.
    pub fn loss_gradient(&self, s: &[f64], action: DataflowLabel, target: f64) -> Result<Vec<f64>> {
        self.check_state(s)?;
        let mut grad = Grad::zeros(self);
        let mut h = vec![0.0; self.hidden];
        self.accumulate_grad(s, action.index(), target, 1.0, &mut h, &mut grad);
        Ok(grad.flatten())
    }
}

struct Grad {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: [f64; ACTIONS],
}

impl Grad {
    fn zeros(net: &QNetwork) -> Self {
        Self {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: [0.0; ACTIONS],
        }
    }

    fn flatten(self) -> Vec<f64> {
        let mut p = self.w1;
        p.extend(self.b1);
        p.extend(self.w2);
        p.extend(self.b2);
        p
    }
}

fn argmax(q: &[f64; ACTIONS]) -> DataflowLabel {
    let mut best = 0;
    for a in 1..ACTIONS {
        if q[a] > q[best] {
            best = a;
        }
    }
    DataflowLabel::ALL[best]
}

/// Max relative error between analytic and central-difference gradients.
///
/// Components where both gradients are below 1e-9 in magnitude are skipped.
pub fn gradient_check(net: &QNetwork, state: &[f64], action: DataflowLabel, target: f64, step: f64) -> Result<f64> {
    let analytic = net.loss_gradient(state, action, target)?;
    let base = net.params();
    let mut probe = net.clone();
    let loss = |n: &QNetwork| (n.forward(state).map(|q| q[action.index()] - target)).map(|e| e * e);
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + step;
        probe.set_params(&p)?;
        let up = loss(&probe)?;
        p[i] = base[i] - step;
        probe.set_params(&p)?;
        let down = loss(&probe)?;
        let numeric = (up - down) / (2.0 * step);
        let scale = a.abs().max(numeric.abs());
        if scale > 1e-9 {
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    Ok(worst)
}

/// `min(latency) / latency[action] + weight * utilization[action]`.
///
/// A row whose latencies are all zero scores every action as optimal.
pub fn reward(row: &DatasetRow, action: DataflowLabel, weight: f64) -> f64 {
    let a = action.index();
    let best = *row.latency.iter().min().unwrap_or(&0);
    let ratio = if row.latency[a] == 0 {
        1.0
    } else {
        best as f64 / row.latency[a] as f64
    };
    ratio + weight * row.utilization[a]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: DataflowLabel,
    pub reward: f64,
    pub terminal: bool,
}

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity: capacity.max(1),
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest transition still held.
    pub fn oldest(&self) -> Option<&Transition> {
        if self.items.len() < self.capacity {
            self.items.first()
        } else {
            self.items.get(self.next)
        }
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        (0..n)
            .map(|_| self.items[rng.gen_range(0..self.items.len())].clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnHyper {
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub reward_weight: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for DqnHyper {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_decay: 0.995,
            epsilon_min: 0.05,
            replay_capacity: 10_000,
            batch_size: 64,
            learning_rate: 1e-3,
            reward_weight: 0.1,
            episodes: 20_000,
            seed: 0,
        }
    }
}

impl DqnHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return Err(Error::InvalidArgument("epsilon_decay must be in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return Err(Error::InvalidArgument("epsilon values must be in [0, 1]".into()));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(Error::InvalidArgument("need 0 < batch_size <= replay_capacity".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// Exploration rate in effect after `episodes` decay steps.
    pub fn epsilon_after(&self, episodes: usize) -> f64 {
        let mut eps = self.epsilon_start;
        for _ in 0..episodes {
            eps = (eps * self.epsilon_decay).max(self.epsilon_min);
        }
        eps
    }

    fn to_line(&self) -> String {
        format!(
            "epsilon_start={:?} epsilon_decay={:?} epsilon_min={:?} replay_capacity={} batch_size={} learning_rate={:?} reward_weight={:?} episodes={}",
            self.epsilon_start,
            self.epsilon_decay,
            self.epsilon_min,
            self.replay_capacity,
            self.batch_size,
            self.learning_rate,
            self.reward_weight,
            self.episodes
        )
    }

    fn parse_line(line: &str, seed: u64) -> Result<Self> {
        let mut h = DqnHyper {
            seed,
            ..DqnHyper::default()
        };
        for kv in line.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::format("q-network model", format!("bad hyperparameter `{kv}`")))?;
            let bad = || Error::format("q-network model", format!("bad value for {k}: `{v}`"));
            match k {
                "epsilon_start" => h.epsilon_start = v.parse().map_err(|_| bad())?,
                "epsilon_decay" => h.epsilon_decay = v.parse().map_err(|_| bad())?,
                "epsilon_min" => h.epsilon_min = v.parse().map_err(|_| bad())?,
                "replay_capacity" => h.replay_capacity = v.parse().map_err(|_| bad())?,
                "batch_size" => h.batch_size = v.parse().map_err(|_| bad())?,
                "learning_rate" => h.learning_rate = v.parse().map_err(|_| bad())?,
                "reward_weight" => h.reward_weight = v.parse().map_err(|_| bad())?,
                "episodes" => h.episodes = v.parse().map_err(|_| bad())?,
                _ => {
                    return Err(Error::format(
                        "q-network model",
                        format!("unknown hyperparameter `{k}`"),
                    ))
                }
            }
        }
        Ok(h)
    }
}

/// State vector the network sees: the five selected features, scaled.
pub fn state_of(scaled: &FeatureVector) -> Vec<f64> {
    scaled.select(&Feature::TOP_FIVE)
}

/// Epsilon-greedy training on rows of `train`, scaled by `train.scaler`.
pub fn train(train: &Dataset, hyper: &DqnHyper) -> Result<QNetwork> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let states: Vec<Vec<f64>> = (0..train.len()).map(|i| state_of(&train.scaled(i))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut net = init_network(rng.gen());
    let mut replay = ReplayBuffer::new(hyper.replay_capacity);
    let mut eps = hyper.epsilon_start;
    let mut running = 0.0;
    for ep in 0..hyper.episodes {
        let i = rng.gen_range(0..train.len());
        let state = &states[i];
        let action = if rng.gen::<f64>() < eps {
            DataflowLabel::ALL[rng.gen_range(0..ACTIONS)]
        } else {
            net.predict_action(state)
        };
        replay.push(Transition {
            state: state.clone(),
            action,
            reward: reward(&train.rows[i], action, hyper.reward_weight),
            terminal: true,
        });
        if replay.len() >= hyper.batch_size {
            let batch = replay.sample(hyper.batch_size, &mut rng);
            running = 0.99 * running + 0.01 * net.sgd_step(&batch, hyper.learning_rate);
        }
        eps = (eps * hyper.epsilon_decay).max(hyper.epsilon_min);
        if (ep + 1) % 5000 == 0 {
            log::debug!("episode {}: epsilon {eps:.3}, smoothed loss {running:.5}", ep + 1);
        }
    }
    Ok(net)
}

/// A trained network with the feature scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnModel {
    pub net: QNetwork,
    pub scaler: Scaler,
    pub hyper: DqnHyper,
}

const MODEL_MAGIC: &str = "sparseflow-qnet 1";
const DATA_MARKER: &str = "data";

impl DqnModel {
    pub fn predict_scaled(&self, scaled: &FeatureVector) -> DataflowLabel {
        self.net.predict_action(&state_of(scaled))
    }

    pub fn predict_raw(&self, raw: &FeatureVector) -> DataflowLabel {
        self.predict_scaled(&self.scaler.transform(raw))
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = (0..data.len())
            .filter(|&i| self.predict_scaled(&data.scaled(i)) == data.rows[i].label)
            .count();
        hits as f64 / data.len() as f64
    }

    /// Text header, a `data` line, then the parameters as little-endian f64 in layer order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = String::new();
        let _ = writeln!(head, "{MODEL_MAGIC}");
        let _ = writeln!(
            head,
            "dims {} {} {}",
            self.net.input_dim(),
            self.net.hidden_dim(),
            ACTIONS
        );
        let names: Vec<&str> = Feature::TOP_FIVE.iter().map(|f| f.name()).collect();
        let _ = writeln!(head, "features {}", names.join(" "));
        let _ = writeln!(head, "hyper {}", self.hyper.to_line());
        let _ = writeln!(head, "seed {}", self.hyper.seed);
        head.push_str("scaler\n");
        head.push_str(&self.scaler.to_text());
        let _ = writeln!(head, "params {}", self.net.param_count());
        let _ = writeln!(head, "{DATA_MARKER}");
        let mut out = head.into_bytes();
        for p in self.net.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: String| Error::format("q-network model", d);
        let mut pos = 0;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("header ends early".into()))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not text".into()))
        };
        if next_line()? != MODEL_MAGIC {
            return Err(bad("unrecognized header".into()));
        }
        let dims: Vec<usize> = next_line()?
            .strip_prefix("dims ")
            .ok_or_else(|| bad("expected `dims`".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad dimension `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 || dims[0] != STATE_DIM || dims[2] != ACTIONS || dims[1] == 0 {
            return Err(bad(format!("unsupported dims {dims:?}")));
        }
        next_line()?
            .strip_prefix("features ")
            .ok_or_else(|| bad("expected `features`".into()))?;
        let hyper_line = next_line()?
            .strip_prefix("hyper ")
            .ok_or_else(|| bad("expected `hyper`".into()))?
            .to_string();
        let seed: u64 = next_line()?
            .strip_prefix("seed ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("expected `seed`".into()))?;
        if next_line()? != "scaler" {
            return Err(bad("expected `scaler`".into()));
        }
        let mut scaler_text = String::new();
        for _ in 0..NUM_FEATURES {
            scaler_text.push_str(next_line()?);
            scaler_text.push('\n');
        }
        let count: usize = next_line()?
            .strip_prefix("params ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("expected `params`".into()))?;
        if next_line()? != DATA_MARKER {
            return Err(bad("expected data marker".into()));
        }
        let mut net = QNetwork::zeros(dims[0], dims[1]);
        if count != net.param_count() {
            return Err(bad(format!("parameter count {count} does not match dims")));
        }
        let body = &bytes[pos..];
        if body.len() != count * 8 {
            return Err(bad(format!(
                "expected {} parameter bytes, found {}",
                count * 8,
                body.len()
            )));
        }
        let params: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        net.set_params(&params)?;
        Ok(Self {
            net,
            scaler: Scaler::from_text(&scaler_text)?,
            hyper: DqnHyper::parse_line(&hyper_line, seed)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
