use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{encode, SparseVec};
use super::replay::Transition;
use super::AgentError;

pub const CHECKPOINT_FORMAT: &str = "panda-qmodel";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Two-layer value head over `[encode(obs); encode(action)]`:
/// `q = w2 · tanh(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QModel {
    pub hash_dim: usize,
    pub hidden_dim: usize,
    /// Input-major: the weights from input `i` are `w1[i*hidden_dim..(i+1)*hidden_dim]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<'a> {
    format: std::borrow::Cow<'a, str>,
    version: u32,
    #[serde(flatten)]
    model: std::borrow::Cow<'a, QModel>,
}

/// Gradient of q (or of a loss) with the same layout as [`QModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Gradient {
    fn zeros(model: &QModel) -> Self {
        Gradient {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.hidden_dim],
            w2: vec![0.0; model.hidden_dim],
            b2: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        (sq(&self.w1) + sq(&self.b1) + sq(&self.w2) + self.b2 * self.b2).sqrt()
    }

    /// Flat view in [`QModel::param`] order.
    pub fn get(&self, index: usize) -> f64 {
        flat_get(&self.w1, &self.b1, &self.w2, self.b2, index)
    }
}

fn flat_get(w1: &[f64], b1: &[f64], w2: &[f64], b2: f64, mut i: usize) -> f64 {
    if i < w1.len() {
        return w1[i];
    }
    i -= w1.len();
    if i < b1.len() {
        return b1[i];
    }
    i -= b1.len();
    if i < w2.len() {
        return w2[i];
    }
    assert_eq!(i, w2.len(), "parameter index out of range");
    b2
}

struct GradMut<'a> {
    w1: &'a mut [f64],
    b1: &'a mut [f64],
    w2: &'a mut [f64],
    b2: &'a mut f64,
}

/// Encoded `(observation, action)` pair.
pub type Features = SparseVec;

impl QModel {
    pub fn zeros(hash_dim: usize, hidden_dim: usize) -> Self {
        QModel {
            hash_dim,
            hidden_dim,
            w1: vec![0.0; hidden_dim * 2 * hash_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; hidden_dim],
            b2: 0.0,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(hash_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(hash_dim, hidden_dim);
        let a1 = (6.0 / (2 * hash_dim + hidden_dim) as f64).sqrt();
        let a2 = (6.0 / (hidden_dim + 1) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
        m
    }

    pub fn input_dim(&self) -> usize {
        2 * self.hash_dim
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn param(&self, index: usize) -> f64 {
        flat_get(&self.w1, &self.b1, &self.w2, self.b2, index)
    }

    pub fn param_mut(&mut self, mut i: usize) -> &mut f64 {
        if i < self.w1.len() {
            return &mut self.w1[i];
        }
        i -= self.w1.len();
        if i < self.b1.len() {
            return &mut self.b1[i];
        }
        i -= self.b1.len();
        if i < self.w2.len() {
            return &mut self.w2[i];
        }
        assert_eq!(i, self.w2.len(), "parameter index out of range");
        &mut self.b2
    }

    pub fn features(&self, obs: &str, action: &str) -> Features {
        encode(self.hash_dim, obs).concat(&encode(self.hash_dim, action))
    }

    fn hidden(&self, x: &Features) -> Vec<f64> {
        let hd = self.hidden_dim;
        let mut z = self.b1.clone();
        for (i, v) in x.iter() {
            for (z, w) in z.iter_mut().zip(&self.w1[i * hd..(i + 1) * hd]) {
                *z += w * v;
            }
        }
        z.iter_mut().for_each(|z| *z = z.tanh());
        z
    }

    pub fn forward(&self, x: &Features) -> f64 {
        let h = self.hidden(x);
        self.b2 + h.iter().zip(&self.w2).map(|(h, w)| h * w).sum::<f64>()
    }

    pub fn q_value(&self, obs: &str, action: &str) -> f64 {
        self.forward(&self.features(obs, action))
    }

    /// Values for every candidate in one observation.
    pub fn q_values(&self, obs: &str, candidates: &[String]) -> Vec<f64> {
        let o = encode(self.hash_dim, obs);
        candidates
            .iter()
            .map(|a| self.forward(&o.concat(&encode(self.hash_dim, a))))
            .collect()
    }

    /// Adds `scale * dq/dθ` at `x` into the given buffers; returns q. The
    /// weights from input `i` accumulate at `slot(i) * hidden_dim` in `w1`.
    fn backprop(&self, x: &Features, scale: f64, g: GradMut<'_>, slot: impl Fn(usize) -> usize) -> f64 {
        let h = self.hidden(x);
        let q = self.b2 + h.iter().zip(&self.w2).map(|(h, w)| h * w).sum::<f64>();
        let hd = self.hidden_dim;
        *g.b2 += scale;
        let mut dz = vec![0.0; hd];
        for j in 0..hd {
            g.w2[j] += scale * h[j];
            dz[j] = scale * self.w2[j] * (1.0 - h[j] * h[j]);
            g.b1[j] += dz[j];
        }
        for (i, v) in x.iter() {
            let at = slot(i) * hd;
            for (g, d) in g.w1[at..at + hd].iter_mut().zip(&dz) {
                *g += d * v;
            }
        }
        q
    }

    /// Analytic gradient of `q_value(obs, action)` with respect to every weight.
    pub fn gradient(&self, obs: &str, action: &str) -> Gradient {
        let mut g = Gradient::zeros(self);
        let buf = GradMut {
            w1: &mut g.w1,
            b1: &mut g.b1,
            w2: &mut g.w2,
            b2: &mut g.b2,
        };
        self.backprop(&self.features(obs, action), 1.0, buf, |i| i);
        g
    }

    /// TD target `r + discount * max_a' q(s', a')`, no bootstrap on terminal items.
    pub fn td_target(&self, t: &Transition, discount: f64) -> Result<f64, AgentError> {
        if t.done {
            return Ok(t.reward);
        }
        if t.next_candidates.is_empty() {
            return Err(AgentError::MissingNextCandidates);
        }
        let best = self
            .q_values(&t.next_obs, &t.next_candidates)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(t.reward + discount * best)
    }

    /// Per-item squared TD errors under the current weights.
    pub fn td_errors(&self, batch: &[&Transition], discount: f64) -> Result<Vec<f64>, AgentError> {
        batch
            .iter()
            .map(|t| {
                let target = self.td_target(t, discount)?;
                let q = self.q_value(&t.obs, &t.action);
                Ok((q - target).powi(2))
            })
            .collect()
    }

    /// One SGD step on the mean squared TD error with global-norm gradient
    /// clipping. Returns the loss before the update.
    pub fn td_update(
        &mut self,
        batch: &[&Transition],
        discount: f64,
        grad_clip: f64,
        learning_rate: f64,
    ) -> Result<f64, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        let targets = batch
            .iter()
            .map(|t| self.td_target(t, discount))
            .collect::<Result<Vec<_>, _>>()?;
        let xs: Vec<Features> = batch.iter().map(|t| self.features(&t.obs, &t.action)).collect();
        // Only the rows of w1 for inputs present in the batch get a gradient.
        let mut rows: Vec<usize> = xs.iter().flat_map(|x| x.indices.iter().copied()).collect();
        rows.sort_unstable();
        rows.dedup();
        let hd = self.hidden_dim;
        let mut w1 = vec![0.0; rows.len() * hd];
        let (mut b1, mut w2, mut b2) = (vec![0.0; hd], vec![0.0; hd], 0.0);
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (x, target) in xs.iter().zip(&targets) {
            let err = self.forward(x) - target;
            loss += err * err / n;
            let buf = GradMut {
                w1: &mut w1,
                b1: &mut b1,
                w2: &mut w2,
                b2: &mut b2,
            };
            self.backprop(x, 2.0 * err / n, buf, |i| rows.binary_search(&i).expect("row collected"));
        }
        if !loss.is_finite() {
            return Err(AgentError::NonFiniteLoss(loss));
        }
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let norm = (sq(&w1) + sq(&b1) + sq(&w2) + b2 * b2).sqrt();
        let step = if grad_clip > 0.0 && norm > grad_clip {
            learning_rate * grad_clip / norm
        } else {
            learning_rate
        };
        for (k, &i) in rows.iter().enumerate() {
            for (w, g) in self.w1[i * hd..(i + 1) * hd].iter_mut().zip(&w1[k * hd..(k + 1) * hd]) {
                *w -= step * g;
            }
        }
        for (w, g) in self.b1.iter_mut().zip(&b1) {
            *w -= step * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&w2) {
            *w -= step * g;
        }
        self.b2 -= step * b2;
        Ok(loss)
    }

    pub fn to_checkpoint(&self) -> String {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: std::borrow::Cow::Borrowed(self),
        };
        serde_json::to_string(&ck).expect("model serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<QModel, AgentError> {
        let ck: Checkpoint<'static> =
            serde_json::from_str(text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(AgentError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let m = ck.model.into_owned();
        let ok = m.w1.len() == m.hidden_dim * 2 * m.hash_dim && m.b1.len() == m.hidden_dim && m.w2.len() == m.hidden_dim;
        if !ok {
            return Err(AgentError::Checkpoint("weight shapes do not match declared dimensions".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        std::fs::write(path, self.to_checkpoint()).map_err(|e| AgentError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<QModel, AgentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AgentError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_checkpoint(&text)
    }
}
