//! Fully connected Q-network: rectifier hidden layers, linear output, one
//! output per joint action. Gradients are derived by hand.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense layer, weights row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn unit(&self, o: usize, x: &[f64]) -> f64 {
        self.biases[o] + dot(self.row(o), x)
    }

    fn apply(&self, x: &[f64], relu: bool) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let z = self.unit(o, x);
                if relu { z.max(0.0) } else { z }
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<Layer>,
}

/// One `(state, action, target)` regression sample.
pub type Sample<'a> = (&'a [f64], usize, f64);

impl QNetwork {
    /// He-uniform hidden weights, zero biases and a zero output layer, so
    /// every action value starts at 0.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let hidden = net.layers.len() - 1;
        for layer in &mut net.layers[..hidden] {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&n| n > 0), "bad layer sizes {sizes:?}");
        Self { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            h = layer.apply(&h, k < last);
        }
        h
    }

    /// Inputs to every layer; the last entry feeds the output layer.
    fn hidden(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for layer in &self.layers[..self.layers.len() - 1] {
            let next = layer.apply(acts.last().expect("non-empty"), true);
            acts.push(next);
        }
        acts
    }

    /// Mean squared error over the batch on the taken actions, and its gradient.
    pub fn loss_and_gradient(&self, batch: &[Sample]) -> (f64, QNetwork) {
        let mut grad = QNetwork::zeros(&self.sizes());
        let m = batch.len() as f64;
        let mut loss = 0.0;
        let out = self.layers.len() - 1;
        for &(x, a, y) in batch {
            let acts = self.hidden(x);
            let q = self.layers[out].unit(a, &acts[out]);
            let err = q - y;
            loss += err * err / m;
            // Only output `a` carries gradient.
            let g = 2.0 * err / m;
            let gl = &mut grad.layers[out];
            let n = gl.inputs;
            for (dw, h) in gl.weights[a * n..(a + 1) * n].iter_mut().zip(&acts[out]) {
                *dw += g * h;
            }
            gl.biases[a] += g;
            let mut delta: Vec<f64> = self.layers[out].row(a).iter().map(|w| g * w).collect();
            for k in (0..out).rev() {
                // acts[k + 1] is the rectified output of layer k.
                for (d, h) in delta.iter_mut().zip(&acts[k + 1]) {
                    if *h <= 0.0 {
                        *d = 0.0;
                    }
                }
                let layer = &self.layers[k];
                let gl = &mut grad.layers[k];
                let mut back = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gl.biases[o] += d;
                    for (dw, x) in gl.weights[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(&acts[k]) {
                        *dw += d * x;
                    }
                    for (b, w) in back.iter_mut().zip(layer.row(o)) {
                        *b += d * w;
                    }
                }
                delta = back;
            }
        }
        (loss, grad)
    }

    /// `θ ← θ − lr·g`.
    pub fn descend(&mut self, grad: &QNetwork, lr: f64) {
        for (p, g) in self.params_mut().zip(grad.params()) {
            *p -= lr * g;
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }
}

/// Adam moment estimates, one slot per network parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(net: &QNetwork) -> Self {
        let n = net.param_count();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, net: &mut QNetwork, grad: &QNetwork, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in net.params_mut().zip(grad.params()).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = k;
        }
    }
    best
}
