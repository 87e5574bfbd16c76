//! Minimal fully connected networks with backpropagation.
//!
//! Only what the actor/critic topologies need: dense layers, rectifier hidden
//! activation, linear or box-bounded (tanh-rescaled) output, and gradients of
//! `<upstream, forward(x)>` with respect to both the parameters and the input.
//! The input gradient is what lets constraint/reward critics push gradients
//! through the action into the actor.
//!
//! All arithmetic is `f64`. Weight layout is `(in, out)` so a batch forward is
//! `x.dot(w) + b` on `(batch, in)` inputs.

mod adam;

pub use adam::AdamState;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Output activation of the last layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum OutputActivation {
    Linear,
    /// `y_i = mid_i + half_i * tanh(z_i)` — output strictly inside `(lo, hi)`.
    Squash { lo: Array1<f64>, hi: Array1<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    /// Shape `(in, out)`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Fully connected network: rectifier hidden layers, configurable output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    output: OutputActivation,
}

/// Parameter gradients shaped like the network.
#[derive(Debug, Clone)]
pub struct Grads {
    pub layers: Vec<Layer>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Grads {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect(),
        }
    }

    /// Flatten in the same order as [`Mlp::params_flat`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w.mapv_inplace(|x| x * s);
            l.b.mapv_inplace(|x| x * s);
        }
    }
}

impl Mlp {
    /// Build a network with uniform `±1/sqrt(fan_in)` initialization.
    ///
    /// `sizes` lists input width, hidden widths, output width.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self> {
        Self::validate_sizes(sizes, &output)?;
        let layers = sizes
            .windows(2)
            .map(|wnd| {
                let (fan_in, fan_out) = (wnd[0], wnd[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
                let b = Array1::from_shape_fn(fan_out, |_| rng.gen_range(-bound..bound));
                Layer { w, b }
            })
            .collect();
        Ok(Mlp { layers, output })
    }

    /// All-zero parameters (used in tests and for the midpoint-action property).
    pub fn zeroed(sizes: &[usize], output: OutputActivation) -> Result<Self> {
        Self::validate_sizes(sizes, &output)?;
        let layers = sizes
            .windows(2)
            .map(|wnd| Layer {
                w: Array2::zeros((wnd[0], wnd[1])),
                b: Array1::zeros(wnd[1]),
            })
            .collect();
        Ok(Mlp { layers, output })
    }

    fn validate_sizes(sizes: &[usize], output: &OutputActivation) -> Result<()> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        if let OutputActivation::Squash { lo, hi } = output {
            let out = *sizes.last().unwrap();
            if lo.len() != out || hi.len() != out {
                return Err(Error::config("action box dimension != output width"));
            }
            if lo.iter().zip(hi.iter()).any(|(l, h)| !(l < h)) {
                return Err(Error::config("action box must satisfy lo < hi"));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flattened parameters: per layer, weights row-major then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                got: flat.len(),
                context: "set_params_flat",
            });
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = *it.next().unwrap();
            }
            for b in l.b.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Forward pass on a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: x.len(),
                context: "forward input",
            });
        }
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        Ok(self.forward_batch(&xb).row(0).to_vec())
    }

    /// Batched forward pass; rows are samples.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.input_dim(), "forward_batch input width");
        let mut a = x.dot(&self.layers[0].w) + &self.layers[0].b;
        for layer in self.layers.iter().skip(1) {
            a.mapv_inplace(relu);
            a = a.dot(&layer.w) + &layer.b;
        }
        self.apply_output(&mut a);
        a
    }

    fn apply_output(&self, z: &mut Array2<f64>) {
        if let OutputActivation::Squash { lo, hi } = &self.output {
            for mut row in z.rows_mut() {
                for (j, v) in row.iter_mut().enumerate() {
                    let mid = 0.5 * (lo[j] + hi[j]);
                    let half = 0.5 * (hi[j] - lo[j]);
                    *v = mid + half * v.tanh();
                }
            }
        }
    }

    /// Gradients of `<upstream, forward(net, x)>` w.r.t. parameters and input.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Grads, Vec<f64>)> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: x.len(),
                context: "backward input",
            });
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                got: upstream.len(),
                context: "backward upstream",
            });
        }
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        let ub = Array2::from_shape_vec((1, upstream.len()), upstream.to_vec()).unwrap();
        let (grads, dx) = self.backward_batch(&xb, &ub);
        Ok((grads, dx.row(0).to_vec()))
    }

    /// Batched backward pass. Returns parameter gradients summed over the batch
    /// and the per-sample input gradients.
    pub fn backward_batch(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> (Grads, Array2<f64>) {
        assert_eq!(x.ncols(), self.input_dim(), "backward_batch input width");
        assert_eq!(upstream.ncols(), self.output_dim(), "backward_batch upstream width");
        assert_eq!(x.nrows(), upstream.nrows(), "backward_batch batch size");

        let n = self.layers.len();
        // Forward, caching post-activation inputs of every layer.
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(n);
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut z = cur.dot(&layer.w) + &layer.b;
            if i + 1 < n {
                z.mapv_inplace(relu);
            }
            cur = z;
        }
        // `cur` holds the output pre-activation.
        let mut delta = upstream.clone();
        if let OutputActivation::Squash { lo, hi } = &self.output {
            for (mut drow, zrow) in delta.rows_mut().into_iter().zip(cur.rows()) {
                for (j, d) in drow.iter_mut().enumerate() {
                    let half = 0.5 * (hi[j] - lo[j]);
                    let t = zrow[j].tanh();
                    *d *= half * (1.0 - t * t);
                }
            }
        }

        let mut grads = Grads::zeros_like(self);
        for i in (0..n).rev() {
            grads.layers[i].w = inputs[i].t().dot(&delta);
            grads.layers[i].b = delta.sum_axis(Axis(0));
            let mut dx = delta.dot(&self.layers[i].w.t());
            if i > 0 {
                // gate through the rectifier of the previous hidden layer
                dx.zip_mut_with(&inputs[i], |d, a| {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            delta = dx;
        }
        (grads, delta)
    }

    /// Input gradients only — like [`Self::backward_batch`] but skipping the
    /// parameter gradients. Used when a critic only propagates into the actor.
    pub fn input_grad_batch(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.input_dim(), "input_grad_batch input width");
        assert_eq!(upstream.ncols(), self.output_dim(), "input_grad_batch upstream width");
        let n = self.layers.len();
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(n);
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut z = cur.dot(&layer.w) + &layer.b;
            if i + 1 < n {
                z.mapv_inplace(relu);
            }
            cur = z;
        }
        let mut delta = upstream.clone();
        if let OutputActivation::Squash { lo, hi } = &self.output {
            for (mut drow, zrow) in delta.rows_mut().into_iter().zip(cur.rows()) {
                for (j, d) in drow.iter_mut().enumerate() {
                    let half = 0.5 * (hi[j] - lo[j]);
                    let t = zrow[j].tanh();
                    *d *= half * (1.0 - t * t);
                }
            }
        }
        for i in (0..n).rev() {
            let mut dx = delta.dot(&self.layers[i].w.t());
            if i > 0 {
                dx.zip_mut_with(&inputs[i], |d, a| {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            delta = dx;
        }
        delta
    }

    /// Smallest absolute hidden pre-activation over a batch of inputs — the
    /// distance to the nearest rectifier kink, where finite differences of the
    /// network stop being valid.
    pub fn hidden_kink_margin(&self, x: &Array2<f64>) -> f64 {
        let n = self.layers.len();
        let mut margin = f64::INFINITY;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = cur.dot(&layer.w) + &layer.b;
            if i + 1 < n {
                for v in z.iter() {
                    margin = margin.min(v.abs());
                }
                z.mapv_inplace(relu);
            }
            cur = z;
        }
        margin
    }

    pub fn output_activation(&self) -> &OutputActivation {
        &self.output
    }
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Apply one Adam step to a network in place.
pub fn adam_update(state: &mut AdamState, net: &mut Mlp, grads: &Grads) -> Result<()> {
    let mut params = net.params_flat();
    let g = grads.flatten();
    state.step(&mut params, &g)?;
    net.set_params_flat(&params)
}

pub fn squash_midpoint(lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()
}

#[allow(unused)]
fn _assert_view(_: ArrayView1<f64>) {}

#[cfg(test)]
mod tests;
