use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::canonical;
use crate::numerics::RngStream;

/// Fully connected ReLU network with a 2-way softmax output.
///
/// Parameters live in one flat vector, layer by layer: the weight matrix
/// of layer l (row-major, `sizes[l+1] x sizes[l]`) followed by its bias.
/// Inputs are standardized with the stored mean and std before layer 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub feature_names: Vec<String>,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    feature_names: Vec<String>,
    sizes: Vec<usize>,
    layers: Vec<LayerDoc>,
    mean: Vec<f64>,
    std: Vec<f64>,
    schema_digest: String,
}

fn schema_digest(names: &[String]) -> String {
    canonical::digest(names).expect("names serialize")
}

impl MlpModel {
    /// He-initialized weights, zero biases, identity standardization.
    pub fn new(feature_names: Vec<String>, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut sizes = vec![feature_names.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        let mut params = Vec::with_capacity(Self::param_count(&sizes));
        for l in 0..sizes.len() - 1 {
            let scale = (2.0 / sizes[l] as f64).sqrt();
            params.extend((0..sizes[l] * sizes[l + 1]).map(|_| scale * rng.standard_normal()));
            params.extend(std::iter::repeat_n(0.0, sizes[l + 1]));
        }
        let k = feature_names.len();
        Self { feature_names, sizes, params, mean: vec![0.0; k], std: vec![1.0; k] }
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for w in self.sizes.windows(2) {
            out.push(out.last().unwrap() + w[0] * w[1] + w[1]);
        }
        out
    }

    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>, TaskError> {
        if x.len() != self.n_inputs() {
            return Err(TaskError::ShapeMismatch { expected: self.n_inputs(), got: x.len() });
        }
        Ok(x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect())
    }

    /// Activations of every layer; the last entry holds the logits.
    fn activations(&self, x_std: Vec<f64>) -> Vec<Vec<f64>> {
        let offsets = self.offsets();
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x_std);
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &self.params[offsets[l] + n_in * n_out..offsets[l + 1]];
            let input = &acts[l];
            let mut out: Vec<f64> = (0..n_out)
                .map(|j| b[j] + w[j * n_in..(j + 1) * n_in].iter().zip(input).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn to_json(&self) -> String {
        let offsets = self.offsets();
        let layers = (0..self.sizes.len() - 1)
            .map(|l| {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
                LayerDoc {
                    weights: w.chunks(n_in).map(<[f64]>::to_vec).collect(),
                    bias: self.params[offsets[l] + n_in * n_out..offsets[l + 1]].to_vec(),
                }
            })
            .collect();
        let doc = ModelDoc {
            feature_names: self.feature_names.clone(),
            sizes: self.sizes.clone(),
            layers,
            mean: self.mean.clone(),
            std: self.std.clone(),
            schema_digest: schema_digest(&self.feature_names),
        };
        canonical::to_canonical_string(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TaskError> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| TaskError::Format(e.to_string()))?;
        if doc.schema_digest != schema_digest(&doc.feature_names) {
            return Err(TaskError::Format("schema digest does not match feature names".into()));
        }
        let k = doc.feature_names.len();
        if doc.sizes.first() != Some(&k) || doc.sizes.last() != Some(&2) || doc.layers.len() + 1 != doc.sizes.len() {
            return Err(TaskError::Format("layer sizes inconsistent with features".into()));
        }
        if doc.mean.len() != k || doc.std.len() != k {
            return Err(TaskError::Format("standardization vectors have the wrong length".into()));
        }
        let mut params = Vec::with_capacity(Self::param_count(&doc.sizes));
        for (l, layer) in doc.layers.into_iter().enumerate() {
            let (n_in, n_out) = (doc.sizes[l], doc.sizes[l + 1]);
            if layer.weights.len() != n_out || layer.weights.iter().any(|r| r.len() != n_in) || layer.bias.len() != n_out {
                return Err(TaskError::Format(format!("layer {l} has the wrong shape")));
            }
            params.extend(layer.weights.into_iter().flatten());
            params.extend(layer.bias);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(TaskError::Format("non-finite parameter".into()));
        }
        Ok(Self { feature_names: doc.feature_names, sizes: doc.sizes, params, mean: doc.mean, std: doc.std })
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Class probabilities for one raw feature vector.
pub fn forward(model: &MlpModel, features: &[f64]) -> Result<Vec<f64>, TaskError> {
    let acts = model.activations(model.standardize(features)?);
    Ok(softmax(acts.last().expect("output layer")))
}

/// Argmax class; a tie goes to class 0.
pub fn predict(model: &MlpModel, features: &[f64]) -> Result<u8, TaskError> {
    let acts = model.activations(model.standardize(features)?);
    let z = acts.last().expect("output layer");
    Ok(u8::from(z[1] > z[0]))
}

fn check_batch(model: &MlpModel, xs: &[Vec<f64>], ys: &[u8]) -> Result<(), TaskError> {
    if xs.is_empty() {
        return Err(TaskError::EmptyBatch);
    }
    if xs.len() != ys.len() {
        return Err(TaskError::ShapeMismatch { expected: xs.len(), got: ys.len() });
    }
    if let Some(&bad) = ys.iter().find(|&&y| y > 1) {
        return Err(TaskError::BadLabel(bad));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != model.n_inputs()) {
        return Err(TaskError::ShapeMismatch { expected: model.n_inputs(), got: x.len() });
    }
    Ok(())
}

pub fn mean_cross_entropy(model: &MlpModel, xs: &[Vec<f64>], ys: &[u8]) -> Result<f64, TaskError> {
    check_batch(model, xs, ys)?;
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let acts = model.activations(model.standardize(x)?);
        let z = acts.last().expect("output layer");
        // log-sum-exp form stays finite for saturated logits
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        total += lse - z[usize::from(y)];
    }
    Ok(total / xs.len() as f64)
}

/// Gradient of the mean cross-entropy over the batch, laid out like
/// `model.params`.
pub fn backward(model: &MlpModel, xs: &[Vec<f64>], ys: &[u8]) -> Result<Vec<f64>, TaskError> {
    check_batch(model, xs, ys)?;
    let offsets = model.offsets();
    let n_layers = model.sizes.len() - 1;
    let mut grad = vec![0.0; model.params.len()];
    let inv_n = 1.0 / xs.len() as f64;
    for (x, &y) in xs.iter().zip(ys) {
        let acts = model.activations(model.standardize(x)?);
        let mut delta = softmax(&acts[n_layers]);
        delta[usize::from(y)] -= 1.0;
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (model.sizes[l], model.sizes[l + 1]);
            let w_off = offsets[l];
            let b_off = w_off + n_in * n_out;
            let input = &acts[l];
            for j in 0..n_out {
                let d = delta[j] * inv_n;
                if d == 0.0 {
                    continue;
                }
                grad[b_off + j] += d;
                let row = &mut grad[w_off + j * n_in..w_off + (j + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let w = &model.params[w_off..b_off];
                let mut prev = vec![0.0; n_in];
                for j in 0..n_out {
                    if delta[j] == 0.0 {
                        continue;
                    }
                    for (p, wv) in prev.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *p += delta[j] * wv;
                    }
                }
                // ReLU derivative, zero at the kink
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn zero_weights_give_uniform() {
        let mut m = MlpModel::new(names(3), &[128, 128], &mut RngStream::new(0, 0));
        m.params.iter_mut().for_each(|p| *p = 0.0);
        assert_eq!(forward(&m, &[1.0, -2.0, 3.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(predict(&m, &[1.0, -2.0, 3.0]).unwrap(), 0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = MlpModel::new(names(4), &[128, 128], &mut RngStream::new(1, 0));
        let mut rng = RngStream::new(2, 0);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| 5.0 * rng.standard_normal()).collect();
            let p = forward(&m, &x).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shared_logit_shift_is_invisible() {
        let mut m = MlpModel::new(names(2), &[16, 16], &mut RngStream::new(3, 0));
        let x = [0.3, -0.7];
        let before = forward(&m, &x).unwrap();
        let n = m.params.len();
        m.params[n - 1] += 7.0;
        m.params[n - 2] += 7.0;
        let after = forward(&m, &x).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_width_rejected() {
        let m = MlpModel::new(names(2), &[4], &mut RngStream::new(0, 0));
        assert_eq!(forward(&m, &[1.0]).unwrap_err(), TaskError::ShapeMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn json_round_trip() {
        let mut m = MlpModel::new(names(3), &[8, 8], &mut RngStream::new(4, 0));
        m.mean = vec![1.0, 2.0, 3.0];
        m.std = vec![0.5, 1.5, 2.5];
        let back = MlpModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let tampered = m.to_json().replace("\"f0\"", "\"g0\"");
        assert!(MlpModel::from_json(&tampered).is_err());
    }
}
