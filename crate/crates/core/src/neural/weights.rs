use crate::error::WeightsError;
use crate::model::MAX_BITS;
use crate::neural::layers::{cast_vec, Activation, Dense, EncoderHead, FeWiring, FeatureExtractor};
use crate::Scalar;

/// Frozen standardization statistics of the power-constraint block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsStat<T> {
    pub mean: T,
    pub var: T,
}

/// All tensors and metadata of a trained codec.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecWeights<T> {
    pub d_h: usize,
    pub n: usize,
    pub k: [u32; 2],
    pub power: f64,
    pub activation: Activation,
    pub fe_wiring: FeWiring,
    pub ln_eps: f64,
    pub ps_eps: f64,
    /// Per-round transmit scales `β_1..β_N`.
    pub beta: Vec<T>,
    /// Per-round statistics; entries for the two PAM rounds are unused.
    pub ps_stats: Vec<PsStat<T>>,
    pub fe_enc: FeatureExtractor<T>,
    pub mlp_enc: EncoderHead<T>,
    pub fe_dec: [FeatureExtractor<T>; 2],
    pub mlp_dec: [Dense<T>; 2],
    /// Opaque trainer metadata carried through the header.
    pub training: Option<serde_json::Value>,
}

/// Tolerance on `(1/N)Σβ² = P`.
pub const BETA_POWER_TOL: f64 = 1e-6;

impl<T: Scalar> CodecWeights<T> {
    /// Classes of user `u`'s decoder, `2^K_u`.
    pub fn classes(&self, user: usize) -> usize {
        1 << self.k[user]
    }

    /// Encoder input length `3(N−1)`.
    pub fn encoder_input_len(&self) -> usize {
        3 * (self.n - 1)
    }

    /// `(1/N)Σβ²`.
    pub fn mean_beta_power(&self) -> f64 {
        self.beta.iter().map(|b| b.as_f64().powi(2)).sum::<f64>() / self.beta.len() as f64
    }

    /// Tensors in file order with their expected shapes.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        tensor_specs(self.d_h, self.n, [self.classes(0), self.classes(1)])
    }

    /// Checks every shape and the power constraint; the loader calls this.
    pub fn validate(&self) -> Result<(), WeightsError> {
        let invalid = |m: String| Err(WeightsError::Invalid(m));
        if self.d_h == 0 {
            return invalid("hidden width must be positive".into());
        }
        if self.n < 2 {
            return invalid(format!("blocklength must be at least 2, got {}", self.n));
        }
        if self.k.iter().any(|&k| k == 0 || k > MAX_BITS) {
            return invalid(format!("message lengths out of range: {:?}", self.k));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return invalid(format!("power must be positive, got {}", self.power));
        }
        if !(self.ln_eps.is_finite() && self.ln_eps >= 0.0)
            || !(self.ps_eps.is_finite() && self.ps_eps >= 0.0)
        {
            return invalid("normalization epsilons must be finite and >= 0".into());
        }
        if self.beta.len() != self.n {
            return invalid(format!(
                "expected {} beta values, got {}",
                self.n,
                self.beta.len()
            ));
        }
        if self.ps_stats.len() != self.n {
            return invalid(format!(
                "expected {} ps_stats entries, got {}",
                self.n,
                self.ps_stats.len()
            ));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(WeightsError::NonFinite("beta".into()));
        }
        if self
            .ps_stats
            .iter()
            .any(|s| !s.mean.is_finite() || !s.var.is_finite() || s.var < T::zero())
        {
            return invalid("ps_stats must be finite with non-negative variance".into());
        }
        let beta_power = self.mean_beta_power();
        if (beta_power - self.power).abs() > BETA_POWER_TOL {
            return invalid(format!(
                "mean beta^2 = {beta_power} violates the power constraint P = {}",
                self.power
            ));
        }
        for ((name, expected), found) in self.tensor_specs().into_iter().zip(self.tensor_shapes()) {
            if expected != found {
                return Err(WeightsError::Shape {
                    tensor: name,
                    expected,
                    found,
                });
            }
        }
        for (name, data) in self.tensor_data() {
            if data.iter().any(|v| !v.is_finite()) {
                return Err(WeightsError::NonFinite(name));
            }
        }
        Ok(())
    }

    fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::with_capacity(26);
        let fe = |fe: &FeatureExtractor<T>, out: &mut Vec<Vec<usize>>| {
            out.push(vec![fe.fc1.outputs(), fe.fc1.inputs()]);
            out.push(vec![fe.fc1.outputs()]);
            out.push(vec![fe.fc2.outputs(), fe.fc2.inputs()]);
            out.push(vec![fe.fc2.outputs()]);
            out.push(vec![fe.norm_gain.len()]);
            out.push(vec![fe.norm_bias.len()]);
        };
        let dense = |d: &Dense<T>, out: &mut Vec<Vec<usize>>| {
            out.push(vec![d.outputs(), d.inputs()]);
            out.push(vec![d.outputs()]);
        };
        fe(&self.fe_enc, &mut shapes);
        dense(&self.mlp_enc.fc1, &mut shapes);
        dense(&self.mlp_enc.fc2, &mut shapes);
        for u in 0..2 {
            fe(&self.fe_dec[u], &mut shapes);
            dense(&self.mlp_dec[u], &mut shapes);
        }
        shapes
    }

    /// Flat tensor data in file order, paired with tensor names.
    pub fn tensor_data(&self) -> Vec<(String, &[T])> {
        let names = self.tensor_specs().into_iter().map(|(n, _)| n);
        let mut data: Vec<&[T]> = Vec::with_capacity(26);
        data.extend(fe_slices(&self.fe_enc));
        data.extend([
            self.mlp_enc.fc1.weight(),
            self.mlp_enc.fc1.bias(),
            self.mlp_enc.fc2.weight(),
            self.mlp_enc.fc2.bias(),
        ]);
        for u in 0..2 {
            data.extend(fe_slices(&self.fe_dec[u]));
            data.extend([self.mlp_dec[u].weight(), self.mlp_dec[u].bias()]);
        }
        names.zip(data).collect()
    }

    /// Converts every tensor to another precision.
    pub fn cast<U: Scalar>(&self) -> CodecWeights<U> {
        CodecWeights {
            d_h: self.d_h,
            n: self.n,
            k: self.k,
            power: self.power,
            activation: self.activation,
            fe_wiring: self.fe_wiring,
            ln_eps: self.ln_eps,
            ps_eps: self.ps_eps,
            beta: cast_vec(&self.beta),
            ps_stats: self
                .ps_stats
                .iter()
                .map(|s| PsStat {
                    mean: U::lit(s.mean.as_f64()),
                    var: U::lit(s.var.as_f64()),
                })
                .collect(),
            fe_enc: self.fe_enc.cast(),
            mlp_enc: self.mlp_enc.cast(),
            fe_dec: [self.fe_dec[0].cast(), self.fe_dec[1].cast()],
            mlp_dec: [self.mlp_dec[0].cast(), self.mlp_dec[1].cast()],
            training: self.training.clone(),
        }
    }
}

fn fe_slices<T: Scalar>(fe: &FeatureExtractor<T>) -> [&[T]; 6] {
    [
        fe.fc1.weight(),
        fe.fc1.bias(),
        fe.fc2.weight(),
        fe.fc2.bias(),
        &fe.norm_gain,
        &fe.norm_bias,
    ]
}

/// Names and shapes of every tensor, in file order.
pub(crate) fn tensor_specs(d_h: usize, n: usize, classes: [usize; 2]) -> Vec<(String, Vec<usize>)> {
    let mut specs = Vec::with_capacity(26);
    let mut fe = |prefix: &str, inputs: usize| {
        specs.push((format!("{prefix}.fc1.weight"), vec![d_h, inputs]));
        specs.push((format!("{prefix}.fc1.bias"), vec![d_h]));
        specs.push((format!("{prefix}.fc2.weight"), vec![d_h, d_h]));
        specs.push((format!("{prefix}.fc2.bias"), vec![d_h]));
        specs.push((format!("{prefix}.norm.weight"), vec![d_h]));
        specs.push((format!("{prefix}.norm.bias"), vec![d_h]));
    };
    fe("fe_enc", 3 * (n - 1));
    specs.push(("mlp_enc.fc1.weight".into(), vec![d_h, d_h]));
    specs.push(("mlp_enc.fc1.bias".into(), vec![d_h]));
    specs.push(("mlp_enc.fc2.weight".into(), vec![1, d_h]));
    specs.push(("mlp_enc.fc2.bias".into(), vec![1]));
    for (u, &c) in classes.iter().enumerate() {
        let prefix = format!("fe_dec{}", u + 1);
        for (name, shape) in [
            (format!("{prefix}.fc1.weight"), vec![d_h, n]),
            (format!("{prefix}.fc1.bias"), vec![d_h]),
            (format!("{prefix}.fc2.weight"), vec![d_h, d_h]),
            (format!("{prefix}.fc2.bias"), vec![d_h]),
            (format!("{prefix}.norm.weight"), vec![d_h]),
            (format!("{prefix}.norm.bias"), vec![d_h]),
            (format!("mlp_dec{}.weight", u + 1), vec![c, d_h]),
            (format!("mlp_dec{}.bias", u + 1), vec![c]),
        ] {
            specs.push((name, shape));
        }
    }
    specs
}
