use crate::analytical::{Transmit, Update};
use crate::model::{ChannelConfig, User};
use crate::Scalar;

const SLOTS_PER_ROUND: usize = 4;

fn theta_slot(user: User) -> usize {
    user
}

fn forward_slot(round: usize, user: User) -> usize {
    2 + SLOTS_PER_ROUND * round + user
}

fn feedback_slot(round: usize, user: User) -> usize {
    2 + SLOTS_PER_ROUND * round + 2 + user
}

/// Exact second-moment tracker for linear feedback codes.
///
/// Every random quantity is held as a coefficient vector over the independent
/// zero-mean sources `Θ₁, Θ₂` (unit variance) and the per-round noises
/// `Z_{u,i}, Z̃_{u,i}`. Covariances are then weighted inner products, exact up
/// to rounding whatever the input distribution.
#[derive(Clone, Debug)]
pub struct MomentTracker<T> {
    variances: Vec<T>,
    noisy_feedback: bool,
    round: usize,
    x: Vec<T>,
    y: [Vec<T>; 2],
    y_prev: [Vec<T>; 2],
    y_tilde: [Vec<T>; 2],
    y_tilde_prev: [Vec<T>; 2],
    /// `ε_u = Θ̂_u − Θ_u` at the receiver.
    dec_err: [Vec<T>; 2],
    /// The transmitter's replica of `ε_u`, driven by the fed-back outputs.
    enc_err: [Vec<T>; 2],
}

impl<T: Scalar> MomentTracker<T> {
    pub fn new(config: &ChannelConfig) -> Self {
        let n = config.blocklength();
        let len = 2 + SLOTS_PER_ROUND * n;
        let mut variances = vec![T::zero(); len];
        variances[theta_slot(0)] = T::one();
        variances[theta_slot(1)] = T::one();
        for i in 0..n {
            for u in 0..2 {
                variances[forward_slot(i, u)] = T::lit(config.sigma2_f(u));
                variances[feedback_slot(i, u)] = T::lit(config.sigma2_fb(u));
            }
        }
        let zeros = vec![T::zero(); len];
        let mut minus_theta = [zeros.clone(), zeros.clone()];
        minus_theta[0][theta_slot(0)] = -T::one();
        minus_theta[1][theta_slot(1)] = -T::one();
        Self {
            variances,
            noisy_feedback: config.feedback().is_noisy(),
            round: 0,
            x: zeros.clone(),
            y: [zeros.clone(), zeros.clone()],
            y_prev: [zeros.clone(), zeros.clone()],
            y_tilde: [zeros.clone(), zeros.clone()],
            y_tilde_prev: [zeros.clone(), zeros],
            dec_err: minus_theta.clone(),
            enc_err: minus_theta,
        }
    }

    /// Completed channel uses.
    pub fn round(&self) -> usize {
        self.round
    }

    fn cov(&self, a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .zip(&self.variances)
            .fold(T::zero(), |acc, ((&x, &y), &v)| acc + x * y * v)
    }

    fn combine(&self, weights: [T; 2], forms: &[Vec<T>; 2]) -> Vec<T> {
        forms[0]
            .iter()
            .zip(&forms[1])
            .map(|(&a, &b)| weights[0] * a + weights[1] * b)
            .collect()
    }

    /// Second moment of `w₁ε̃₁ + w₂ε̃₂` formed from the transmitter's estimates.
    pub fn encoder_combination_power(&self, weights: [T; 2]) -> T {
        let s = self.combine(weights, &self.enc_err);
        self.cov(&s, &s)
    }

    /// Sends the next symbol and forms the outputs `Y_{u,i}` and `Ỹ_{u,i}`.
    pub fn transmit(&mut self, rule: &Transmit<T>) {
        let i = self.round;
        assert!(
            SLOTS_PER_ROUND * i + 2 < self.variances.len(),
            "tracker configured for fewer rounds"
        );
        self.x = match *rule {
            Transmit::Message { user, amplitude } => {
                let mut x = vec![T::zero(); self.variances.len()];
                x[theta_slot(user)] = amplitude;
                x
            }
            Transmit::Errors { weights } => self.combine(weights, &self.enc_err),
        };
        for u in 0..2 {
            let mut y = self.x.clone();
            y[forward_slot(i, u)] = T::one();
            let mut yt = y.clone();
            if self.noisy_feedback {
                yt[feedback_slot(i, u)] = T::one();
            }
            self.y_prev[u] = std::mem::replace(&mut self.y[u], y);
            self.y_tilde_prev[u] = std::mem::replace(&mut self.y_tilde[u], yt);
        }
        self.round += 1;
    }

    /// Applies the receivers' updates to both the true and the replicated errors.
    pub fn apply(&mut self, updates: &[Update<T>; 2]) {
        for (u, update) in updates.iter().enumerate() {
            apply_update(&mut self.dec_err[u], update, u, &self.y_prev[u], &self.y[u]);
            apply_update(
                &mut self.enc_err[u],
                update,
                u,
                &self.y_tilde_prev[u],
                &self.y_tilde[u],
            );
        }
    }

    /// `E[X_i²]` of the last transmitted symbol.
    pub fn power(&self) -> T {
        self.cov(&self.x, &self.x)
    }

    /// `α_u = E[ε_u²]` at the receiver.
    pub fn alpha(&self, user: User) -> T {
        self.cov(&self.dec_err[user], &self.dec_err[user])
    }

    /// `E[ε̃_u²]` of the transmitter's replica.
    pub fn encoder_alpha(&self, user: User) -> T {
        self.cov(&self.enc_err[user], &self.enc_err[user])
    }

    /// `E[(ε̃_u − ε_u)²]`, the feedback noise carried into the replica.
    pub fn replica_gap(&self, user: User) -> T {
        let d: Vec<T> = self.enc_err[user]
            .iter()
            .zip(&self.dec_err[user])
            .map(|(&a, &b)| a - b)
            .collect();
        self.cov(&d, &d)
    }

    pub fn error_cross(&self) -> T {
        self.cov(&self.dec_err[0], &self.dec_err[1])
    }

    /// Correlation coefficient of the receivers' errors.
    pub fn rho(&self) -> T {
        self.error_cross() / (self.alpha(0) * self.alpha(1)).sqrt()
    }

    /// `E[ε_u Y_{u,i}]` for the latest output.
    pub fn err_output(&self, user: User) -> T {
        self.cov(&self.dec_err[user], &self.y[user])
    }

    /// `E[ε_u Y_{u,i−1}]` for the previous output.
    pub fn err_prev_output(&self, user: User) -> T {
        self.cov(&self.dec_err[user], &self.y_prev[user])
    }

    /// Gram matrix of `(Y_{u,i−1}, Y_{u,i})` as `[prev², prev·curr, curr²]`.
    pub fn output_gram(&self, user: User) -> [T; 3] {
        [
            self.cov(&self.y_prev[user], &self.y_prev[user]),
            self.cov(&self.y_prev[user], &self.y[user]),
            self.cov(&self.y[user], &self.y[user]),
        ]
    }

    /// `E[Y_{1,i} Y_{2,i}]`.
    pub fn output_cross(&self) -> T {
        self.cov(&self.y[0], &self.y[1])
    }
}

fn apply_update<T: Scalar>(err: &mut [T], update: &Update<T>, user: User, prev: &[T], curr: &[T]) {
    match *update {
        Update::Hold => {}
        Update::Init { gain } => {
            // ε = gain·Y − Θ_u
            for ((e, &c), k) in err.iter_mut().zip(curr).zip(0..) {
                *e = gain * c;
                if k == theta_slot(user) {
                    *e = *e - T::one();
                }
            }
        }
        Update::Refine { prev: a, curr: b } => {
            for ((e, &p), &c) in err.iter_mut().zip(prev).zip(curr) {
                *e = *e - a * p - b * c;
            }
        }
    }
}
