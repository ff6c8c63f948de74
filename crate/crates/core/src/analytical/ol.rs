use crate::error::{Error, Result};
use crate::model::{ChannelConfig, User};
use crate::Scalar;

/// Sign with `sgn(0) = 1`.
#[inline]
pub fn sgn<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

/// Trade-off weight `g` between the two users' errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OlParams<T> {
    g: T,
}

impl<T: Scalar> OlParams<T> {
    pub fn new(g: T) -> Result<Self> {
        if !(g.is_finite() && g >= T::zero()) {
            return Err(Error::invalid(format!(
                "g must be finite and >= 0, got {g}"
            )));
        }
        Ok(Self { g })
    }

    pub fn g(&self) -> T {
        self.g
    }
}

impl<T: Scalar> Default for OlParams<T> {
    fn default() -> Self {
        Self { g: T::one() }
    }
}

/// Receiver estimates plus the error statistics both ends track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OlState<T> {
    /// `Θ̂_u` after the last completed round.
    pub theta_hat: [T; 2],
    /// `α_u = E[ε_u²]`.
    pub alpha: [T; 2],
    /// Correlation coefficient of `ε_1` and `ε_2`.
    pub rho: T,
    /// Number of completed channel uses.
    pub round: usize,
}

impl<T: Scalar> OlState<T> {
    /// State after the two PAM rounds, each receiver holding its LMMSE estimate.
    pub fn after_init(theta_hat: [T; 2], config: &ChannelConfig) -> Self {
        let alpha = [
            lmmse_init_variance(config, 0),
            lmmse_init_variance(config, 1),
        ];
        Self {
            theta_hat,
            alpha,
            rho: T::zero(),
            round: 2,
        }
    }

    /// `D = 1 + g² + 2g|ρ|`.
    pub fn d(&self, params: &OlParams<T>) -> T {
        let g = params.g();
        T::one() + g * g + T::lit(2.0) * g * self.rho.abs()
    }
}

fn lmmse_init_variance<T: Scalar>(config: &ChannelConfig, user: User) -> T {
    let s2 = config.sigma2_f(user);
    T::lit(s2 / (config.power() + s2))
}

/// Second moments the receivers need for the memoryless MMSE step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet<T> {
    /// `E[Y_u²]`
    pub e_y2: [T; 2],
    /// `E[ε_u Y_u]`
    pub e_eps_own_y: [T; 2],
    /// `E[ε_ū Y_u]`, the other user's error against this user's output.
    pub e_eps_cross_y: [T; 2],
    /// `E[Y_1 Y_2]`
    pub e_y1y2: T,
}

impl<T: Scalar> MomentSet<T> {
    /// MMSE coefficient `c_u = E[ε_u Y_u] / E[Y_u²]`.
    pub fn coefficient(&self, user: User) -> T {
        self.e_eps_own_y[user] / self.e_y2[user]
    }
}

/// LMMSE estimate of `Θ_u` from the PAM round carrying it, and its error variance.
pub fn ol_init_estimate<T: Scalar>(y: T, user: User, config: &ChannelConfig) -> (T, T) {
    let p = config.power();
    let gain = T::lit(p.sqrt() / (p + config.sigma2_f(user)));
    (gain * y, lmmse_init_variance(config, user))
}

/// Refinement symbol `√(P/D)·[ε₁/√α₁ + g·sgn(ρ)·ε₂/√α₂]`.
pub fn ol_encode<T: Scalar>(
    state: &OlState<T>,
    eps: [T; 2],
    params: &OlParams<T>,
    power: T,
) -> Result<T> {
    if !state.alpha.iter().all(|a| *a > T::zero()) {
        return Err(Error::Invariant(format!(
            "error variances must be positive at round {}: {:?}",
            state.round + 1,
            state.alpha
        )));
    }
    let scale = (power / state.d(params)).sqrt();
    let combo = eps[0] / state.alpha[0].sqrt()
        + eps[1] / state.alpha[1].sqrt() * params.g() * sgn(state.rho);
    Ok(scale * combo)
}

/// Closed-form moments of the next refinement round.
pub fn ol_moments<T: Scalar>(
    state: &OlState<T>,
    params: &OlParams<T>,
    config: &ChannelConfig,
) -> MomentSet<T> {
    let p = T::lit(config.power());
    let g = params.g();
    let scale = (p / state.d(params)).sqrt();
    let abs_rho = state.rho.abs();
    let own = [
        scale * state.alpha[0].sqrt() * (T::one() + g * abs_rho),
        scale * state.alpha[1].sqrt() * (g + abs_rho) * sgn(state.rho),
    ];
    // Forward noises are independent of the errors, so E[ε_ū Y_u] = E[ε_ū X],
    // which is the other user's own moment.
    MomentSet {
        e_y2: [
            p + T::lit(config.sigma2_f(0)),
            p + T::lit(config.sigma2_f(1)),
        ],
        e_eps_own_y: own,
        e_eps_cross_y: [own[1], own[0]],
        e_y1y2: p,
    }
}

/// Memoryless MMSE refinement `Θ̂_u ← Θ̂_u − c_u·Y_u` with the matching
/// variance and correlation updates.
pub fn ol_decode_update<T: Scalar>(
    state: &OlState<T>,
    y: [T; 2],
    moments: &MomentSet<T>,
) -> OlState<T> {
    let c = [moments.coefficient(0), moments.coefficient(1)];
    let theta_hat = [
        state.theta_hat[0] - c[0] * y[0],
        state.theta_hat[1] - c[1] * y[1],
    ];
    let alpha = [
        state.alpha[0] - c[0] * moments.e_eps_own_y[0],
        state.alpha[1] - c[1] * moments.e_eps_own_y[1],
    ];
    // E[ε₁'ε₂'] = E[ε₁ε₂] − c₁E[ε₂Y₁] − c₂E[ε₁Y₂] + c₁c₂E[Y₁Y₂]
    let cross = state.rho * (state.alpha[0] * state.alpha[1]).sqrt()
        - c[0] * moments.e_eps_cross_y[0]
        - c[1] * moments.e_eps_cross_y[1]
        + c[0] * c[1] * moments.e_y1y2;
    let rho = cross / (alpha[0] * alpha[1]).sqrt();
    OlState {
        theta_hat,
        alpha,
        rho,
        round: state.round + 1,
    }
}

/// OL refinement symbol built from the transmitter's feedback-corrupted error
/// estimates, rescaled so its second moment is `power`.
///
/// `second_moment` is the exact `E[S²]` of the unnormalized symbol
/// `S = ol_encode(state, eps_tilde)` under feedback noise, as tracked by
/// [`MomentTracker`](super::MomentTracker).
pub fn noisy_feedback_encode<T: Scalar>(
    state: &OlState<T>,
    eps_tilde: [T; 2],
    params: &OlParams<T>,
    power: T,
    second_moment: T,
) -> Result<T> {
    if second_moment.is_nan() || second_moment <= T::zero() {
        return Err(Error::Invariant(format!(
            "symbol second moment must be positive, got {second_moment}"
        )));
    }
    Ok(ol_encode(state, eps_tilde, params, power)? * (power / second_moment).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Feedback;

    fn cfg(s2: f64) -> ChannelConfig {
        ChannelConfig::new(1.0, [s2, s2], Feedback::Noiseless, 9, [1, 1]).unwrap()
    }

    fn state(alpha: f64, rho: f64) -> OlState<f64> {
        OlState {
            theta_hat: [0.0; 2],
            alpha: [alpha; 2],
            rho,
            round: 3,
        }
    }

    #[test]
    fn init_estimate() {
        let c = cfg(0.5);
        assert_eq!(ol_init_estimate(0.0f64, 0, &c).0, 0.0);
        let (t, a) = ol_init_estimate(1.2f64, 1, &c);
        assert!((t - 0.8).abs() < 1e-12);
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn encode_examples() {
        let p = OlParams::default();
        let s = state(0.25, 0.0);
        assert_eq!(ol_encode(&s, [0.0, 0.0], &p, 1.0).unwrap(), 0.0);
        let x = ol_encode(&s, [0.1, 0.0], &p, 1.0).unwrap();
        assert!((x - 0.141421).abs() < 1e-6);
        assert!(ol_encode(&s, [0.1, -0.1], &p, 1.0).unwrap().abs() < 1e-15);
        let bad = state(0.0, 0.0);
        assert!(matches!(
            ol_encode(&bad, [0.1, 0.0], &p, 1.0),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn sgn_convention() {
        assert_eq!(sgn(0.0f64), 1.0);
        assert_eq!(sgn(-0.0f64), 1.0);
        assert_eq!(sgn(-1e-30f64), -1.0);
    }

    #[test]
    fn moments_examples() {
        let p = OlParams::default();
        let m = ol_moments(&state(1.0 / 3.0, 0.0), &p, &cfg(0.5));
        assert!((m.e_eps_own_y[0] - 0.408248).abs() < 1e-6);
        assert_eq!(m.e_y1y2, 1.0);
        assert_eq!(m.e_y2, [1.5, 1.5]);
        for rho in [-0.9, -0.3, 0.0, 0.4] {
            let m = ol_moments(&state(0.2, rho), &p, &cfg(0.5));
            assert!((m.e_eps_own_y[0] - m.e_eps_own_y[1].abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn decode_update_checkpoint() {
        let p = OlParams::default();
        let c = cfg(0.5);
        let s = state(1.0 / 3.0, 0.0);
        let m = ol_moments(&s, &p, &c);
        let next = ol_decode_update(&s, [0.0, 0.0], &m);
        assert_eq!(next.theta_hat, s.theta_hat);
        assert!((next.alpha[0] - 0.222222).abs() < 1e-6);
        assert!((next.alpha[1] - 0.222222).abs() < 1e-6);
        assert!((next.rho + 0.666667).abs() < 1e-6);
        assert_eq!(next.round, 4);
    }

    /// E[X²] = P for every ρ and g.
    #[test]
    fn encoder_power_identity() {
        for g in [0.0, 0.5, 1.0, 2.0] {
            let params = OlParams::new(g).unwrap();
            for rho in [-0.95, -0.5, 0.0, 0.3, 0.99] {
                let (a1, a2) = (0.3, 0.07);
                let s = OlState {
                    theta_hat: [0.0; 2],
                    alpha: [a1, a2],
                    rho,
                    round: 3,
                };
                // E[X²] from the bilinear form of the encoder weights.
                let w1 = ol_encode(&s, [1.0f64, 0.0], &params, 2.0).unwrap();
                let w2 = ol_encode(&s, [0.0f64, 1.0], &params, 2.0).unwrap();
                let ex2 = w1 * w1 * a1 + w2 * w2 * a2 + 2.0 * w1 * w2 * rho * (a1 * a2).sqrt();
                assert!((ex2 - 2.0).abs() < 1e-12, "g={g} rho={rho}: {ex2}");
            }
        }
    }

    #[test]
    fn noisy_encode_reduces_to_noiseless() {
        let p = OlParams::default();
        let s = state(0.2, -0.4);
        let a = ol_encode(&s, [0.05, 0.02], &p, 1.0).unwrap();
        let b = noisy_feedback_encode(&s, [0.05, 0.02], &p, 1.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = noisy_feedback_encode(&s, [0.05, 0.02], &p, 1.0, 4.0).unwrap();
        assert!((c - a / 2.0).abs() < 1e-15);
        assert!(noisy_feedback_encode(&s, [0.05, 0.02], &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_negative_g() {
        assert!(OlParams::new(-0.1f64).is_err());
        assert!(OlParams::new(f64::NAN).is_err());
    }
}
