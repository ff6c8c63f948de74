use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PamConstellation, User};
use crate::neural::codec::EncoderHistory;
use crate::neural::CodecWeights;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpretRow {
    pub feedback: f64,
    pub x: f64,
}

/// Least-squares line through the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the grid or the response is constant.
    pub r2: Option<f64>,
}

impl LinearFit {
    pub fn from_points(points: &[(f64, f64)]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let constant = |f: fn(&(f64, f64)) -> f64| points.iter().all(|p| f(p) == f(&points[0]));
        if constant(|p| p.0) || sxx == 0.0 {
            return Some(Self {
                slope: 0.0,
                intercept: my,
                r2: None,
            });
        }
        let slope = sxy / sxx;
        let r2 = (!constant(|p| p.1) && syy > 0.0).then(|| (sxy * sxy) / (sxx * syy));
        Some(Self {
            slope,
            intercept: my - slope * mx,
            r2,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.r2.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpretTable {
    /// User whose message index and forward noises are held at zero.
    pub fixed_user: usize,
    /// Round whose symbol is recorded (1-based).
    pub round: usize,
    /// Which feedback value is swept, e.g. `"y_tilde_1_1"`.
    pub swept: String,
    pub rows: Vec<InterpretRow>,
    pub fit: Option<LinearFit>,
}

/// Encoder output of `round` as a function of one feedback value.
///
/// `fixed_user` (0 or 1) gets message index 0 and zero forward noise; the
/// other user sends `swept_index` and the sweep replaces its own PAM-round
/// feedback (`Ỹ_{1,1}` when user 2 is fixed, `Ỹ_{2,2}` when user 1 is). All
/// other noises are zero, so later feedback equals the transmitted symbols.
pub fn interpret_sweep<T: Scalar>(
    weights: &CodecWeights<T>,
    fixed_user: User,
    round: usize,
    swept_index: u32,
    grid: &[T],
) -> Result<InterpretTable> {
    if fixed_user > 1 {
        return Err(Error::invalid("fixed user must be 0 or 1"));
    }
    if round < 3 || round > weights.n {
        return Err(Error::invalid(format!(
            "round must lie in 3..={}, got {round}",
            weights.n
        )));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("sweep grid must be finite"));
    }
    let swept_user = 1 - fixed_user;
    let pam_swept = PamConstellation::<T>::new(weights.k[swept_user])?;
    if swept_index >= pam_swept.size() {
        return Err(Error::invalid(format!(
            "message index {swept_index} out of range for K = {}",
            weights.k[swept_user]
        )));
    }
    let pam_fixed = PamConstellation::<T>::new(weights.k[fixed_user])?;
    let mut theta = [T::zero(); 2];
    theta[fixed_user] = pam_fixed.point(0);
    theta[swept_user] = pam_swept.point(swept_index);
    let init = weights.init_rounds(theta);

    let mut rows = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut x = init.to_vec();
        let mut yt = [init.to_vec(), init.to_vec()];
        // User u's own PAM round is round u + 1.
        yt[swept_user][swept_user] = value;
        let mut out = T::zero();
        for r in 3..=round {
            let history = EncoderHistory {
                x: &x,
                y_tilde: [&yt[0], &yt[1]],
            };
            out = weights.encode_round(&history, r)?;
            x.push(out);
            yt[0].push(out);
            yt[1].push(out);
        }
        rows.push(InterpretRow {
            feedback: value.as_f64(),
            x: out.as_f64(),
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.feedback, r.x)).collect();
    Ok(InterpretTable {
        fixed_user,
        round,
        swept: format!("y_tilde_{}_{}", swept_user + 1, swept_user + 1),
        fit: LinearFit::from_points(&points),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let fit = LinearFit::from_points(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r2.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let fit = LinearFit::from_points(&[(1.0, 3.0), (1.0, 3.0)]).unwrap();
        assert!(fit.is_degenerate());
        let flat = LinearFit::from_points(&[(0.0, 3.0), (1.0, 3.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(flat.is_degenerate());
        assert!(LinearFit::from_points(&[]).is_none());
    }
}
