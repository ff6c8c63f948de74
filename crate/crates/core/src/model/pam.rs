use crate::error::{Error, Result};
use crate::model::MAX_BITS;
use crate::Scalar;

/// Unit-power `2^K`-ary PAM alphabet `{±η, ±3η, …, ±(2^K−1)η}`.
///
/// Index `i` maps to the `i`-th smallest amplitude, `(2i + 1 − 2^K)·η`.
/// Points are computed on demand so that large `K` stays cheap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PamConstellation<T> {
    bits: u32,
    eta: T,
}

impl<T: Scalar> PamConstellation<T> {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::invalid(format!(
                "PAM order needs 1 <= K <= {MAX_BITS}, got {bits}"
            )));
        }
        let m = (1u64 << bits) as f64;
        let eta = T::lit((3.0 / (m * m - 1.0)).sqrt());
        Ok(Self { bits, eta })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn size(&self) -> u32 {
        1 << self.bits
    }

    /// Amplitude of index `i`; `i` must be below [`size`](Self::size).
    #[inline]
    pub fn point(&self, index: u32) -> T {
        debug_assert!(index < self.size());
        let offset = 2 * i64::from(index) + 1 - i64::from(self.size());
        T::lit(offset as f64) * self.eta
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.size()).map(move |i| self.point(i))
    }

    /// Index of the closest amplitude; exact midpoints go to the smaller index.
    #[inline]
    pub fn nearest_index(&self, value: T) -> u32 {
        let top = self.size() - 1;
        if !value.is_finite() {
            return if value > T::zero() { top } else { 0 };
        }
        // Position on the grid where point i sits at i.
        let t = (value / self.eta + T::lit(f64::from(top))) / T::lit(2.0);
        let rounded = (t - T::lit(0.5)).ceil();
        if rounded <= T::zero() {
            0
        } else if rounded >= T::lit(f64::from(top)) {
            top
        } else {
            rounded.to_u32().unwrap_or(top)
        }
    }
}
