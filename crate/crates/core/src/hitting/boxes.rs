//! Anisotropic dyadic boxes `[k 2^{-4n}, (k+1) 2^{-4n}) x [l 2^{-2n}, (l+1) 2^{-2n})`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DyadicBox {
    pub n: u32,
    pub k: u64,
    pub l: u64,
}

impl DyadicBox {
    pub fn time_side(&self) -> f64 {
        2f64.powi(-4 * self.n as i32)
    }

    pub fn space_side(&self) -> f64 {
        2f64.powi(-2 * self.n as i32)
    }

    pub fn time_interval(&self) -> (f64, f64) {
        let h = self.time_side();
        (self.k as f64 * h, (self.k + 1) as f64 * h)
    }

    pub fn space_interval(&self) -> (f64, f64) {
        let h = self.space_side();
        (self.l as f64 * h, (self.l + 1) as f64 * h)
    }

    /// The box of level `n + 1` contained in this one at offsets `(a, b)`,
    /// `a < 16`, `b < 4`.
    pub fn child(&self, a: u64, b: u64) -> DyadicBox {
        DyadicBox {
            n: self.n + 1,
            k: 16 * self.k + a,
            l: 4 * self.l + b,
        }
    }
}

fn index_range(lo: f64, hi: f64, h: f64) -> (u64, u64) {
    let first = (lo / h).floor() as u64;
    let last = if hi > lo { ((hi / h).ceil() as u64).max(first + 1) - 1 } else { first };
    (first, last)
}

/// All level-`n` boxes whose closure meets `I x J` in a set of positive
/// measure (or that contain a degenerate interval's point).
pub fn dyadic_boxes(n: u32, time: (f64, f64), space: (f64, f64)) -> Result<Vec<DyadicBox>> {
    if n < 1 {
        return Err(Error::domain("dyadic level must be at least 1"));
    }
    if n > 15 {
        return Err(Error::domain("dyadic level above 15 is not representable"));
    }
    if !(time.0 >= 0.0 && time.1 >= time.0 && space.0 >= 0.0 && space.1 >= space.0 && space.1 <= 1.0) {
        return Err(Error::domain("intervals must be ordered, non-negative, with space inside [0, 1]"));
    }
    let (k0, k1) = index_range(time.0, time.1, 2f64.powi(-4 * n as i32));
    let (l0, l1) = index_range(space.0, space.1, 2f64.powi(-2 * n as i32));
    let count = (k1 - k0 + 1) * (l1 - l0 + 1);
    if count > 50_000_000 {
        return Err(Error::domain(format!("{count} boxes requested")));
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in k0..=k1 {
        for l in l0..=l1 {
            out.push(DyadicBox { n, k, l });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_level_one() {
        let b = dyadic_boxes(1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!(b.len(), 64);
        for x in &b {
            assert_eq!(x.time_side(), x.space_side() * x.space_side());
        }
    }

    #[test]
    fn nesting() {
        let parent = DyadicBox { n: 1, k: 3, l: 2 };
        let (t0, t1) = parent.time_interval();
        let (x0, x1) = parent.space_interval();
        let kids = dyadic_boxes(2, (t0, t1), (x0, x1)).unwrap();
        assert_eq!(kids.len(), 16 * 4);
        assert!(kids.contains(&parent.child(15, 3)));
        assert!(dyadic_boxes(0, (0.0, 1.0), (0.0, 1.0)).is_err());
    }
}
