//! Reproducible Brownian increments on dyadic grids.
//!
//! Each trajectory owns a ChaCha8 stream selected by `(seed, path_index)`: the
//! seed keys the generator and the path index selects the stream, so paths are
//! independent and can be produced in any order on any thread. Standard normals
//! are drawn with the ziggurat sampler from `rand_distr`.
//!
//! Coarse increments are formed by repeatedly summing adjacent pairs, one dyadic
//! level at a time. Coarsening `L → ℓ₂ → ℓ₁` and `L → ℓ₁` therefore perform the
//! same floating-point additions and agree bitwise.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default cap on stored fine increments (128 MiB of `f64`).
pub const DEFAULT_STEP_BUDGET: u64 = 1 << 24;

/// Standard normal draws for one trajectory.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        NormalStream { rng }
    }

    #[inline]
    pub fn next_standard(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// `2^{-exponent}` as an exact power of two.
#[inline]
pub fn dyadic_step(exponent: u32) -> f64 {
    (-(exponent as f64)).exp2()
}

/// `ceil(horizon / 2^{-exponent})`.
pub fn dyadic_step_count(exponent: u32, horizon: f64) -> u64 {
    (horizon * (exponent as f64).exp2()).ceil() as u64
}

/// Stored Brownian increments at the finest level of a dyadic hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid<T> {
    pub seed: u64,
    pub path_index: u64,
    pub fine_exponent: u32,
    pub horizon: T,
    pub increments: Vec<T>,
}

impl<T: Real> BrownianGrid<T> {
    /// Generates `ceil(T / 2^{-L})` increments with variance `2^{-L}` each.
    pub fn generate(seed: u64, path_index: u64, fine_exponent: u32, horizon: T) -> Result<Self> {
        Self::generate_with_budget(seed, path_index, fine_exponent, horizon, DEFAULT_STEP_BUDGET)
    }

    pub fn generate_with_budget(
        seed: u64,
        path_index: u64,
        fine_exponent: u32,
        horizon: T,
        budget: u64,
    ) -> Result<Self> {
        check_horizon(horizon)?;
        let steps = dyadic_step_count(fine_exponent, horizon.as_f64());
        if steps > budget {
            return Err(Error::Capacity { requested: steps, budget });
        }
        let scale = dyadic_step(fine_exponent).sqrt();
        let mut normals = NormalStream::new(seed, path_index);
        let increments = (0..steps).map(|_| T::of(scale * normals.next_standard())).collect();
        Ok(BrownianGrid { seed, path_index, fine_exponent, horizon, increments })
    }

    pub fn fine_step(&self) -> f64 {
        dyadic_step(self.fine_exponent)
    }

    /// Increments at step `2^{-coarse_exponent}`, each the pairwise sum of the
    /// `2^{L−ℓ}` fine increments it spans. A trailing partial block is summed
    /// with the same pairing.
    pub fn coarsen(&self, coarse_exponent: u32) -> Result<Vec<T>> {
        if coarse_exponent > self.fine_exponent {
            return Err(Error::Exponent { coarse: coarse_exponent, fine: self.fine_exponent });
        }
        let mut level = self.increments.clone();
        for _ in coarse_exponent..self.fine_exponent {
            level = halve(&level);
        }
        Ok(level)
    }

    /// Streams the same increments [`coarsen`](Self::coarsen) would return,
    /// regenerating them from the seed instead of reading stored values.
    pub fn stream(&self, coarse_exponent: u32) -> Result<IncrementStream<T>> {
        IncrementStream::dyadic(
            self.seed,
            self.path_index,
            self.fine_exponent,
            coarse_exponent,
            self.horizon,
        )
    }
}

fn check_horizon<T: Real>(horizon: T) -> Result<()> {
    if horizon > T::zero() && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("horizon must be positive and finite, got {horizon}")))
    }
}

/// One dyadic coarsening level: sums adjacent pairs, keeping an odd tail as is.
pub fn halve<T: Real>(level: &[T]) -> Vec<T> {
    level
        .chunks(2)
        .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
        .collect()
}

/// On-the-fly increments, either aggregated from a dyadic fine level or drawn
/// directly for an arbitrary step size.
#[derive(Debug, Clone)]
pub struct IncrementStream<T> {
    normals: NormalStream,
    scale: f64,
    levels: u32,
    remaining: u64,
    block: Vec<T>,
}

impl<T: Real> IncrementStream<T> {
    /// Increments at `2^{-coarse_exponent}` aggregated from a fine level
    /// `2^{-fine_exponent}` covering `[0, horizon]`.
    pub fn dyadic(
        seed: u64,
        path_index: u64,
        fine_exponent: u32,
        coarse_exponent: u32,
        horizon: T,
    ) -> Result<Self> {
        check_horizon(horizon)?;
        if coarse_exponent > fine_exponent {
            return Err(Error::Exponent { coarse: coarse_exponent, fine: fine_exponent });
        }
        Ok(IncrementStream {
            normals: NormalStream::new(seed, path_index),
            scale: dyadic_step(fine_exponent).sqrt(),
            levels: fine_exponent - coarse_exponent,
            remaining: dyadic_step_count(fine_exponent, horizon.as_f64()),
            block: Vec::with_capacity(1usize << (fine_exponent - coarse_exponent).min(20)),
        })
    }

    /// `steps` increments of variance `dt`, for non-dyadic step sizes.
    pub fn explicit(seed: u64, path_index: u64, dt: T, steps: u64) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("step size must be positive, got {dt}")));
        }
        Ok(IncrementStream {
            normals: NormalStream::new(seed, path_index),
            scale: dt.as_f64().sqrt(),
            levels: 0,
            remaining: steps,
            block: Vec::with_capacity(1),
        })
    }
}

impl<T: Real> Iterator for IncrementStream<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        if self.remaining == 0 {
            return None;
        }
        let width = (1u64 << self.levels).min(self.remaining);
        self.remaining -= width;
        self.block.clear();
        for _ in 0..width {
            self.block.push(T::of(self.scale * self.normals.next_standard()));
        }
        let mut level = std::mem::take(&mut self.block);
        for _ in 0..self.levels {
            level = halve(&level);
        }
        let out = level[0];
        self.block = level;
        Some(out)
    }
}

/// Writes a grid as little-endian binary: `seed: u64`, `path_index: u64`,
/// `L: u32`, `T: f64`, then the fine increments as `f64` until end of stream.
pub fn write_dump<T: Real, W: Write>(grid: &BrownianGrid<T>, mut out: W) -> Result<()> {
    out.write_all(&grid.seed.to_le_bytes())?;
    out.write_all(&grid.path_index.to_le_bytes())?;
    out.write_all(&grid.fine_exponent.to_le_bytes())?;
    out.write_all(&grid.horizon.as_f64().to_le_bytes())?;
    for v in &grid.increments {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dump produced by [`write_dump`].
pub fn read_dump<R: Read>(mut input: R) -> Result<BrownianGrid<f64>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    const HEADER: usize = 8 + 8 + 4 + 8;
    if bytes.len() < HEADER || (bytes.len() - HEADER) % 8 != 0 {
        return Err(Error::Io(format!("malformed increment dump of {} bytes", bytes.len())));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let seed = u64_at(0);
    let path_index = u64_at(8);
    let fine_exponent = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let horizon = f64::from_bits(u64_at(20));
    let increments = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(BrownianGrid { seed, path_index, fine_exponent, horizon, increments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regeneration_is_bitwise_identical() {
        let a = BrownianGrid::<f64>::generate(7, 3, 8, 1.0).unwrap();
        let b = BrownianGrid::<f64>::generate(7, 3, 8, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.increments.len(), 256);
    }

    #[test]
    fn step_count_is_ceiling() {
        let g = BrownianGrid::<f64>::generate(1, 0, 2, 1.1).unwrap();
        assert_eq!(g.increments.len(), 5);
    }

    #[test]
    fn distinct_paths_are_uncorrelated() {
        let n = 10_000;
        let a = BrownianGrid::<f64>::generate(99, 0, 0, n as f64).unwrap().increments;
        let b = BrownianGrid::<f64>::generate(99, 1, 0, n as f64).unwrap().increments;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let r = cov / (va * vb).sqrt();
        assert!(r.abs() < 0.05, "correlation {r}");
    }

    #[test]
    fn fine_variance_matches_step() {
        // 2^20 increments at 2^-10 over T = 1024.
        let g = BrownianGrid::<f64>::generate(2024, 0, 10, 1024.0).unwrap();
        let n = g.increments.len() as f64;
        assert!(n >= 1e6);
        let mean = g.increments.iter().sum::<f64>() / n;
        let var = g.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = dyadic_step(10);
        assert!((var / target - 1.0).abs() < 0.01, "variance ratio {}", var / target);
    }

    #[test]
    fn coarsen_to_own_level_is_identity() {
        let g = BrownianGrid::<f64>::generate(5, 5, 6, 1.0).unwrap();
        assert_eq!(g.coarsen(6).unwrap(), g.increments);
    }

    #[test]
    fn coarsen_sums_adjacent_pairs() {
        let g = BrownianGrid {
            seed: 0,
            path_index: 0,
            fine_exponent: 2,
            horizon: 1.0,
            increments: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(g.coarsen(1).unwrap(), vec![3.0, 7.0]);
        assert_eq!(g.coarsen(0).unwrap(), vec![10.0]);
    }

    #[test]
    fn coarsen_rejects_finer_exponent() {
        let g = BrownianGrid::<f64>::generate(5, 5, 4, 1.0).unwrap();
        assert_eq!(g.coarsen(5), Err(Error::Exponent { coarse: 5, fine: 4 }));
    }

    #[test]
    fn budget_is_enforced() {
        let r = BrownianGrid::<f64>::generate_with_budget(1, 1, 20, 2.0, 1 << 20);
        assert!(matches!(r, Err(Error::Capacity { .. })));
    }

    #[test]
    fn total_displacement_preserved_across_levels() {
        let g = BrownianGrid::<f64>::generate(11, 2, 10, 2.0).unwrap();
        let total: f64 = g.increments.iter().sum();
        for l in 0..=10 {
            let s: f64 = g.coarsen(l).unwrap().iter().sum();
            assert!((s - total).abs() <= 1e-12 * (1.0 + total.abs()), "level {l}");
        }
        assert_eq!(g.coarsen(0).unwrap().len(), 2);
    }

    #[test]
    fn streaming_matches_stored() {
        let g = BrownianGrid::<f64>::generate(3, 17, 9, 1.5).unwrap();
        for l in [0, 3, 7, 9] {
            let streamed: Vec<f64> = g.stream(l).unwrap().collect();
            assert_eq!(streamed, g.coarsen(l).unwrap(), "level {l}");
        }
    }

    #[test]
    fn explicit_stream_uses_same_normals() {
        let dt = 0.01_f64;
        let s: Vec<f64> = IncrementStream::explicit(4, 2, dt, 50).unwrap().collect();
        let mut z = NormalStream::new(4, 2);
        for v in s {
            assert_eq!(v, dt.sqrt() * z.next_standard());
        }
    }

    #[test]
    fn dump_round_trip() {
        let g = BrownianGrid::<f64>::generate(8, 1, 5, 1.0).unwrap();
        let mut buf = Vec::new();
        write_dump(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 8 * 32);
        assert_eq!(read_dump(&buf[..]).unwrap(), g);
        assert!(read_dump(&buf[..20]).is_err());
    }

    proptest! {
        #[test]
        fn refinement_consistency(seed in any::<u64>(), path in 0u64..1000, l1 in 0u32..5, gap in 1u32..4) {
            let fine = 8;
            let l2 = (l1 + gap).min(fine);
            let g = BrownianGrid::<f64>::generate(seed, path, fine, 1.0).unwrap();
            let direct = g.coarsen(l1).unwrap();
            let mid = BrownianGrid { increments: g.coarsen(l2).unwrap(), fine_exponent: l2, ..g.clone() };
            prop_assert_eq!(direct, mid.coarsen(l1).unwrap());
        }
    }
}
