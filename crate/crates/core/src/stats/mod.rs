//! Streaming Monte Carlo accumulation, paired z statistics, per-path random
//! streams and the chunked parallel driver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

mod crn;

pub use crn::{crn_fd_gradient, crn_fd_sample};

/// Welford running mean / sum of squared deviations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McAccumulator<T> {
    count: u64,
    mean: T,
    m2: T,
}

impl<T: Real> Default for McAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> McAccumulator<T> {
    pub fn new() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }

    /// Accumulator with the given count, mean and unbiased variance.
    pub fn from_moments(count: u64, mean: T, variance: T) -> Self {
        let m2 = if count < 2 { T::zero() } else { variance * T::lit((count - 1) as f64) };
        Self { count, mean, m2 }
    }

    pub fn from_samples<I: IntoIterator<Item = T>>(samples: I) -> Result<Self> {
        let mut acc = Self::new();
        for s in samples {
            acc.accumulate(s)?;
        }
        Ok(acc)
    }

    pub fn accumulate(&mut self, sample: T) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        self.count += 1;
        let delta = sample - self.mean;
        self.mean = self.mean + delta / T::lit(self.count as f64);
        self.m2 = self.m2 + delta * (sample - self.mean);
        Ok(())
    }

    /// Combine two disjoint streams (Chan et al. update).
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let na = T::lit(self.count as f64);
        let nb = T::lit(other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased sample variance (zero for fewer than two samples).
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.m2 / T::lit((self.count - 1) as f64)).max(T::zero())
        }
    }

    /// Sample standard deviation over `sqrt(n)`.
    pub fn std_error(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        (self.variance() / T::lit(self.count as f64)).sqrt()
    }
}

/// `|mean| / (sd / sqrt(n))` of a stream of paired differences.
///
/// Zero spread with zero mean is an exact identity and scores 0; zero spread
/// with a nonzero mean is a systematic mismatch and scores +infinity.
pub fn paired_z<T: Real>(diff: &McAccumulator<T>) -> Result<T> {
    if diff.count() < 2 {
        return Err(Error::InsufficientData(diff.count()));
    }
    let se = diff.std_error();
    let mean = diff.mean().abs();
    if se == T::zero() {
        return Ok(if mean == T::zero() { T::zero() } else { T::infinity() });
    }
    Ok(mean / se)
}

/// Why a random stream is drawn; distinct purposes never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Brownian,
    BasePoint,
    Auxiliary,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Brownian => 0x42726f776e69616e,
            StreamPurpose::BasePoint => 0x42617365506f696e,
            StreamPurpose::Auxiliary => 0x4175786c69617279,
        }
    }
}

/// Counter-based stream derivation: the ChaCha key comes from the master seed
/// and purpose, the ChaCha stream id is the path index. Streams therefore do
/// not depend on which worker draws them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngPolicy {
    pub master_seed: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn stream(&self, index: u64, purpose: StreamPurpose) -> ChaCha8Rng {
        let mut state = self.master_seed ^ purpose.tag();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

/// Units per sequential chunk. Chunk boundaries, not the worker count, fix the
/// floating-point merge order.
pub const CHUNK_SIZE: u64 = 256;

/// Evaluates `unit(i)` for `i in 0..n_units` on the current rayon pool and
/// accumulates the `K` returned samples per unit. Each chunk is accumulated
/// in index order and chunks are merged in index order, so the result is
/// bit-identical for any number of workers.
pub fn accumulate_units<T, const K: usize, F>(n_units: u64, unit: F) -> Result<[McAccumulator<T>; K]>
where
    T: Real,
    F: Fn(u64) -> Result<[T; K]> + Sync,
{
    let n_chunks = n_units.div_ceil(CHUNK_SIZE);
    let partials: Vec<[McAccumulator<T>; K]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut accs = [McAccumulator::new(); K];
            for i in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(n_units) {
                let samples = unit(i)?;
                for (acc, s) in accs.iter_mut().zip(samples) {
                    acc.accumulate(s)?;
                }
            }
            Ok(accs)
        })
        .collect::<Result<_>>()?;
    let mut total = [McAccumulator::new(); K];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn constant_samples() {
        let acc = McAccumulator::from_samples([1.0f64, 1.0, 1.0]).unwrap();
        assert_eq!(acc.mean(), 1.0);
        assert_eq!(acc.variance(), 0.0);
    }

    #[test]
    fn two_samples_by_hand() {
        let acc = McAccumulator::from_samples([0.0f64, 2.0]).unwrap();
        assert_eq!(acc.mean(), 1.0);
        assert_eq!(acc.variance(), 2.0);
    }

    #[test]
    fn merge_of_singletons_matches_sequence() {
        let a = McAccumulator::from_samples([0.0f64]).unwrap();
        let b = McAccumulator::from_samples([2.0f64]).unwrap();
        let seq = McAccumulator::from_samples([0.0f64, 2.0]).unwrap();
        assert_eq!(a.merge(&b), seq);
    }

    #[test]
    fn rejects_non_finite() {
        let mut acc = McAccumulator::<f64>::new();
        assert_eq!(acc.accumulate(f64::NAN), Err(Error::NonFiniteSample));
        assert_eq!(acc.accumulate(f64::INFINITY), Err(Error::NonFiniteSample));
    }

    #[test]
    fn paired_z_cases() {
        let zeros = McAccumulator::from_samples([0.0f64; 5]).unwrap();
        assert_eq!(paired_z(&zeros).unwrap(), 0.0);
        let sym = McAccumulator::from_samples([1.0f64, -1.0]).unwrap();
        assert_eq!(paired_z(&sym).unwrap(), 0.0);
        let biased = McAccumulator::from_samples([1.0f64; 4]).unwrap();
        assert!(paired_z(&biased).unwrap().is_infinite());
        let one = McAccumulator::from_samples([1.0f64]).unwrap();
        assert_eq!(paired_z(&one), Err(Error::InsufficientData(1)));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let p = RngPolicy::new(7);
        let a: Vec<u64> =
            (0..4).map(|_| 0).scan(p.stream(3, StreamPurpose::Brownian), |r, _| Some(r.random())).collect();
        let b: Vec<u64> =
            (0..4).map(|_| 0).scan(p.stream(3, StreamPurpose::Brownian), |r, _| Some(r.random())).collect();
        let c: Vec<u64> =
            (0..4).map(|_| 0).scan(p.stream(4, StreamPurpose::Brownian), |r, _| Some(r.random())).collect();
        let d: Vec<u64> =
            (0..4).map(|_| 0).scan(p.stream(3, StreamPurpose::BasePoint), |r, _| Some(r.random())).collect();
        let e: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(RngPolicy::new(8).stream(3, StreamPurpose::Brownian), |r, _| Some(r.random()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(a, e);
    }

    #[test]
    fn chunked_driver_is_worker_count_invariant() {
        let unit = |i: u64| -> Result<[f64; 2]> {
            let mut r = RngPolicy::new(11).stream(i, StreamPurpose::Auxiliary);
            let x: f64 = r.random();
            Ok([x, x * x])
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| accumulate_units(1000, unit)).unwrap();
        let b = four.install(|| accumulate_units(1000, unit)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].count(), 1000);
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(
            xs in prop::collection::vec(-1e3f64..1e3, 1..40),
            ys in prop::collection::vec(-1e3f64..1e3, 1..40),
            zs in prop::collection::vec(-1e3f64..1e3, 1..40),
        ) {
            let a = McAccumulator::from_samples(xs.iter().copied()).unwrap();
            let b = McAccumulator::from_samples(ys.iter().copied()).unwrap();
            let c = McAccumulator::from_samples(zs.iter().copied()).unwrap();
            let all = McAccumulator::from_samples(xs.iter().chain(&ys).chain(&zs).copied()).unwrap();
            let left = a.merge(&b).merge(&c);
            let right = a.merge(&b.merge(&c));
            let swapped = c.merge(&b).merge(&a);
            for acc in [left, right, swapped] {
                prop_assert_eq!(acc.count(), all.count());
                let scale = all.mean().abs().max(1.0);
                prop_assert!((acc.mean() - all.mean()).abs() <= 1e-12 * scale);
                let vscale = all.variance().max(1.0);
                prop_assert!((acc.variance() - all.variance()).abs() <= 1e-12 * vscale);
            }
        }
    }
}
