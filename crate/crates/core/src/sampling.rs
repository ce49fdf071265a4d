//! Deterministic sample points for numerical fallbacks.
//!
//! Points are exact rationals drawn from a seeded ChaCha stream and kept a
//! fixed margin inside every box, so they stay away from boundary faces.

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{rat, ratio, Point, Rational};

pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_2024;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLE_COUNT: usize = 64;

/// Resolution of sampled coordinates inside a box: `2^-20` of its width.
const GRID_BITS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub count: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { seed: DEFAULT_SEED, tolerance: DEFAULT_TOLERANCE, count: DEFAULT_SAMPLE_COUNT }
    }
}

impl SamplingConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplingConfig { seed, ..Default::default() }
    }
}

/// Union of axis-aligned boxes to draw points from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRegion {
    boxes: Vec<Vec<(Rational, Rational)>>,
}

impl SampleRegion {
    pub fn new(boxes: Vec<Vec<(Rational, Rational)>>) -> Self {
        let boxes = boxes.into_iter().filter(|b| b.iter().all(|(lo, hi)| lo < hi)).collect();
        SampleRegion { boxes }
    }

    /// `(0, 2)` on the first `k` coordinates and `(-2, 2)` on the rest.
    pub fn default_for(n: usize, k: usize) -> Self {
        let b = (0..n).map(|i| if i < k { (rat(0), rat(2)) } else { (rat(-2), rat(2)) }).collect();
        SampleRegion { boxes: vec![b] }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.boxes.first().map(Vec::len)
    }

    /// Infinite deterministic stream of interior points.
    pub fn stream(&self, seed: u64) -> SampleStream<'_> {
        SampleStream { region: self, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn points(&self, count: usize, seed: u64) -> Vec<Point> {
        if self.is_empty() {
            return Vec::new();
        }
        self.stream(seed).take(count).collect()
    }
}

pub struct SampleStream<'a> {
    region: &'a SampleRegion,
    rng: ChaCha8Rng,
}

impl Iterator for SampleStream<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        if self.region.boxes.is_empty() {
            return None;
        }
        let idx = self.rng.gen_range(0..self.region.boxes.len());
        let b = &self.region.boxes[idx];
        let scale = Rational::from_integer(BigInt::one() << GRID_BITS);
        let coords = b
            .iter()
            .map(|(lo, hi)| {
                let width = hi - lo;
                let quarter = &width / rat(4);
                let margin = if quarter < ratio(1, 1000) { quarter } else { ratio(1, 1000) };
                let usable = &width - &margin * rat(2);
                let step: u64 = self.rng.gen_range(0..=(1u64 << GRID_BITS));
                let t = Rational::from_integer(step.into()) / &scale;
                lo + &margin + usable * t
            })
            .collect();
        Some(Point(coords))
    }
}

/// Relative-or-absolute closeness used by every sampled comparison.
pub fn close(a: f64, b: f64, tolerance: f64) -> bool {
    let scale = 1f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= tolerance * scale
}
