//! Seeded random streams for the simulations and randomized checks.
//!
//! Uniform deviates come from a SplitMix64 generator (a splittable counter
//! generator: the state advances by a fixed odd constant and each output is a
//! finalizer of the counter), and standard normals from the Box-Muller
//! transform on top of it. Identical seeds produce identical streams, and
//! named sub-streams keep cells of an experiment independent of which other
//! cells were requested.

/// Golden-ratio increment of the SplitMix64 counter.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer; also used to derive sub-stream seeds.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splittable uniform generator.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    /// Deterministic sub-stream derived from a seed and a tag path, e.g.
    /// `(experiment, dimension)`. Different tag paths give streams that do
    /// not track each other.
    pub fn substream(seed: u64, tags: &[u64]) -> Rng {
        let mut s = mix64(seed);
        for &t in tags {
            s = mix64(s ^ mix64(t.wrapping_add(GOLDEN)));
        }
        Rng { state: s }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform deviate in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform deviate in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fair `+1`/`-1` step.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Standard normal stream via the Box-Muller transform.
///
/// Each transform consumes two uniforms and yields two deviates; the second
/// is cached so consecutive calls use the underlying stream densely.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> NormalStream {
        NormalStream::from_rng(Rng::new(seed))
    }

    pub fn from_rng(rng: Rng) -> NormalStream {
        NormalStream { rng, spare: None }
    }

    /// Next standard normal deviate.
    ///
    /// Intentionally infallible and not an `Iterator`: the stream never
    /// ends, and callers draw in expressions where an `Option` would only
    /// add unwraps.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.rng.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Next `k` deviates.
    pub fn take(&mut self, k: usize) -> Vec<f64> {
        (0..k).map(|_| self.next()).collect()
    }
}
