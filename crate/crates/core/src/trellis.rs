//! The channel trellis: constellations, channel description, state packing
//! and the branch metric shared by every equalizer.

use num_complex::Complex64;

use crate::logdomain::LogProb;
use crate::{Error, Result};

/// Memoryless mapper from K-bit labels to complex points.
///
/// `points[label]` is the point for `label`, where bit `a^1` of the K-tuple is
/// the most significant bit of `label`. Bit value 0 corresponds to the
/// amplitude `+1` in LLR terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(bits_per_symbol: usize, points: Vec<Complex64>) -> Result<Self> {
        if bits_per_symbol == 0 || bits_per_symbol > 8 {
            return Err(Error::InvalidConstellation(format!(
                "bits per symbol must be in 1..=8, got {bits_per_symbol}"
            )));
        }
        if points.len() != 1 << bits_per_symbol {
            return Err(Error::InvalidConstellation(format!(
                "expected {} points, got {}",
                1usize << bits_per_symbol,
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::InvalidConstellation(format!("point {i} is not finite")));
            }
            if points[..i].contains(p) {
                return Err(Error::InvalidConstellation(format!("point {i} duplicates an earlier point")));
            }
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConstellation(format!(
                "average symbol energy must be 1, got {energy}"
            )));
        }
        Ok(Self { bits_per_symbol, points })
    }

    /// Bit 0 to `+1`, bit 1 to `-1`.
    pub fn bpsk() -> Self {
        Self {
            bits_per_symbol: 1,
            points: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        }
    }

    /// Square 16QAM with unit average energy. The two most significant label
    /// bits pick the in-phase level and the two least significant the
    /// quadrature level, each pair Gray coded `00 -> -3, 01 -> -1, 11 -> +1,
    /// 10 -> +3` (scaled by `1/sqrt(10)`).
    pub fn qam16_gray() -> Self {
        let scale = 10f64.sqrt().recip();
        let level = |pair: usize| -> f64 {
            match pair {
                0b00 => -3.0,
                0b01 => -1.0,
                0b11 => 1.0,
                0b10 => 3.0,
                _ => unreachable!(),
            }
        };
        let points = (0..16)
            .map(|label| Complex64::new(level(label >> 2) * scale, level(label & 0b11) * scale))
            .collect();
        Self { bits_per_symbol: 4, points }
    }

    #[inline]
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    #[inline]
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Bit `k` (0-based from `a^1`) of `label`.
    #[inline]
    pub fn label_bit(&self, label: u32, k: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - k)) & 1) as u8
    }

    pub fn label_from_bits(&self, bits: &[u8]) -> u32 {
        debug_assert_eq!(bits.len(), self.bits_per_symbol);
        bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1))
    }
}

/// Everything the receiver knows about the link: FIR taps `h_0..h_S`, the
/// noise variance and the mapper.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    taps: Vec<Complex64>,
    noise_variance: f64,
    constellation: Constellation,
}

impl ChannelSpec {
    pub fn new(taps: Vec<Complex64>, noise_variance: f64, constellation: Constellation) -> Result<Self> {
        let Some(h0) = taps.first() else {
            return Err(Error::InvalidChannel("at least one tap is required".into()));
        };
        if h0.norm_sqr() == 0.0 {
            return Err(Error::InvalidChannel("leading tap h_0 must be nonzero".into()));
        }
        if taps.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidChannel("taps must be finite".into()));
        }
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::NonPositiveNoiseVariance(noise_variance));
        }
        let states = (constellation.bits_per_symbol() * (taps.len() - 1)) as u32;
        if states > 24 {
            return Err(Error::InvalidChannel(format!("trellis of 2^{states} states is too large")));
        }
        Ok(Self { taps, noise_variance, constellation })
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        Self::new(self.taps.clone(), noise_variance, self.constellation.clone())
    }

    #[inline]
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Channel memory `S`.
    #[inline]
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    #[inline]
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    #[inline]
    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// `K`.
    #[inline]
    pub fn bits_per_symbol(&self) -> usize {
        self.constellation.bits_per_symbol()
    }

    /// `2^{KS}`.
    #[inline]
    pub fn full_state_count(&self) -> usize {
        1 << (self.bits_per_symbol() * self.memory())
    }

    /// `sum_j |h_j|^2`.
    pub fn gain(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }
}

/// The last `S` input K-tuples, packed with the most recent tuple in the
/// least significant `K` bits. Index 0 is the all-zero history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TrellisState(pub u32);

impl TrellisState {
    pub const ZERO: TrellisState = TrellisState(0);

    /// Packs tuples given most-recent-first.
    pub fn pack(tuples: &[u32], k: usize) -> TrellisState {
        let mask = (1u32 << k) - 1;
        TrellisState(tuples.iter().rev().fold(0u32, |acc, &t| (acc << k) | (t & mask)))
    }

    /// Unpacks into `s` tuples, most-recent-first.
    pub fn unpack(self, k: usize, s: usize) -> Vec<u32> {
        (0..s).map(|j| self.tuple(j, k)).collect()
    }

    /// The tuple `j` steps back (0 = most recent).
    #[inline]
    pub fn tuple(self, j: usize, k: usize) -> u32 {
        (self.0 >> (j * k)) & ((1u32 << k) - 1)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Shifts `input` into the most recent slot and drops the oldest tuple.
#[inline]
pub fn successor_state(s: TrellisState, input: u32, k: usize, memory: usize) -> TrellisState {
    let width = k * memory;
    if width == 0 {
        return TrellisState::ZERO;
    }
    let mask = if width >= 32 { u32::MAX } else { (1u32 << width) - 1 };
    TrellisState(((s.0 << k) | input) & mask)
}

/// Number of trailing (oldest) tuples that must be ignored before `a` and
/// `b` agree, i.e. the smallest `d` such that the `S - d` most recent tuples
/// match.
#[inline]
pub fn state_distance(a: TrellisState, b: TrellisState, k: usize, memory: usize) -> usize {
    let diff = a.0 ^ b.0;
    if diff == 0 {
        return 0;
    }
    let first_mismatch = diff.trailing_zeros() as usize / k;
    memory - first_mismatch
}

/// Branch metric `ln gamma` for a branch leaving `history` with `input`
/// (`None` for the empty symbol past the end of the block), with every slot
/// of `history` holding a transmitted symbol.
///
/// `priors[k]` is `ln P(a^k)` for the value bit `k` takes in `input`; it is
/// empty for the empty symbol. The Gaussian prefactor is omitted since it is
/// common to every branch of a section.
pub fn branch_metric(
    spec: &ChannelSpec,
    received: Complex64,
    history: TrellisState,
    input: Option<u32>,
    priors: &[LogProb],
) -> LogProb {
    let k = spec.bits_per_symbol();
    let mut expected = input.map_or(Complex64::new(0.0, 0.0), |u| spec.taps[0] * spec.constellation.point(u));
    for (j, h) in spec.taps.iter().enumerate().skip(1) {
        expected += h * spec.constellation.point(history.tuple(j - 1, k));
    }
    let prior: f64 = priors.iter().map(|p| p.0).sum();
    LogProb(prior - (received - expected).norm_sqr() / spec.noise_variance)
}

/// Precomputed per-channel tables for the trellis recursions.
#[derive(Debug, Clone)]
pub(crate) struct ChannelModel {
    pub k: usize,
    pub memory: usize,
    pub inv_noise_variance: f64,
    taps: Vec<Complex64>,
    points: Vec<Complex64>,
    /// `sum_{j>=1} h_j x_{i-j}` for each full-history state.
    interior_isi: Vec<Complex64>,
    /// `h_0 x(u)` per label.
    current: Vec<Complex64>,
}

impl ChannelModel {
    pub fn new(spec: &ChannelSpec) -> Self {
        let k = spec.bits_per_symbol();
        let memory = spec.memory();
        let points = spec.constellation.points().to_vec();
        let interior_isi = (0..spec.full_state_count() as u32)
            .map(|s| {
                (1..=memory)
                    .map(|j| spec.taps[j] * points[TrellisState(s).tuple(j - 1, k) as usize])
                    .sum()
            })
            .collect();
        let current = points.iter().map(|p| spec.taps[0] * p).collect();
        Self {
            k,
            memory,
            inv_noise_variance: spec.noise_variance.recip(),
            taps: spec.taps.clone(),
            points,
            interior_isi,
            current,
        }
    }

    #[inline]
    pub fn labels(&self) -> u32 {
        1 << self.k
    }

    /// Noiseless channel output at 1-based time `time` of a block with
    /// `block_len` symbols. History slot `j` carries a symbol only while
    /// `1 <= time - j <= block_len`; elsewhere it is the zero symbol.
    #[inline]
    pub fn expected(&self, time: usize, block_len: usize, state: TrellisState, input: Option<u32>) -> Complex64 {
        let lo = time.saturating_sub(block_len).max(1);
        let hi = self.memory.min(time - 1);
        let isi = if lo == 1 && hi == self.memory {
            self.interior_isi[state.index()]
        } else {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                acc += self.taps[j] * self.points[state.tuple(j - 1, self.k) as usize];
            }
            acc
        };
        match input {
            Some(u) => isi + self.current[u as usize],
            None => isi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdomain::prior_from_llr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_channels() {
        assert!(ChannelSpec::new(vec![], 1.0, Constellation::bpsk()).is_err());
        assert!(ChannelSpec::new(vec![c(0.0, 0.0), c(1.0, 0.0)], 1.0, Constellation::bpsk()).is_err());
        assert!(matches!(
            ChannelSpec::new(vec![c(1.0, 0.0)], 0.0, Constellation::bpsk()),
            Err(Error::NonPositiveNoiseVariance(_))
        ));
        assert!(ChannelSpec::new(vec![c(1.0, 0.0)], -1.0, Constellation::bpsk()).is_err());
    }

    #[test]
    fn rejects_bad_constellations() {
        assert!(Constellation::new(1, vec![c(1.0, 0.0)]).is_err());
        assert!(Constellation::new(1, vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(Constellation::new(1, vec![c(2.0, 0.0), c(-2.0, 0.0)]).is_err());
        assert!(Constellation::new(1, vec![c(0.0, 1.0), c(0.0, -1.0)]).is_ok());
    }

    #[test]
    fn qam16_unit_energy() {
        let q = Constellation::qam16_gray();
        let e = q.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
        assert!(Constellation::new(4, q.points().to_vec()).is_ok());
    }

    #[test]
    fn successor_examples() {
        assert_eq!(successor_state(TrellisState(0), 0, 1, 3), TrellisState(0));
        // K=1, S=2: (a_{i-1}=1, a_{i-2}=0) + input 1 -> (1, 1)
        let s = TrellisState::pack(&[1, 0], 1);
        assert_eq!(successor_state(s, 1, 1, 2), TrellisState::pack(&[1, 1], 1));
        assert_eq!(successor_state(TrellisState(5), 1, 2, 0), TrellisState(0));
    }

    #[test]
    fn successor_k2_s2_hits_each_target_four_times() {
        let mut hits = [0usize; 16];
        for s in 0..16 {
            for u in 0..4 {
                hits[successor_state(TrellisState(s), u, 2, 2).index()] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 4));
    }

    #[test]
    fn successor_injective_given_oldest_tuple() {
        // For fixed input, states that agree in their oldest tuple never
        // collide, and exactly 2^K states map onto each successor.
        for (k, s) in [(1usize, 4usize), (2, 3), (3, 2), (4, 3), (1, 12), (2, 6), (3, 4)] {
            let n = 1u32 << (k * s);
            for u in [0u32, (1 << k) - 1] {
                let mut seen = vec![0u32; n as usize];
                for st in 0..n {
                    let state = TrellisState(st);
                    let oldest = if s > 0 { state.tuple(s - 1, k) } else { 0 };
                    let next = successor_state(state, u, k, s);
                    seen[next.index()] += 1;
                    // the successor determines every tuple except the oldest
                    let rebuilt = (next.0 >> k) | (oldest << (k * (s - 1)));
                    assert_eq!(rebuilt, st);
                }
                assert!(seen.iter().all(|&c| c == 0 || c == 1 << k));
            }
        }
    }

    #[test]
    fn pack_round_trips() {
        for k in 1..=4 {
            for s in 0..=3 {
                for st in 0..(1u32 << (k * s)) {
                    let t = TrellisState(st).unpack(k, s);
                    assert_eq!(TrellisState::pack(&t, k), TrellisState(st));
                }
            }
        }
        assert_eq!(TrellisState::pack(&[0, 0, 0], 2), TrellisState::ZERO);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(state_distance(TrellisState(7), TrellisState(7), 1, 4), 0);
        assert_eq!(state_distance(TrellisState(0b0001), TrellisState(0b1001), 1, 4), 1);
        assert_eq!(state_distance(TrellisState(0b0100), TrellisState(0b0101), 2, 2), 2);
        assert_eq!(state_distance(TrellisState(0b0100), TrellisState(0b1000), 2, 2), 1);
    }

    #[test]
    fn branch_metric_examples() {
        let spec = ChannelSpec::new(vec![c(1.0, 0.0)], 0.5, Constellation::bpsk()).unwrap();
        let half = prior_from_llr(0.0, true);
        let g = branch_metric(&spec, c(1.0, 0.0), TrellisState::ZERO, Some(0), &[half]);
        assert!((g.0 + std::f64::consts::LN_2).abs() < 1e-12);
        // residual with |r|^2 = sigma^2
        let r = c(0.3, 0.4) * (0.5f64.sqrt() / 0.5);
        let g = branch_metric(&spec, c(1.0, 0.0) + r, TrellisState::ZERO, Some(0), &[half]);
        assert!((g.0 - (0.5f64.ln() - 1.0)).abs() < 1e-12);
        // the empty symbol contributes x = 0 and prior one
        let g = branch_metric(&spec, c(0.0, 0.0), TrellisState::ZERO, None, &[]);
        assert_eq!(g.0, 0.0);
    }

    #[test]
    fn branch_metric_differences_ignore_the_gaussian_prefactor() {
        let spec = ChannelSpec::new(vec![c(0.8, 0.1), c(0.5, -0.2), c(0.2, 0.0)], 0.37, Constellation::qam16_gray()).unwrap();
        let y = c(0.4, -0.9);
        let priors = [prior_from_llr(0.3, true); 4];
        let log_prefactor = -(2.0 * std::f64::consts::PI * spec.noise_variance()).sqrt().ln();
        for (s1, u1, s2, u2) in [(0u32, 3u32, 17u32, 9u32), (255, 0, 128, 15)] {
            let g1 = branch_metric(&spec, y, TrellisState(s1), Some(u1), &priors);
            let g2 = branch_metric(&spec, y, TrellisState(s2), Some(u2), &priors);
            let with = (g1.0 + log_prefactor) - (g2.0 + log_prefactor);
            assert!((with - (g1.0 - g2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn model_matches_branch_metric_inside_the_block() {
        let spec = ChannelSpec::new(vec![c(0.8, 0.1), c(0.5, -0.2), c(0.2, 0.3)], 0.37, Constellation::qam16_gray()).unwrap();
        let model = ChannelModel::new(&spec);
        let y = c(0.1, 0.2);
        for s in [0u32, 5, 77, 255] {
            for u in [0u32, 6, 15] {
                let direct = branch_metric(&spec, y, TrellisState(s), Some(u), &[]);
                let e = model.expected(10, 20, TrellisState(s), Some(u));
                let via = -(y - e).norm_sqr() * model.inv_noise_variance;
                assert!((direct.0 - via).abs() < 1e-12);
            }
        }
        // first symbol: no live history
        let e = model.expected(1, 20, TrellisState(0), Some(3));
        assert_eq!(e, spec.taps()[0] * spec.constellation().point(3));
        // one past the end: only history
        let e = model.expected(22, 20, TrellisState(0b0001_0010), None);
        assert_eq!(e, spec.taps()[2] * spec.constellation().point(1));
    }
}
