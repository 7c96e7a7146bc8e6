//! Dithered relative-prime (DRP) interleavers.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A bijection on `0..size`. Interleaving reads `out[i] = in[forward[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let mut inverse = vec![usize::MAX; forward.len()];
        for (i, &f) in forward.iter().enumerate() {
            if f >= forward.len() {
                return Err(Error::InvalidPermutation(format!("image {f} out of range at position {i}")));
            }
            if inverse[f] != usize::MAX {
                return Err(Error::InvalidPermutation(format!("image {f} appears twice")));
            }
            inverse[f] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            forward: (0..size).collect(),
            inverse: (0..size).collect(),
        }
    }

    /// Uniformly random permutation from a seeded stream.
    pub fn random(size: usize, seed: u64) -> Self {
        let mut forward: Vec<usize> = (0..size).collect();
        forward.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(forward).expect("a shuffle is a bijection")
    }

    /// DRP permutation: read dither, then `i -> (offset + prime*i) mod size`,
    /// then write dither. Dithers are permutations of one window and are
    /// applied blockwise.
    pub fn drp(size: usize, read_dither: &[usize], write_dither: &[usize], prime: usize, offset: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPermutation("size must be positive".into()));
        }
        if gcd(prime, size) != 1 {
            return Err(Error::InvalidPermutation(format!("{prime} is not coprime with {size}")));
        }
        let window = read_dither.len();
        if window == 0 || write_dither.len() != window || size % window != 0 {
            return Err(Error::InvalidPermutation(format!(
                "dither windows must have equal length dividing {size}"
            )));
        }
        for d in [read_dither, write_dither] {
            Permutation::new(d.to_vec())?;
        }
        let read = |i: usize| window * (i / window) + read_dither[i % window];
        let write = |i: usize| window * (i / window) + write_dither[i % window];
        let forward = (0..size)
            .map(|i| read((offset + prime * write(i)) % size))
            .collect();
        Self::new(forward)
    }

    /// The DRP used by the built-in scenarios: windows of 8 and a prime near
    /// `size / golden ratio`.
    pub fn default_drp(size: usize) -> Result<Self> {
        let p = DrpParams::for_size(size)?;
        Self::drp(size, &p.read_dither, &p.write_dither, p.prime, p.offset)
    }

    /// Reads `size` whitespace-separated forward images.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let forward = text
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidPermutation(format!("not an index: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(forward)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.forward.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        s.push('\n');
        s
    }

    pub fn size(&self) -> usize {
        self.forward.len()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn interleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        Ok(self.forward.iter().map(|&f| seq[f]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        Ok(self.inverse.iter().map(|&i| seq[i]).collect())
    }

    /// Smallest cyclic distance between the images of adjacent positions.
    pub fn min_adjacent_spread(&self) -> usize {
        let n = self.size();
        (0..n)
            .map(|i| {
                let (a, b) = (self.forward[i], self.forward[(i + 1) % n]);
                let d = a.abs_diff(b);
                d.min(n - d)
            })
            .min()
            .unwrap_or(0)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::LengthMismatch {
                what: "interleaver frame",
                expected: self.size(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// DRP construction parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrpParams {
    pub read_dither: Vec<usize>,
    pub write_dither: Vec<usize>,
    pub prime: usize,
    pub offset: usize,
}

const READ_DITHER: [usize; 8] = [5, 0, 2, 7, 3, 1, 6, 4];
const WRITE_DITHER: [usize; 8] = [3, 6, 0, 4, 1, 7, 5, 2];

impl DrpParams {
    pub fn for_size(size: usize) -> Result<Self> {
        if size == 0 || size % READ_DITHER.len() != 0 {
            return Err(Error::InvalidPermutation(format!(
                "default DRP needs a size divisible by {}",
                READ_DITHER.len()
            )));
        }
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let mut prime = (size as f64 / golden).round() as usize;
        while gcd(prime, size) != 1 {
            prime += 1;
        }
        Ok(Self {
            read_dither: READ_DITHER.to_vec(),
            write_dither: WRITE_DITHER.to_vec(),
            prime,
            offset: 0,
        })
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ID8: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

    #[test]
    fn drp_examples() {
        assert_eq!(Permutation::drp(16, &ID8, &ID8, 1, 0).unwrap(), Permutation::identity(16));
        let p = Permutation::drp(8, &ID8, &ID8, 3, 0).unwrap();
        assert_eq!(p.forward(), &[0, 3, 6, 1, 4, 7, 2, 5]);
    }

    #[test]
    fn drp_rejects_bad_parameters() {
        assert!(Permutation::drp(1024, &ID8, &ID8, 512, 0).is_err());
        assert!(Permutation::drp(1020, &ID8, &ID8, 7, 0).is_err());
        assert!(Permutation::drp(16, &[0, 0, 1, 2, 3, 4, 5, 6], &ID8, 3, 0).is_err());
    }

    #[test]
    fn default_drps_are_bijective_with_spread() {
        for size in [1024, 4096] {
            let p = Permutation::default_drp(size).unwrap();
            let mut hits = vec![0u8; size];
            for &f in p.forward() {
                hits[f] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1));
            assert!(p.min_adjacent_spread() >= 2, "spread {}", p.min_adjacent_spread());
        }
        assert_eq!(DrpParams::for_size(1024).unwrap().prime, 633);
        assert_eq!(DrpParams::for_size(4096).unwrap().prime, 2531);
    }

    #[test]
    fn small_cases() {
        let id = Permutation::identity(5);
        assert_eq!(id.interleave(&[1, 2, 3, 4, 5]).unwrap(), vec![1, 2, 3, 4, 5]);
        let swap = Permutation::new(vec![1, 0]).unwrap();
        assert_eq!(swap.interleave(&['a', 'b']).unwrap(), vec!['b', 'a']);
        assert!(swap.interleave(&[1, 2, 3]).is_err());
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = Permutation::random(100, 9);
        assert_eq!(Permutation::parse(&p.to_text()).unwrap(), p);
        assert!(Permutation::parse("0 1 x").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip_identity(size in 1usize..300, seed: u64, values in proptest::collection::vec(-50.0f64..50.0, 300)) {
            let p = Permutation::random(size, seed);
            let seq = &values[..size];
            let back = p.deinterleave(&p.interleave(seq).unwrap()).unwrap();
            prop_assert_eq!(back, seq.to_vec());
        }
    }
}
