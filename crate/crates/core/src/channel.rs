//! Binary erasure symmetric broadcast channel.
//!
//! Alice's bit reaches Bob through a BEC(ε1). Eve's output depends on Bob's:
//! given Bob saw an erasure she is erased with probability ε2, given Bob saw
//! the bit she is erased with probability ε3. Nobody ever sees a flipped bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::error::ChannelError;

/// The erasure triple (ε1, ε2, ε3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl ChannelParams {
    pub fn new(eps1: f64, eps2: f64, eps3: f64) -> Result<Self, ChannelError> {
        let params = Self { eps1, eps2, eps3 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, value) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ChannelError::InvalidProbability { name, value });
            }
        }
        Ok(())
    }

    /// Independent erasures at Bob and Eve.
    pub fn is_independent(&self) -> bool {
        self.eps2 == self.eps3
    }

    /// Eve sees a degraded copy of Bob's output.
    pub fn is_degraded(&self) -> bool {
        self.eps2 == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trit {
    Zero,
    One,
    Erasure,
}

impl Trit {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Trit::One
        } else {
            Trit::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Trit::Zero => Some(false),
            Trit::One => Some(true),
            Trit::Erasure => None,
        }
    }

    pub fn is_erasure(self) -> bool {
        self == Trit::Erasure
    }
}

/// A channel output over {0, 1, E}.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TritVector {
    symbols: Vec<Trit>,
}

impl TritVector {
    pub fn new(symbols: Vec<Trit>) -> Self {
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Trit] {
        &self.symbols
    }

    pub fn get(&self, i: usize) -> Trit {
        self.symbols[i]
    }

    pub fn is_erased(&self, i: usize) -> bool {
        self.symbols[i].is_erasure()
    }

    pub fn erased_count(&self) -> usize {
        self.symbols.iter().filter(|t| t.is_erasure()).count()
    }

    pub fn erased_indices(&self) -> Vec<u32> {
        self.indices_where(true)
    }

    pub fn non_erased_indices(&self) -> Vec<u32> {
        self.indices_where(false)
    }

    fn indices_where(&self, erased: bool) -> Vec<u32> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_erasure() == erased)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Number of erasures among `indices`.
    pub fn erasures_in(&self, indices: &[u32]) -> usize {
        indices.iter().filter(|&&i| self.is_erased(i as usize)).count()
    }
}

/// Joint law of (Bob status, Eve status), the same for either input bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasurePatternDistribution {
    pub p_ok_ok: f64,
    pub p_ok_e: f64,
    pub p_e_ok: f64,
    pub p_e_e: f64,
}

impl ErasurePatternDistribution {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_ok_ok, self.p_ok_e, self.p_e_ok, self.p_e_e]
    }

    pub fn bob_erasure(&self) -> f64 {
        self.p_e_ok + self.p_e_e
    }
}

pub fn joint_law(params: &ChannelParams) -> ErasurePatternDistribution {
    let ChannelParams { eps1, eps2, eps3 } = *params;
    ErasurePatternDistribution {
        p_ok_ok: (1.0 - eps1) * (1.0 - eps3),
        p_ok_e: (1.0 - eps1) * eps3,
        p_e_ok: eps1 * (1.0 - eps2),
        p_e_e: eps1 * eps2,
    }
}

/// Sends `x` through the channel once per coordinate.
///
/// Bob's erasure is drawn first, then Eve's conditioned on it.
pub fn transmit<R: Rng + ?Sized>(
    x: &BitVec,
    params: &ChannelParams,
    rng: &mut R,
) -> (TritVector, TritVector) {
    let mut y = Vec::with_capacity(x.len());
    let mut z = Vec::with_capacity(x.len());
    for bit in x.iter() {
        let sent = Trit::from_bit(bit);
        let bob_erased = rng.gen_bool(params.eps1);
        let eve_erasure_p = if bob_erased { params.eps2 } else { params.eps3 };
        let eve_erased = rng.gen_bool(eve_erasure_p);
        y.push(if bob_erased { Trit::Erasure } else { sent });
        z.push(if eve_erased { Trit::Erasure } else { sent });
    }
    (TritVector::new(y), TritVector::new(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn joint_law_examples() {
        let d = joint_law(&ChannelParams::new(0.5, 0.8, 0.4).unwrap());
        for (got, want) in d.as_array().iter().zip([0.30, 0.20, 0.10, 0.40]) {
            assert!(close(*got, want), "{d:?}");
        }
        let d = joint_law(&ChannelParams::new(0.0, 0.7, 0.0).unwrap());
        assert_eq!(d.as_array(), [1.0, 0.0, 0.0, 0.0]);
        // Degraded: Bob erased forces Eve erased.
        let d = joint_law(&ChannelParams::new(0.5, 1.0, 0.4).unwrap());
        assert_eq!(d.p_e_ok, 0.0);
    }

    #[test]
    fn joint_law_is_a_distribution() {
        for i in 0..=10 {
            for j in 0..=10 {
                for k in 0..=10 {
                    let p = ChannelParams::new(i as f64 / 10.0, j as f64 / 10.0, k as f64 / 10.0)
                        .unwrap();
                    let d = joint_law(&p);
                    assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    assert!(close(d.bob_erasure(), p.eps1));
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ChannelParams::new(1.5, 0.5, 0.5).is_err());
        assert!(ChannelParams::new(0.5, -0.1, 0.5).is_err());
        assert!(ChannelParams::new(0.5, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn degenerate_flags() {
        let p = ChannelParams::new(0.3, 0.4, 0.4).unwrap();
        assert!(p.is_independent() && !p.is_degraded());
        let p = ChannelParams::new(0.3, 1.0, 0.4).unwrap();
        assert!(p.is_degraded() && !p.is_independent());
    }

    #[test]
    fn noiseless_and_fully_erased_channels() {
        let mut rng = substream(1, Stream::Channel);
        let x = BitVec::random(1000, &mut rng);
        let (y, z) = transmit(&x, &ChannelParams::new(0.0, 0.3, 0.0).unwrap(), &mut rng);
        for i in 0..x.len() {
            assert_eq!(y.get(i).bit(), Some(x.get(i)));
            assert_eq!(z.get(i).bit(), Some(x.get(i)));
        }
        let (y, z) = transmit(&x, &ChannelParams::new(1.0, 1.0, 0.2).unwrap(), &mut rng);
        assert_eq!(y.erased_count(), 1000);
        assert_eq!(z.erased_count(), 1000);
    }

    #[test]
    fn transmit_is_deterministic() {
        let p = ChannelParams::new(0.5, 0.8, 0.4).unwrap();
        let x = BitVec::random(5000, &mut substream(3, Stream::Alice));
        let a = transmit(&x, &p, &mut substream(9, Stream::Channel));
        let b = transmit(&x, &p, &mut substream(9, Stream::Channel));
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_pattern_matches_joint_law() {
        let p = ChannelParams::new(0.5, 0.8, 0.4).unwrap();
        let n = 1_000_000;
        let x = BitVec::random(n, &mut substream(11, Stream::Alice));
        let (y, z) = transmit(&x, &p, &mut substream(11, Stream::Channel));
        let mut counts = [0usize; 4];
        for i in 0..n {
            let (yb, zb) = (y.get(i), z.get(i));
            // The channel never flips a bit.
            assert!(yb.bit().is_none_or(|b| b == x.get(i)));
            assert!(zb.bit().is_none_or(|b| b == x.get(i)));
            counts[(yb.is_erasure() as usize) * 2 + zb.is_erasure() as usize] += 1;
        }
        for (count, prob) in counts.iter().zip(joint_law(&p).as_array()) {
            let sigma = (n as f64 * prob * (1.0 - prob)).sqrt();
            let dev = (*count as f64 - n as f64 * prob).abs();
            assert!(dev <= 4.0 * sigma, "count {count} vs expected {}", n as f64 * prob);
        }
        // Conditional Eve erasure rates.
        let bob_e = (counts[2] + counts[3]) as f64;
        let bob_ok = (counts[0] + counts[1]) as f64;
        let eps2_hat = counts[3] as f64 / bob_e;
        let eps3_hat = counts[1] as f64 / bob_ok;
        assert!((eps2_hat - 0.8).abs() <= 4.0 * (0.8f64 * 0.2 / bob_e).sqrt());
        assert!((eps3_hat - 0.4).abs() <= 4.0 * (0.4f64 * 0.6 / bob_ok).sqrt());
    }
}
