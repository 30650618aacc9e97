use serde::{Deserialize, Serialize};

use crate::bounds::upper_bound;
use crate::channel::{ChannelParams, TritVector};
use crate::error::ProtocolError;

/// Parameters of one protocol execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Block length: channel uses per attempt.
    pub n: usize,
    /// Target rate r; strings are ⌊n(r − δ̃)⌋ bits.
    pub rate: f64,
    pub channel: ChannelParams,
    /// Fraction of coordinates spent on the shared order bit.
    pub alpha: f64,
    /// Typicality slack δ.
    pub delta: f64,
    /// Compression slack δ̄ of the shared-bit hash.
    pub delta_bar: f64,
    /// Compression slack δ̃ of the key hashes.
    pub delta_tilde: f64,
    pub max_resends: usize,
    pub seed: u64,
    /// When false, the order bit is ignored: labels follow C alone and K0
    /// is always encrypted first. Exists only to reproduce the leak it closes.
    pub order_mask: bool,
}

impl ProtocolConfig {
    pub const DEFAULT_ALPHA: f64 = 0.02;
    pub const DEFAULT_DELTA: f64 = 0.05;
    pub const DEFAULT_DELTA_BAR: f64 = 0.001;
    pub const DEFAULT_DELTA_TILDE: f64 = 0.01;
    pub const DEFAULT_MAX_RESENDS: usize = 16;

    pub fn new(n: usize, rate: f64, channel: ChannelParams) -> Self {
        Self {
            n,
            rate,
            channel,
            alpha: Self::DEFAULT_ALPHA,
            delta: Self::DEFAULT_DELTA,
            delta_bar: Self::DEFAULT_DELTA_BAR,
            delta_tilde: Self::DEFAULT_DELTA_TILDE,
            max_resends: Self::DEFAULT_MAX_RESENDS,
            seed: 0,
            order_mask: true,
        }
    }

    /// Rate set to `fraction` of the channel's upper bound.
    pub fn at_fraction_of_capacity(n: usize, fraction: f64, channel: ChannelParams) -> Self {
        Self::new(n, fraction * upper_bound(&channel), channel)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_slacks(mut self, alpha: f64, delta: f64, delta_bar: f64, delta_tilde: f64) -> Self {
        self.alpha = alpha;
        self.delta = delta;
        self.delta_bar = delta_bar;
        self.delta_tilde = delta_tilde;
        self
    }

    pub fn with_max_resends(mut self, max_resends: usize) -> Self {
        self.max_resends = max_resends;
        self
    }

    pub fn without_order_mask(mut self) -> Self {
        self.order_mask = false;
        self
    }

    /// r / ε3: the fraction of coordinates in each of G and B.
    pub fn beta(&self) -> f64 {
        self.rate / self.channel.eps3
    }
}

/// How Bob fills B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetCase {
    /// β ≤ ε1 and β ≤ ½: B is a uniform subset of the erased coordinates.
    ErasedSubset,
    /// ε1 < β ≤ ½: every erased coordinate, padded with fresh non-erased ones.
    PaddedErasures,
    /// β > ½: everything outside G ∪ L_α, plus a uniform part of G.
    Overlapping,
}

impl SetCase {
    pub fn id(self) -> u8 {
        match self {
            SetCase::ErasedSubset => 1,
            SetCase::PaddedErasures => 2,
            SetCase::Overlapping => 3,
        }
    }

    pub fn from_beta(beta: f64, eps1: f64) -> Self {
        if beta <= eps1 && beta <= 0.5 {
            SetCase::ErasedSubset
        } else if beta <= 0.5 {
            SetCase::PaddedErasures
        } else {
            SetCase::Overlapping
        }
    }
}

/// Integral sizes of every set and string in one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolDimensions {
    pub n: usize,
    /// |L_α|.
    pub n_alpha: usize,
    /// |G| = |B|.
    pub n_beta: usize,
    /// String length.
    pub k: usize,
    /// Output length of the shared-bit hash.
    pub f_alpha_out: usize,
    pub case: SetCase,
    /// |G ∩ B|.
    pub overlap: usize,
    /// Fewest erasures in a Y that passes the typicality check.
    pub min_erased: usize,
    /// Fewest non-erased coordinates in a Y that passes the typicality check.
    pub min_non_erased: usize,
}

// Products like 20000 * 0.52 land a hair below the integer they denote.
const COUNT_EPS: f64 = 1e-9;

fn floor_count(x: f64) -> i64 {
    (x + COUNT_EPS).floor() as i64
}

fn ceil_count(x: f64) -> usize {
    (x - COUNT_EPS).ceil().max(0.0) as usize
}

/// (min erased, min non-erased) for a block of length `n` to pass.
pub fn typicality_thresholds(n: usize, eps1: f64, delta: f64) -> (usize, usize) {
    let n = n as f64;
    (ceil_count(n * (eps1 - delta)), ceil_count(n * (1.0 - eps1 - delta)))
}

fn infeasible(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Infeasible(msg.into())
}

// Negated comparisons so that NaN parameters are rejected too.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn derive_dimensions(config: &ProtocolConfig) -> Result<ProtocolDimensions, ProtocolError> {
    let ch = config.channel;
    ch.validate()?;
    let (n, r) = (config.n, config.rate);
    if n == 0 {
        return Err(infeasible("block length must be positive"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(infeasible(format!("rate {r} not in (0, 1)")));
    }
    if ch.eps2 < ch.eps3 {
        return Err(infeasible(format!(
            "protocol requires eps2 >= eps3 (got {} < {})",
            ch.eps2, ch.eps3
        )));
    }
    for (name, v) in [("alpha", config.alpha), ("delta", config.delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(infeasible(format!("{name} = {v} not in (0, 1)")));
        }
    }
    if !(config.delta_bar > 0.0) {
        return Err(infeasible("delta_bar must be positive"));
    }
    if !(config.delta_tilde > 0.0 && config.delta_tilde < r) {
        return Err(infeasible(format!(
            "delta_tilde = {} not in (0, r = {r})",
            config.delta_tilde
        )));
    }

    let eve_term = ch.eps3 * (1.0 - ch.eps1);
    let half_term = 0.5 * (ch.eps1 * ch.eps2 + eve_term);
    if !(r < eve_term) {
        return Err(infeasible(format!("rate {r} >= eps3(1 - eps1) = {eve_term}")));
    }
    if !(r < half_term) {
        return Err(infeasible(format!(
            "rate {r} >= (eps1 eps2 + eps3(1 - eps1)) / 2 = {half_term}"
        )));
    }
    let erasure_room = ch.eps1 - 2.0 * config.delta;
    if r > erasure_room + COUNT_EPS {
        return Err(infeasible(format!(
            "rate {r} > eps1 - 2 delta = {erasure_room}"
        )));
    }
    let beta = config.beta();
    if !(beta < 1.0 - ch.eps1) || beta + config.alpha > 1.0 {
        return Err(infeasible(format!("beta = {beta} leaves no room for G and L_alpha")));
    }

    let nf = n as f64;
    let n_alpha = floor_count(config.alpha * nf);
    let n_beta = floor_count(beta * nf);
    let k = floor_count((r - config.delta_tilde) * nf);
    let f_alpha_out = floor_count((config.alpha * (ch.eps3 - config.delta) - config.delta_bar) * nf);
    if k < 1 {
        return Err(infeasible(format!("string length {k} < 1")));
    }
    if f_alpha_out < 1 {
        return Err(infeasible(format!(
            "shared-bit hash output {f_alpha_out} < 1; need delta_bar < alpha (eps3 - delta)"
        )));
    }
    let (n_alpha, n_beta, k, f_alpha_out) =
        (n_alpha as usize, n_beta as usize, k as usize, f_alpha_out as usize);
    debug_assert!(k <= n_beta && f_alpha_out <= n_alpha);

    let (min_erased, min_non_erased) = typicality_thresholds(n, ch.eps1, config.delta);
    let max_erased = n - min_non_erased.min(n);
    if n_alpha + n_beta > min_non_erased {
        return Err(infeasible(format!(
            "|L_alpha| + |G| = {} exceeds the {min_non_erased} non-erased coordinates guaranteed by typicality; lower alpha or delta",
            n_alpha + n_beta
        )));
    }

    let case = SetCase::from_beta(beta, ch.eps1);
    let overlap = match case {
        SetCase::ErasedSubset => {
            if n_beta > min_erased {
                return Err(infeasible(format!(
                    "|B| = {n_beta} exceeds the {min_erased} erasures guaranteed by typicality; lower delta"
                )));
            }
            if (n_beta as f64) < r * nf {
                return Err(infeasible("|B| holds fewer than nr erasures"));
            }
            0
        }
        SetCase::PaddedErasures => {
            if max_erased > n_beta {
                return Err(infeasible(format!(
                    "a typical Y may carry {max_erased} erasures, more than |B| = {n_beta}; lower delta"
                )));
            }
            if n_alpha + 2 * n_beta > n {
                return Err(infeasible(format!(
                    "G, B and L_alpha need {} disjoint coordinates out of {n}",
                    n_alpha + 2 * n_beta
                )));
            }
            0
        }
        SetCase::Overlapping => {
            let outside = n - n_beta - n_alpha;
            if n_beta < outside {
                return Err(infeasible("negative overlap"));
            }
            n_beta - outside
        }
    };

    Ok(ProtocolDimensions {
        n,
        n_alpha,
        n_beta,
        k,
        f_alpha_out,
        case,
        overlap,
        min_erased,
        min_non_erased,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Typicality {
    Proceed,
    Abort,
}

/// Bob aborts unless Y has at least n(ε1 − δ) erasures and at least
/// n(1 − ε1 − δ) non-erased coordinates. Both thresholds are inclusive.
pub fn check_typicality(y: &TritVector, config: &ProtocolConfig) -> Typicality {
    let (min_erased, min_non_erased) =
        typicality_thresholds(y.len(), config.channel.eps1, config.delta);
    let erased = y.erased_count();
    if erased >= min_erased && y.len() - erased >= min_non_erased {
        Typicality::Proceed
    } else {
        Typicality::Abort
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Trit;

    fn ch(e1: f64, e2: f64, e3: f64) -> ChannelParams {
        ChannelParams::new(e1, e2, e3).unwrap()
    }

    #[test]
    fn case_one() {
        let c = ProtocolConfig::new(20_000, 0.2, ch(0.5, 1.0, 0.5));
        assert!((c.beta() - 0.4).abs() < 1e-12);
        let d = derive_dimensions(&c).unwrap();
        assert_eq!(d.case, SetCase::ErasedSubset);
        assert_eq!(d.case.id(), 1);
        assert_eq!((d.n_alpha, d.n_beta, d.k, d.overlap), (400, 8000, 3800, 0));
        // (0.02 * 0.45 - 0.001) * 20000
        assert_eq!(d.f_alpha_out, 160);
    }

    #[test]
    fn case_two_reuse_count() {
        let c = ProtocolConfig::new(20_000, 0.2, ch(0.3, 0.6, 0.5));
        let d = derive_dimensions(&c).unwrap();
        assert_eq!(d.case, SetCase::PaddedErasures);
        // n(β − ε1) = 0.1 n coordinates padded in when exactly nε1 are erased.
        assert_eq!(d.n_beta - (0.3 * 20_000.0) as usize, 2000);
    }

    #[test]
    fn case_three_overlap() {
        let c = ProtocolConfig::new(20_000, 0.104, ch(0.45, 1.0, 0.2))
            .with_slacks(0.01, 0.01, 0.001, 0.01);
        let d = derive_dimensions(&c).unwrap();
        assert_eq!(d.case, SetCase::Overlapping);
        assert_eq!(d.n_beta, 10_400);
        // n_beta − (n − n_beta − n_alpha) = 10400 − 9400; n(2β − 1) would be 800.
        assert_eq!(d.overlap, 1000);
    }

    #[test]
    fn case_three_with_default_slacks_is_rejected() {
        // β + α = 0.54 > 1 − ε1 − δ = 0.5.
        let c = ProtocolConfig::new(20_000, 0.104, ch(0.45, 1.0, 0.2));
        assert!(matches!(derive_dimensions(&c), Err(ProtocolError::Infeasible(_))));
    }

    #[test]
    fn boundaries() {
        assert_eq!(SetCase::from_beta(0.3, 0.3), SetCase::ErasedSubset);
        assert_eq!(SetCase::from_beta(0.5, 0.3), SetCase::PaddedErasures);
        assert_eq!(SetCase::from_beta(0.5, 0.6), SetCase::ErasedSubset);
        assert_eq!(SetCase::from_beta(0.5000001, 0.6), SetCase::Overlapping);
    }

    #[test]
    fn infeasible_configs() {
        // ε1 = 0: no rate is possible.
        let c = ProtocolConfig::new(20_000, 0.1, ch(0.0, 0.5, 0.5));
        assert!(derive_dimensions(&c).is_err());
        // Above capacity.
        let c = ProtocolConfig::new(20_000, 0.24, ch(0.5, 0.9, 0.4));
        assert!(derive_dimensions(&c).is_err());
        // ε2 < ε3.
        let c = ProtocolConfig::new(20_000, 0.05, ch(0.4, 0.2, 0.5));
        assert!(derive_dimensions(&c).is_err());
        // delta_bar too large for the shared-bit hash.
        let c = ProtocolConfig::new(20_000, 0.16, ch(0.5, 0.9, 0.4)).with_slacks(0.02, 0.05, 0.01, 0.01);
        assert!(derive_dimensions(&c).is_err());
        // Tiny n: k rounds to zero.
        let c = ProtocolConfig::new(10, 0.16, ch(0.5, 0.9, 0.4));
        assert!(derive_dimensions(&c).is_err());
    }

    #[test]
    fn typicality() {
        let c = ProtocolConfig::new(100, 0.2, ch(0.5, 1.0, 0.5));
        let all_erased = TritVector::new(vec![Trit::Erasure; 100]);
        assert_eq!(check_typicality(&all_erased, &c), Typicality::Abort);
        // Exactly ⌈n(ε1 − δ)⌉ = 45 erasures passes.
        let mut s = vec![Trit::Erasure; 45];
        s.extend(vec![Trit::One; 55]);
        assert_eq!(check_typicality(&TritVector::new(s), &c), Typicality::Proceed);
        let mut s = vec![Trit::Erasure; 44];
        s.extend(vec![Trit::One; 56]);
        assert_eq!(check_typicality(&TritVector::new(s), &c), Typicality::Abort);
    }
}
