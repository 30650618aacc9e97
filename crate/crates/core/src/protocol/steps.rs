use rand::seq::index;
use rand::Rng;

use super::config::{ProtocolDimensions, SetCase};
use super::transcript::{EncryptedStrings, IndexSet, LabelMessage, SharedBitMessage};
use crate::bits::BitVec;
use crate::channel::TritVector;
use crate::error::ProtocolError;
use crate::hash::LinearHash;

/// `amount` elements of `pool` chosen uniformly without replacement.
fn sample_from<R: Rng + ?Sized>(
    pool: &[u32],
    amount: usize,
    what: &'static str,
    rng: &mut R,
) -> Result<Vec<u32>, ProtocolError> {
    if amount > pool.len() {
        return Err(ProtocolError::PoolExhausted {
            pool: what,
            needed: amount,
            available: pool.len(),
        });
    }
    Ok(index::sample(rng, pool.len(), amount)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Bob's view of X on coordinates he received.
pub fn known_bits(y: &TritVector, indices: &[u32]) -> Result<BitVec, ProtocolError> {
    indices
        .iter()
        .map(|&i| {
            y.get(i as usize)
                .bit()
                .ok_or(ProtocolError::ErasedInDecodingSet { index: i })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(BitVec::from_bools)
}

/// Bob's half of the shared-bit phase: picks L_α among his non-erased
/// coordinates, draws F_α, and masks a fresh uniform S with the first bit
/// of F_α(X_{L_α}). Returns the message and S.
pub fn bob_shared_bit<R: Rng + ?Sized>(
    y: &TritVector,
    dims: &ProtocolDimensions,
    rng: &mut R,
) -> Result<(SharedBitMessage, bool), ProtocolError> {
    let non_erased = y.non_erased_indices();
    if non_erased.len() < dims.n_alpha {
        return Err(ProtocolError::InsufficientNonErased {
            available: non_erased.len(),
            needed: dims.n_alpha,
        });
    }
    let l_alpha = IndexSet::from_unsorted(sample_from(&non_erased, dims.n_alpha, "non-erased", rng)?);
    let f_alpha = LinearHash::sample(dims.n_alpha, dims.f_alpha_out, rng)?;
    let k_alpha = f_alpha.apply(&known_bits(y, l_alpha.as_slice())?)?.get(0);
    let s: bool = rng.gen();
    Ok((
        SharedBitMessage {
            l_alpha,
            f_alpha,
            masked_s: k_alpha ^ s,
        },
        s,
    ))
}

/// Alice unmasks S with her own copy of X_{L_α}.
pub fn alice_recover_shared_bit(x: &BitVec, msg: &SharedBitMessage) -> Result<bool, ProtocolError> {
    let k_alpha = msg.f_alpha.apply(&x.gather(msg.l_alpha.as_slice()))?.get(0);
    Ok(msg.masked_s ^ k_alpha)
}

/// Result of the shared-bit phase: the public message, Bob's S and the
/// value Alice recovers.
#[derive(Debug, Clone)]
pub struct SharedBit {
    pub message: SharedBitMessage,
    pub s_bob: bool,
    pub s_alice: bool,
}

pub fn phase1_shared_bit<R: Rng + ?Sized>(
    x: &BitVec,
    y: &TritVector,
    dims: &ProtocolDimensions,
    rng_bob: &mut R,
) -> Result<SharedBit, ProtocolError> {
    let (message, s_bob) = bob_shared_bit(y, dims, rng_bob)?;
    let s_alice = alice_recover_shared_bit(x, &message)?;
    Ok(SharedBit {
        message,
        s_bob,
        s_alice,
    })
}

/// Forms (G, B). G is always a uniform subset of the non-erased coordinates
/// outside L_α; B follows `dims.case`.
pub fn form_sets<R: Rng + ?Sized>(
    y: &TritVector,
    l_alpha: &IndexSet,
    dims: &ProtocolDimensions,
    rng: &mut R,
) -> Result<(IndexSet, IndexSet), ProtocolError> {
    let n = y.len();
    let mut used = vec![false; n];
    for &i in l_alpha.as_slice() {
        used[i as usize] = true;
    }
    let candidates: Vec<u32> = y
        .non_erased_indices()
        .into_iter()
        .filter(|&i| !used[i as usize])
        .collect();
    let g = sample_from(&candidates, dims.n_beta, "non-erased", rng)?;
    for &i in &g {
        used[i as usize] = true;
    }

    let b = match dims.case {
        SetCase::ErasedSubset => sample_from(&y.erased_indices(), dims.n_beta, "erased", rng)?,
        SetCase::PaddedErasures => {
            let mut b = y.erased_indices();
            if b.len() > dims.n_beta {
                return Err(ProtocolError::PoolExhausted {
                    pool: "B capacity",
                    needed: b.len(),
                    available: dims.n_beta,
                });
            }
            let fresh: Vec<u32> = candidates.into_iter().filter(|&i| !used[i as usize]).collect();
            b.extend(sample_from(&fresh, dims.n_beta - b.len(), "non-erased padding", rng)?);
            b
        }
        SetCase::Overlapping => {
            let mut b: Vec<u32> = (0..n as u32).filter(|&i| !used[i as usize]).collect();
            if b.len() + dims.overlap != dims.n_beta {
                return Err(ProtocolError::PoolExhausted {
                    pool: "outside G and L_alpha",
                    needed: dims.n_beta - dims.overlap,
                    available: b.len(),
                });
            }
            b.extend(sample_from(&g, dims.overlap, "G", rng)?);
            b
        }
    };
    Ok((IndexSet::from_unsorted(g), IndexSet::from_unsorted(b)))
}

/// (L_0, L_1) = (G, B) when C ⊕ S = 0, else (B, G).
pub fn assign_labels(g: IndexSet, b: IndexSet, c: bool, s: bool) -> LabelMessage {
    debug_assert_eq!(g.len(), b.len());
    if c ^ s {
        LabelMessage { l0: b, l1: g }
    } else {
        LabelMessage { l0: g, l1: b }
    }
}

/// Alice draws F_0, F_1 and sends K_S ⊕ F_0(X_{L_0}) then K_{1⊕S} ⊕ F_1(X_{L_1}).
#[allow(clippy::too_many_arguments)]
pub fn alice_respond<R: Rng + ?Sized>(
    x: &BitVec,
    labels: &LabelMessage,
    s: bool,
    k0: &BitVec,
    k1: &BitVec,
    dims: &ProtocolDimensions,
    rng: &mut R,
) -> Result<EncryptedStrings, ProtocolError> {
    for key in [k0, k1] {
        if key.len() != dims.k {
            return Err(ProtocolError::StringLength {
                expected: dims.k,
                found: key.len(),
            });
        }
    }
    let f0 = LinearHash::sample(dims.n_beta, dims.k, rng)?;
    let f1 = LinearHash::sample(dims.n_beta, dims.k, rng)?;
    let pad0 = f0.apply(&x.gather(labels.l0.as_slice()))?;
    let pad1 = f1.apply(&x.gather(labels.l1.as_slice()))?;
    let (first, second) = if s { (k1, k0) } else { (k0, k1) };
    Ok(EncryptedStrings {
        ct_first: first.xor(&pad0),
        ct_second: second.xor(&pad1),
        f0,
        f1,
    })
}

/// K_C sits at position C ⊕ S, keyed by the set Bob knows completely.
pub fn bob_decode(
    y: &TritVector,
    labels: &LabelMessage,
    msg: &EncryptedStrings,
    c: bool,
    s: bool,
) -> Result<BitVec, ProtocolError> {
    let position = c ^ s;
    let x_known = known_bits(y, labels.set(position).as_slice())?;
    let pad = msg.hash(position).apply(&x_known)?;
    Ok(msg.ciphertext(position).xor(&pad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, ChannelParams, Trit};
    use crate::protocol::config::{check_typicality, derive_dimensions, ProtocolConfig, Typicality};
    use crate::rng::{substream, Stream};

    fn setup(config: &ProtocolConfig, seed: u64) -> (ProtocolDimensions, BitVec, TritVector) {
        let dims = derive_dimensions(config).unwrap();
        let x = BitVec::random(config.n, &mut substream(seed, Stream::Alice));
        let mut channel = substream(seed, Stream::Channel);
        loop {
            let (y, _) = transmit(&x, &config.channel, &mut channel);
            if check_typicality(&y, config) == Typicality::Proceed {
                return (dims, x, y);
            }
        }
    }

    fn case_configs() -> [ProtocolConfig; 3] {
        let ch = |a, b, c| ChannelParams::new(a, b, c).unwrap();
        [
            ProtocolConfig::new(4000, 0.2, ch(0.5, 1.0, 0.5)),
            ProtocolConfig::new(4000, 0.2, ch(0.3, 0.8, 0.5)),
            ProtocolConfig::new(20_000, 0.104, ch(0.45, 1.0, 0.2)).with_slacks(0.01, 0.01, 0.001, 0.01),
        ]
    }

    #[test]
    fn alice_always_recovers_s() {
        let config = case_configs()[0];
        for seed in 0..50 {
            let (dims, x, y) = setup(&config, seed);
            let sb = phase1_shared_bit(&x, &y, &dims, &mut substream(seed, Stream::Bob)).unwrap();
            assert_eq!(sb.s_alice, sb.s_bob);
        }
    }

    #[test]
    fn zero_hash_leaves_s_unmasked() {
        let x = BitVec::from_bools([true, true, false]);
        let zero = LinearHash::from_rows(&[BitVec::zeros(2)]).unwrap();
        let msg = SharedBitMessage {
            l_alpha: IndexSet::from_sorted(vec![0, 1]).unwrap(),
            f_alpha: zero,
            masked_s: true,
        };
        assert!(alice_recover_shared_bit(&x, &msg).unwrap());
    }

    #[test]
    fn shared_bit_needs_enough_non_erased() {
        let config = case_configs()[0];
        let dims = derive_dimensions(&config).unwrap();
        let y = TritVector::new(vec![Trit::Erasure; config.n]);
        assert!(matches!(
            bob_shared_bit(&y, &dims, &mut substream(0, Stream::Bob)),
            Err(ProtocolError::InsufficientNonErased { .. })
        ));
    }

    #[test]
    fn s_is_uniform() {
        // Only Bob's stream matters for S; reuse one channel output.
        let config = case_configs()[0];
        let (dims, _, y) = setup(&config, 1);
        let trials = 10_000;
        let ones = (0..trials)
            .filter(|&t| bob_shared_bit(&y, &dims, &mut substream(t, Stream::Bob)).unwrap().1)
            .count() as f64;
        let sd = (trials as f64 * 0.25).sqrt();
        assert!((ones - trials as f64 / 2.0).abs() <= 4.0 * sd);
    }

    #[test]
    fn set_shapes_per_case() {
        for (case_idx, config) in case_configs().iter().enumerate() {
            for seed in 0..10 {
                let (dims, x, y) = setup(config, seed);
                let mut bob = substream(seed, Stream::Bob);
                let sb = phase1_shared_bit(&x, &y, &dims, &mut bob).unwrap();
                let l_alpha = &sb.message.l_alpha;
                let (g, b) = form_sets(&y, l_alpha, &dims, &mut bob).unwrap();
                assert_eq!(g.len(), dims.n_beta);
                assert_eq!(b.len(), dims.n_beta);
                assert!(g.as_slice().iter().all(|&i| !y.is_erased(i as usize) && !l_alpha.contains(i)));
                assert!(b.as_slice().iter().all(|&i| !l_alpha.contains(i)));
                let overlap = g.intersection(&b).len();
                let erased_in_b = y.erasures_in(b.as_slice());
                match case_idx {
                    0 => {
                        assert_eq!(erased_in_b, dims.n_beta);
                        assert_eq!(overlap, 0);
                    }
                    1 => {
                        assert_eq!(erased_in_b, y.erased_count());
                        assert_eq!(overlap, 0);
                    }
                    _ => {
                        assert_eq!(overlap, dims.overlap);
                        assert_eq!(erased_in_b, y.erased_count());
                    }
                }
                assert!(erased_in_b as f64 >= config.rate * config.n as f64);
            }
        }
    }

    #[test]
    fn label_assignment() {
        let g = IndexSet::from_sorted(vec![1]).unwrap();
        let b = IndexSet::from_sorted(vec![2]).unwrap();
        let l = assign_labels(g.clone(), b.clone(), false, false);
        assert_eq!((l.l0, l.l1), (g.clone(), b.clone()));
        let l = assign_labels(g.clone(), b.clone(), true, true);
        assert_eq!((l.l0, l.l1), (g.clone(), b.clone()));
        let l = assign_labels(g.clone(), b.clone(), true, false);
        assert_eq!((l.l0, l.l1), (b.clone(), g.clone()));
        let l = assign_labels(g.clone(), b.clone(), false, true);
        assert_eq!((l.l0, l.l1), (b, g));
    }

    fn respond_fixture(s: bool) -> (BitVec, LabelMessage, ProtocolDimensions, BitVec, BitVec, EncryptedStrings) {
        let config = case_configs()[0];
        let (dims, x, y) = setup(&config, 3);
        let mut bob = substream(3, Stream::Bob);
        let sb = phase1_shared_bit(&x, &y, &dims, &mut bob).unwrap();
        let (g, b) = form_sets(&y, &sb.message.l_alpha, &dims, &mut bob).unwrap();
        let labels = assign_labels(g, b, false, s);
        let mut inputs = substream(3, Stream::Inputs);
        let k0 = BitVec::random(dims.k, &mut inputs);
        let k1 = BitVec::random(dims.k, &mut inputs);
        let msg = alice_respond(&x, &labels, s, &k0, &k1, &dims, &mut substream(3, Stream::Alice)).unwrap();
        (x, labels, dims, k0, k1, msg)
    }

    #[test]
    fn ciphertext_order_follows_s() {
        let (x, labels, _, k0, k1, msg) = respond_fixture(false);
        let pad0 = msg.f0.apply(&x.gather(labels.l0.as_slice())).unwrap();
        let pad1 = msg.f1.apply(&x.gather(labels.l1.as_slice())).unwrap();
        assert_eq!(msg.ct_first.xor(&pad0), k0);
        assert_eq!(msg.ct_second.xor(&pad1), k1);

        let (x, labels, _, k0, k1, msg) = respond_fixture(true);
        let pad0 = msg.f0.apply(&x.gather(labels.l0.as_slice())).unwrap();
        let pad1 = msg.f1.apply(&x.gather(labels.l1.as_slice())).unwrap();
        assert_eq!(msg.ct_first.xor(&pad0), k1);
        assert_eq!(msg.ct_second.xor(&pad1), k0);
    }

    #[test]
    fn self_keyed_string_encrypts_to_zero() {
        let (x, labels, dims, _, k1, _) = respond_fixture(false);
        let mut alice = substream(3, Stream::Alice);
        // Predict F_0 by replaying Alice's stream.
        let f0 = LinearHash::sample(dims.n_beta, dims.k, &mut alice.clone()).unwrap();
        let k0 = f0.apply(&x.gather(labels.l0.as_slice())).unwrap();
        let msg = alice_respond(&x, &labels, false, &k0, &k1, &dims, &mut alice).unwrap();
        assert_eq!(msg.ct_first.count_ones(), 0);
    }

    #[test]
    fn wrong_string_length_is_rejected() {
        let (x, labels, dims, k0, _, _) = respond_fixture(false);
        let short = BitVec::zeros(dims.k - 1);
        assert!(matches!(
            alice_respond(&x, &labels, false, &k0, &short, &dims, &mut substream(0, Stream::Alice)),
            Err(ProtocolError::StringLength { .. })
        ));
    }

    #[test]
    fn decoding_picks_position_c_xor_s() {
        for s in [false, true] {
            for c in [false, true] {
                let config = case_configs()[1];
                let (dims, x, y) = setup(&config, 8);
                let mut bob = substream(8, Stream::Bob);
                let sb = phase1_shared_bit(&x, &y, &dims, &mut bob).unwrap();
                let (g, b) = form_sets(&y, &sb.message.l_alpha, &dims, &mut bob).unwrap();
                let labels = assign_labels(g.clone(), b, c, s);
                assert_eq!(labels.set(c ^ s), &g);
                let mut inputs = substream(8, Stream::Inputs);
                let k0 = BitVec::random(dims.k, &mut inputs);
                let k1 = BitVec::random(dims.k, &mut inputs);
                let msg = alice_respond(&x, &labels, s, &k0, &k1, &dims, &mut substream(8, Stream::Alice)).unwrap();
                let k_hat = bob_decode(&y, &labels, &msg, c, s).unwrap();
                assert_eq!(k_hat, if c { k1.clone() } else { k0.clone() });
                // Decoding from the wrong position hits an erasure.
                assert!(matches!(
                    bob_decode(&y, &labels, &msg, !c, s),
                    Err(ProtocolError::ErasedInDecodingSet { .. })
                ));
            }
        }
    }
}
