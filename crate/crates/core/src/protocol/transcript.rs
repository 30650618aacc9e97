//! Public-channel messages.
//!
//! Serialized as JSON lines, one record per message, in the order sent:
//!
//! ```text
//! {"msg":"shared_bit","l_alpha":[..],"f_alpha":"<l>,<m>:<hex>","masked_s":0}
//! {"msg":"labels","l0":[..],"l1":[..]}
//! {"msg":"strings","f0":"<l>,<m>:<hex>","f1":"..","ct_first":"<k>:<hex>","ct_second":"<k>:<hex>"}
//! ```
//!
//! Index sets are strictly ascending u32 arrays. Output is byte-identical
//! for identical runs.

use serde::{Deserialize, Deserializer, Serialize};

use crate::bits::BitVec;
use crate::error::FormatError;
use crate::hash::LinearHash;

/// A strictly ascending set of coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<u32>);

impl IndexSet {
    pub fn from_sorted(indices: Vec<u32>) -> Result<Self, FormatError> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FormatError::UnsortedIndices);
        }
        Ok(Self(indices))
    }

    /// Sorts `indices`; they must be distinct.
    pub fn from_unsorted(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]), "duplicate index");
        Self(indices)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<u32>::deserialize(deserializer)?;
        IndexSet::from_sorted(raw).map_err(serde::de::Error::custom)
    }
}

/// Bob → Alice: L_α, F_α and K_α ⊕ S.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedBitMessage {
    pub l_alpha: IndexSet,
    pub f_alpha: LinearHash,
    #[serde(with = "bit_as_int")]
    pub masked_s: bool,
}

/// Bob → Alice: (L_0, L_1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMessage {
    pub l0: IndexSet,
    pub l1: IndexSet,
}

impl LabelMessage {
    pub fn set(&self, position: bool) -> &IndexSet {
        if position {
            &self.l1
        } else {
            &self.l0
        }
    }

    /// L_0 ∩ L_1; empty unless B reuses coordinates of G.
    pub fn shared(&self) -> IndexSet {
        self.l0.intersection(&self.l1)
    }
}

/// Alice → Bob: the two hashes and two ciphertexts, in sending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptedStrings {
    pub f0: LinearHash,
    pub f1: LinearHash,
    pub ct_first: BitVec,
    pub ct_second: BitVec,
}

impl EncryptedStrings {
    /// Ciphertext at `position` (false = first), keyed by F_position(X_{L_position}).
    pub fn ciphertext(&self, position: bool) -> &BitVec {
        if position {
            &self.ct_second
        } else {
            &self.ct_first
        }
    }

    pub fn hash(&self, position: bool) -> &LinearHash {
        if position {
            &self.f1
        } else {
            &self.f0
        }
    }
}

/// Everything sent on the public channel, as seen by all three parties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub shared_bit: SharedBitMessage,
    pub labels: LabelMessage,
    pub strings: EncryptedStrings,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
enum Record {
    SharedBit(SharedBitMessage),
    Labels(LabelMessage),
    Strings(EncryptedStrings),
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let records = [
            Record::SharedBit(self.shared_bit.clone()),
            Record::Labels(self.labels.clone()),
            Record::Strings(self.strings.clone()),
        ];
        let mut out = String::new();
        for record in &records {
            out.push_str(&serde_json::to_string(record).expect("transcript records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, FormatError> {
        let bad = |e: String| FormatError::Transcript(e);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<Record, FormatError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {what} record")))?;
            serde_json::from_str(line).map_err(|e| bad(e.to_string()))
        };
        let Record::SharedBit(shared_bit) = next("shared_bit")? else {
            return Err(bad("expected shared_bit record first".into()));
        };
        let Record::Labels(labels) = next("labels")? else {
            return Err(bad("expected labels record second".into()));
        };
        let Record::Strings(strings) = next("strings")? else {
            return Err(bad("expected strings record third".into()));
        };
        if lines.next().is_some() {
            return Err(bad("trailing records".into()));
        }
        Ok(Self {
            shared_bit,
            labels,
            strings,
        })
    }

    /// Public-channel load in bits: 32 per index, l·m per hash matrix, one
    /// per string bit.
    pub fn size_bits(&self) -> u64 {
        let idx = |s: &IndexSet| 32 * s.len() as u64;
        let mat = |h: &LinearHash| (h.rows() * h.cols()) as u64;
        idx(&self.shared_bit.l_alpha)
            + mat(&self.shared_bit.f_alpha)
            + 1
            + idx(&self.labels.l0)
            + idx(&self.labels.l1)
            + mat(&self.strings.f0)
            + mat(&self.strings.f1)
            + (self.strings.ct_first.len() + self.strings.ct_second.len()) as u64
    }
}

mod bit_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(serde::de::Error::custom(format!("bit must be 0 or 1, got {v}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitVec {
        BitVec::from_bools(s.chars().map(|c| c == '1'))
    }

    fn tiny() -> Transcript {
        let h = |rows: &[&str]| LinearHash::from_rows(&rows.iter().map(|r| bits(r)).collect::<Vec<_>>()).unwrap();
        Transcript {
            shared_bit: SharedBitMessage {
                l_alpha: IndexSet::from_sorted(vec![1, 4]).unwrap(),
                f_alpha: h(&["11"]),
                masked_s: true,
            },
            labels: LabelMessage {
                l0: IndexSet::from_sorted(vec![0, 2, 3]).unwrap(),
                l1: IndexSet::from_sorted(vec![5, 6, 7]).unwrap(),
            },
            strings: EncryptedStrings {
                f0: h(&["101", "011"]),
                f1: h(&["111", "001"]),
                ct_first: bits("10"),
                ct_second: bits("01"),
            },
        }
    }

    #[test]
    fn exact_wire_format() {
        let expected = concat!(
            "{\"msg\":\"shared_bit\",\"l_alpha\":[1,4],\"f_alpha\":\"1,2:c0\",\"masked_s\":1}\n",
            "{\"msg\":\"labels\",\"l0\":[0,2,3],\"l1\":[5,6,7]}\n",
            "{\"msg\":\"strings\",\"f0\":\"2,3:ac\",\"f1\":\"2,3:e4\",\"ct_first\":\"2:80\",\"ct_second\":\"2:40\"}\n",
        );
        assert_eq!(tiny().to_jsonl(), expected);
        assert_eq!(Transcript::from_jsonl(expected).unwrap(), tiny());
    }

    #[test]
    fn rejects_unsorted_indices_and_wrong_order() {
        let text = tiny().to_jsonl().replace("[0,2,3]", "[2,0,3]");
        assert!(Transcript::from_jsonl(&text).is_err());
        let text = tiny().to_jsonl();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(0, 1);
        assert!(Transcript::from_jsonl(&lines.join("\n")).is_err());
        let text = tiny().to_jsonl().replace("\"masked_s\":1", "\"masked_s\":2");
        assert!(Transcript::from_jsonl(&text).is_err());
    }

    #[test]
    fn size_accounting() {
        // 2·32 + 2 + 1 + 6·32 + 6 + 6 + 4
        assert_eq!(tiny().size_bits(), 64 + 2 + 1 + 192 + 6 + 6 + 4);
    }

    #[test]
    fn set_algebra() {
        let a = IndexSet::from_unsorted(vec![5, 1, 3]);
        let b = IndexSet::from_sorted(vec![3, 4, 5]).unwrap();
        assert_eq!(a.intersection(&b).as_slice(), &[3, 5]);
        assert_eq!(a.difference(&b).as_slice(), &[1]);
    }
}
