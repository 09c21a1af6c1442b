use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::params::ProtocolParams;
use crate::quantum::{Basis, Bit};

/// Public announcements of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub index: u64,
    pub detected: bool,
    pub basis_b: Basis,
    /// Alice's basis, announced only for detected rounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_a: Option<Basis>,
}

impl RoundRecord {
    /// Both bases when the round was detected.
    pub fn bases(&self) -> Option<(Basis, Basis)> {
        self.basis_a.map(|a| (a, self.basis_b))
    }

    pub fn agreed_basis(&self) -> Option<Basis> {
        self.bases().and_then(|(a, b)| (a == b).then_some(a))
    }
}

/// Order in which a round's announcements are made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnouncementOrder {
    /// Prepare-and-measure: Bob announces (detected, basis), then Alice her basis on detection.
    BobThenAlice,
    /// Entanglement picture: detection first, then both bases on detection.
    DetectionThenBases,
}

/// The public record `I`: parameters plus per-round announcements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: ProtocolParams,
    pub order: AnnouncementOrder,
    pub rounds: Vec<RoundRecord>,
}

impl Transcript {
    pub fn new(params: ProtocolParams, order: AnnouncementOrder) -> Self {
        Self { params, order, rounds: Vec::new() }
    }

    /// The view Eve gets before round `rounds.len() + 1`.
    pub fn prefix(&self) -> TranscriptPrefix<'_> {
        TranscriptPrefix { params: &self.params, rounds: &self.rounds }
    }

    pub fn detected_count(&self) -> u64 {
        self.rounds.iter().filter(|r| r.detected).count() as u64
    }

    /// Detected rounds with mismatched bases.
    pub fn mismatched_count(&self) -> u64 {
        self.rounds.iter().filter(|r| r.detected && r.agreed_basis().is_none()).count() as u64
    }

    pub(crate) fn push(&mut self, record: RoundRecord) {
        debug_assert_eq!(record.index, self.rounds.len() as u64 + 1);
        debug_assert_eq!(record.detected, record.basis_a.is_some());
        self.rounds.push(record);
    }
}

/// Announcements of rounds `1..i-1`, as seen by Eve before round `i`.
#[derive(Debug, Clone, Copy)]
pub struct TranscriptPrefix<'a> {
    pub params: &'a ProtocolParams,
    pub rounds: &'a [RoundRecord],
}

impl<'a> TranscriptPrefix<'a> {
    /// The round about to be played.
    pub fn next_round(&self) -> u64 {
        self.rounds.len() as u64 + 1
    }

    /// Detected rounds, most recent first.
    pub fn detected_rev(&self) -> impl Iterator<Item = &'a RoundRecord> + 'a {
        self.rounds.iter().rev().filter(|r| r.detected)
    }
}

/// A bit string stored one bit per byte; serialized as `{"len", "hex"}` with
/// bits packed MSB-first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<Bit>);

impl BitString {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: Vec<Bit>) -> Self {
        Self(bits)
    }

    pub fn push(&mut self, bit: Bit) {
        self.0.push(bit);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    /// Hamming weight of `self ⊕ other`. Panics on length mismatch.
    pub fn xor_weight(&self, other: &BitString) -> u64 {
        assert_eq!(self.len(), other.len(), "xor of bit strings of different length");
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count() as u64
    }

    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .0
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, b)| acc | ((*b as u8) << (7 - i))))
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(len: usize, s: &str) -> Result<Self, String> {
        let bytes = hex::decode(s).map_err(|e| e.to_string())?;
        if bytes.len() != len.div_ceil(8) {
            return Err(format!("hex payload of {} bytes does not hold {len} bits", bytes.len()));
        }
        let bits = (0..len).map(|i| Bit::from_bool((bytes[i / 8] >> (7 - i % 8)) & 1 == 1)).collect();
        Ok(Self(bits))
    }
}

impl FromIterator<Bit> for BitString {
    fn from_iter<I: IntoIterator<Item = Bit>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Serialize, Deserialize)]
struct HexBits {
    len: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HexBits { len: self.len(), hex: self.to_hex() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = HexBits::deserialize(deserializer)?;
        BitString::from_hex(raw.len, &raw.hex).map_err(serde::de::Error::custom)
    }
}

/// Sifted keys, in detection order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SiftedData {
    pub s_az: BitString,
    pub s_bz: BitString,
    pub s_ax: BitString,
    pub s_bx: BitString,
    pub n_z: u64,
    pub n_x: u64,
}

impl SiftedData {
    pub(crate) fn push(&mut self, basis: Basis, alice: Bit, bob: Bit) {
        match basis {
            Basis::Z => {
                self.s_az.push(alice);
                self.s_bz.push(bob);
                self.n_z += 1;
            }
            Basis::X => {
                self.s_ax.push(alice);
                self.s_bx.push(bob);
                self.n_x += 1;
            }
        }
    }

    /// `wt(s_ax ⊕ s_bx)`.
    pub fn x_errors(&self) -> u64 {
        self.s_ax.xor_weight(&self.s_bx)
    }

    /// `wt(s_az ⊕ s_bz)`; not public in the protocol, useful for diagnostics.
    pub fn z_errors(&self) -> u64 {
        self.s_az.xor_weight(&self.s_bz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bitstring_hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..100)) {
            let s: BitString = bits.into_iter().map(Bit::from_bool).collect();
            let back = BitString::from_hex(s.len(), &s.to_hex()).unwrap();
            prop_assert_eq!(&back, &s);
            let json = serde_json::to_string(&s).unwrap();
            prop_assert_eq!(serde_json::from_str::<BitString>(&json).unwrap(), s);
        }
    }

    #[test]
    fn hex_layout_is_msb_first() {
        let s: BitString = [1, 0, 1, 1, 0, 0, 0, 0, 1].into_iter().map(|b| Bit::from_bool(b == 1)).collect();
        assert_eq!(s.to_hex(), "b080");
        assert!(BitString::from_hex(20, "b080").is_err());
    }

    #[test]
    fn xor_weight_counts_mismatches() {
        let a: BitString = [0, 1, 1, 0].into_iter().map(|b| Bit::from_bool(b == 1)).collect();
        let b: BitString = [1, 1, 0, 0].into_iter().map(|b| Bit::from_bool(b == 1)).collect();
        assert_eq!(a.xor_weight(&b), 2);
    }
}
