//! SHA-256 digests and the canonical JSON encoding they are computed over.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

/// 32-byte SHA-256 digest, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First eight bytes as hex, used where a short tag is enough.
    pub fn short_hex(&self) -> String {
        hex::encode(&self.0[..8])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short_hex())
    }
}

impl FromStr for Digest {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn sha256(bytes: impl AsRef<[u8]>) -> Digest {
    Digest(Sha256::digest(bytes.as_ref()).into())
}

/// Hash of `prev || bytes`, used to chain log lines.
pub fn chain(prev: &Digest, bytes: impl AsRef<[u8]>) -> Digest {
    let mut h = Sha256::new();
    h.update(prev.0);
    h.update(bytes.as_ref());
    Digest(h.finalize().into())
}

/// UTF-8 JSON with lexicographically sorted object keys and no insignificant
/// whitespace.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Map is BTreeMap-backed (no `preserve_order`), so the round
    // trip through Value sorts keys at every depth.
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string(&v).expect("JSON value renders")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn canonical_json_sorts_keys_without_whitespace() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: &'static str,
            mid: Option<u8>,
        }
        let s = S { zeta: 1, alpha: "a b", mid: None };
        assert_eq!(canonical_json(&s), r#"{"alpha":"a b","mid":null,"zeta":1}"#);
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = sha256("x");
        let parsed: Digest = d.to_hex().parse().unwrap();
        assert_eq!(parsed, d);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Digest>(&json).unwrap(), d);
    }
}
