//! Cyclic-group and pairing abstraction.
//!
//! Two interchangeable backends share one element and scalar representation:
//!
//! * **mock** — every element is stored as its discrete log relative to `g`,
//!   so the group law is exponent addition and the (symmetric) pairing is
//!   exponent multiplication. This makes exhaustive brute-force oracles
//!   possible at toy scale, which no real group permits.
//! * **production** — a prime-order subgroup of `Z_p^*` with real modular
//!   arithmetic. No pairing is available on this backend; operations that
//!   need one return [`Error::PairingUnavailable`].
//!
//! Scalars are exponents in `Z_q` and are reduced modulo `q` at construction.
//! Serialization is fixed-width big-endian; the element width is declared by
//! the backend and recorded in every serialized artifact's header.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::Zero;
use rand::RngCore;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::Result;

/// Parameter scale for a group context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityProfile {
    /// p=23, q=11 — small enough for exhaustive search.
    Toy,
    /// 64-bit q — fast, collision-free at simulation scale.
    Test,
    /// 1024-bit p, 160-bit q.
    Production,
}

impl SecurityProfile {
    pub fn as_str(&self) -> &'static str {
        match self {
            SecurityProfile::Toy => "toy",
            SecurityProfile::Test => "test",
            SecurityProfile::Production => "production",
        }
    }
}

impl FromStr for SecurityProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(SecurityProfile::Toy),
            "test" => Ok(SecurityProfile::Test),
            "production" => Ok(SecurityProfile::Production),
            other => Err(Error::UnsupportedProfile(other.to_string())),
        }
    }
}

/// Which of the two backends a context (or element) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendId {
    Mock,
    Production,
}

impl BackendId {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendId::Mock => "mock",
            BackendId::Production => "production",
        }
    }
}

impl FromStr for BackendId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(BackendId::Mock),
            "production" => Ok(BackendId::Production),
            other => Err(Error::BadEncoding(format!("unknown backend {other:?}"))),
        }
    }
}

/// An exponent in `Z_q`, reduced modulo `q` at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(BigUint::default())
    }

    pub fn is_zero(&self) -> bool {
        self.0 == BigUint::default()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Low 64 bits, for small values like votes and counts.
    pub fn low_u64(&self) -> u64 {
        let digits = self.0.to_u64_digits();
        digits.first().copied().unwrap_or(0)
    }

    /// Big-endian encoding padded to `width` bytes.
    pub fn to_padded_bytes(&self, width: usize) -> Vec<u8> {
        let raw = self.0.to_bytes_be();
        assert!(raw.len() <= width, "scalar wider than requested width");
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(self.0.to_bytes_be()))
    }
}

/// An opaque element of `G_q`. In the mock backend the value is the discrete
/// log relative to `g`; in the production backend it is a residue mod `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    backend: BackendId,
    value: BigUint,
}

/// An element of the pairing target group `G_T` (mock backend only),
/// represented as the exponent of `e(g,g)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetElement(BigUint);

/// The shared group parameters: order `q`, generators `g` and `h`, the
/// backend, and (for the production backend) the modulus `p`.
///
/// Immutable after setup; all operations are pure functions, so a context can
/// be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupContext {
    profile: SecurityProfile,
    backend: BackendId,
    /// Modulus of the ambient field; `None` for the mock backend.
    modulus: Option<BigUint>,
    order: BigUint,
    g: GroupElement,
    h: GroupElement,
    pairing_enabled: bool,
}

// Fixed test-profile subgroup: q = nextprime(2^63), p = 6q + 1 (prime),
// g = 2^6 mod p (order q).
const TEST_Q: u64 = 9_223_372_036_854_775_837;
const TEST_P: u128 = 55_340_232_221_128_655_023;
const TEST_G: u64 = 64;

// Fixed production-profile subgroup (1024-bit p, 160-bit q), generated by a
// publicly recomputable procedure: with stream(i) = SHA-256("veribooth
// production group v1" || BE32(i)) concatenated, q is the next prime after
// the first 160 stream bits (top bit forced), p = k*q + 1 for the first k at
// or above the next 864 stream bits (top bit forced, even) that makes p a
// 1024-bit prime, and g = 2^((p-1)/q) mod p.
const PROD_Q_HEX: &str = "972d312f86fd900ef41abdb0ba7365110f36975d";
const PROD_P_HEX: &str = "8696dff6e274bb55a7b859de815ca5124740647eb418880020cb5aed7659cb80e7a7bd3814329e6beeff5fc867728922e03b8fc6caec67427dbb29fb464c3e58bc117ecd46be50ff049c97bb1680ffdd9cfafcb92b55e57a814281e8fea502200241fd6d6fb287821367982bf8f938e61bc09cc5a524591446f12f7ca708892b";
const PROD_G_HEX: &str = "61aa98ba5632dfc4fbb1005424e84dedec5973d50d1f2a7c51fb2472397b259a2c70f600682d566145e1856c2157ddcfc29f3674fe63dd05602aad58f5ac316b6f9ceed9730bb699e382385e95507b1c6ad969ef2cf5299021470ac72276f768d5929113396e46bbfaeb35deb63b2c47277b2aafcded94a655f94ca324111a13";

fn biguint_from_hex(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex constant")
}

impl GroupContext {
    /// Sets up the production (modular-subgroup) backend.
    ///
    /// `h` is derived from `g` by hashing the public seed into the group
    /// (cofactor clearing), so nobody knows `log_g h`. The toy profile is
    /// fixed to p=23, q=11, g=2, h=13.
    pub fn setup_group(profile: SecurityProfile, seed: &[u8]) -> Result<GroupContext> {
        Self::setup(profile, BackendId::Production, seed)
    }

    /// Sets up the discrete-log-transparent mock backend with the same group
    /// order as the corresponding production profile. The mock supports the
    /// symmetric pairing.
    pub fn setup_mock(profile: SecurityProfile, seed: &[u8]) -> Result<GroupContext> {
        Self::setup(profile, BackendId::Mock, seed)
    }

    pub fn setup(profile: SecurityProfile, backend: BackendId, seed: &[u8]) -> Result<GroupContext> {
        if seed.is_empty() {
            return Err(Error::EmptySeed);
        }
        let (modulus, order, g_value) = match profile {
            SecurityProfile::Toy => (
                BigUint::from(23u32),
                BigUint::from(11u32),
                BigUint::from(2u32),
            ),
            SecurityProfile::Test => (
                BigUint::from(TEST_P),
                BigUint::from(TEST_Q),
                BigUint::from(TEST_G),
            ),
            SecurityProfile::Production => (
                biguint_from_hex(PROD_P_HEX),
                biguint_from_hex(PROD_Q_HEX),
                biguint_from_hex(PROD_G_HEX),
            ),
        };

        match backend {
            BackendId::Mock => {
                let g = GroupElement {
                    backend,
                    value: BigUint::from(1u32),
                };
                // log_g h is the element representation itself; it stays
                // inside the context and is never exposed.
                let h_exp = derive_mock_h_exponent(&order, seed);
                let h = GroupElement {
                    backend,
                    value: h_exp,
                };
                Ok(GroupContext {
                    profile,
                    backend,
                    modulus: None,
                    order,
                    g,
                    h,
                    pairing_enabled: true,
                })
            }
            BackendId::Production => {
                let g = GroupElement {
                    backend,
                    value: g_value,
                };
                let h_value = match profile {
                    SecurityProfile::Toy => BigUint::from(13u32),
                    _ => derive_h_by_cofactor_clearing(&modulus, &order, seed),
                };
                let h = GroupElement {
                    backend,
                    value: h_value,
                };
                Ok(GroupContext {
                    profile,
                    backend,
                    modulus: Some(modulus),
                    order,
                    g,
                    h,
                    pairing_enabled: false,
                })
            }
        }
    }

    pub fn profile(&self) -> SecurityProfile {
        self.profile
    }

    pub fn backend(&self) -> BackendId {
        self.backend
    }

    pub fn pairing_enabled(&self) -> bool {
        self.pairing_enabled
    }

    /// The group order `q`.
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn generator(&self) -> &GroupElement {
        &self.g
    }

    /// The second generator `h` used for commitment randomness.
    pub fn second_generator(&self) -> &GroupElement {
        &self.h
    }

    pub fn identity(&self) -> GroupElement {
        match self.backend {
            BackendId::Mock => GroupElement {
                backend: self.backend,
                value: BigUint::default(),
            },
            BackendId::Production => GroupElement {
                backend: self.backend,
                value: BigUint::from(1u32),
            },
        }
    }

    // ---- scalar arithmetic -------------------------------------------------

    pub fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar(BigUint::from(v) % &self.order)
    }

    pub fn scalar_from_biguint(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.order)
    }

    /// Interprets big-endian bytes as an integer and reduces modulo `q`.
    pub fn scalar_reduce_bytes(&self, bytes: &[u8]) -> Scalar {
        Scalar(BigUint::from_bytes_be(bytes) % &self.order)
    }

    /// Uniform scalar in `[0, q)` by rejection sampling.
    pub fn random_scalar<R: RngCore>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.order))
    }

    /// Uniform nonzero scalar.
    pub fn random_nonzero_scalar<R: RngCore>(&self, rng: &mut R) -> Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.order)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.order - &b.0) % &self.order)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.order)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        if a.is_zero() {
            Scalar::zero()
        } else {
            Scalar(&self.order - &a.0)
        }
    }

    /// Multiplicative inverse in `Z_q`; errors on zero.
    pub fn scalar_inv(&self, a: &Scalar) -> Result<Scalar> {
        mod_inverse(&a.0, &self.order)
            .map(Scalar)
            .ok_or(Error::ZeroDenominator)
    }

    // ---- group operations --------------------------------------------------

    /// `base^k`; the identity when `k = 0`.
    pub fn exp(&self, base: &GroupElement, k: &Scalar) -> GroupElement {
        debug_assert_eq!(base.backend, self.backend);
        match self.backend {
            BackendId::Mock => GroupElement {
                backend: self.backend,
                value: (&base.value * &k.0) % &self.order,
            },
            BackendId::Production => {
                let p = self.modulus.as_ref().expect("production has a modulus");
                GroupElement {
                    backend: self.backend,
                    value: base.value.modpow(&k.0, p),
                }
            }
        }
    }

    /// `g^k`.
    pub fn exp_g(&self, k: &Scalar) -> GroupElement {
        self.exp(&self.g, k)
    }

    /// `h^k`.
    pub fn exp_h(&self, k: &Scalar) -> GroupElement {
        self.exp(&self.h, k)
    }

    /// The group law `a * b`.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        debug_assert_eq!(a.backend, self.backend);
        debug_assert_eq!(b.backend, self.backend);
        match self.backend {
            BackendId::Mock => GroupElement {
                backend: self.backend,
                value: (&a.value + &b.value) % &self.order,
            },
            BackendId::Production => {
                let p = self.modulus.as_ref().expect("production has a modulus");
                GroupElement {
                    backend: self.backend,
                    value: (&a.value * &b.value) % p,
                }
            }
        }
    }

    /// `a * b^{-1}`.
    pub fn div(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        // b^{q-1} = b^{-1} in a group of prime order q.
        let inv = self.exp(b, &Scalar(&self.order - BigUint::from(1u32)));
        self.mul(a, &inv)
    }

    /// Whether `e` is a valid member of `G_q` for this context.
    pub fn is_member(&self, e: &GroupElement) -> bool {
        if e.backend != self.backend {
            return false;
        }
        match self.backend {
            BackendId::Mock => e.value < self.order,
            BackendId::Production => {
                let p = self.modulus.as_ref().expect("production has a modulus");
                if e.value.is_zero() || e.value >= *p {
                    return false;
                }
                e.value.modpow(&self.order, p) == BigUint::from(1u32)
            }
        }
    }

    /// Checks membership, for callers that must reject foreign elements.
    pub fn require_member(&self, e: &GroupElement) -> Result<()> {
        if e.backend != self.backend {
            return Err(Error::ContextMismatch);
        }
        if self.is_member(e) {
            Ok(())
        } else {
            Err(Error::NotInGroup)
        }
    }

    // ---- pairing -----------------------------------------------------------

    /// The symmetric pairing `e(a, b)`. Mock backend only: the element
    /// representations are exponents, so `e(g^a, g^b) = e(g,g)^{ab}`.
    pub fn pair(&self, a: &GroupElement, b: &GroupElement) -> Result<TargetElement> {
        if !self.pairing_enabled {
            return Err(Error::PairingUnavailable);
        }
        debug_assert_eq!(a.backend, BackendId::Mock);
        debug_assert_eq!(b.backend, BackendId::Mock);
        Ok(TargetElement((&a.value * &b.value) % &self.order))
    }

    /// `e(g, g)`, the generator of `G_T`.
    pub fn pair_gg(&self) -> Result<TargetElement> {
        self.pair(&self.g, &self.g)
    }

    pub fn target_identity(&self) -> TargetElement {
        TargetElement(BigUint::default())
    }

    pub fn target_mul(&self, a: &TargetElement, b: &TargetElement) -> TargetElement {
        TargetElement((&a.0 + &b.0) % &self.order)
    }

    pub fn target_exp(&self, t: &TargetElement, k: &Scalar) -> TargetElement {
        TargetElement((&t.0 * &k.0) % &self.order)
    }

    // ---- serialization -----------------------------------------------------

    /// Fixed width of a serialized scalar: `ceil(log2 q / 8)` bytes.
    pub fn scalar_width(&self) -> usize {
        ((self.order.bits() as usize) + 7) / 8
    }

    /// Fixed width of a serialized group element, declared by the backend.
    /// The production backend declares two field-coordinate widths per
    /// element; the mock element is an exponent.
    pub fn element_width(&self) -> usize {
        match self.backend {
            BackendId::Mock => self.scalar_width(),
            BackendId::Production => {
                let p = self.modulus.as_ref().expect("production has a modulus");
                2 * (((p.bits() as usize) + 7) / 8)
            }
        }
    }

    pub fn target_width(&self) -> usize {
        self.scalar_width()
    }

    pub fn scalar_to_bytes(&self, s: &Scalar) -> Vec<u8> {
        s.to_padded_bytes(self.scalar_width())
    }

    /// Parses a fixed-width scalar; the value must already be below `q`.
    pub fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Scalar> {
        if bytes.len() != self.scalar_width() {
            return Err(Error::BadEncoding(format!(
                "scalar must be {} bytes, got {}",
                self.scalar_width(),
                bytes.len()
            )));
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.order {
            return Err(Error::ScalarOutOfRange);
        }
        Ok(Scalar(v))
    }

    pub fn element_to_bytes(&self, e: &GroupElement) -> Vec<u8> {
        debug_assert_eq!(e.backend, self.backend);
        let width = self.element_width();
        let raw = e.value.to_bytes_be();
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    /// Parses a fixed-width element and checks group membership.
    pub fn element_from_bytes(&self, bytes: &[u8]) -> Result<GroupElement> {
        if bytes.len() != self.element_width() {
            return Err(Error::BadEncoding(format!(
                "element must be {} bytes, got {}",
                self.element_width(),
                bytes.len()
            )));
        }
        let e = GroupElement {
            backend: self.backend,
            value: BigUint::from_bytes_be(bytes),
        };
        self.require_member(&e)?;
        Ok(e)
    }

    pub fn target_to_bytes(&self, t: &TargetElement) -> Vec<u8> {
        let width = self.target_width();
        let raw = t.0.to_bytes_be();
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    pub fn target_from_bytes(&self, bytes: &[u8]) -> Result<TargetElement> {
        if bytes.len() != self.target_width() {
            return Err(Error::BadEncoding(format!(
                "target element must be {} bytes, got {}",
                self.target_width(),
                bytes.len()
            )));
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.order {
            return Err(Error::ScalarOutOfRange);
        }
        Ok(TargetElement(v))
    }

    /// Hashes domain-separated byte strings to a scalar.
    pub fn hash_to_scalar(&self, domain: &str, parts: &[&[u8]]) -> Scalar {
        let mut hasher = Sha256::new();
        hasher.update(b"veribooth/h2s/v1");
        hasher.update(domain.as_bytes());
        for part in parts {
            hasher.update((part.len() as u64).to_be_bytes());
            hasher.update(part);
        }
        let digest = hasher.finalize();
        // Expand past the scalar width so the reduction bias is negligible.
        let want = self.scalar_width() + 16;
        let mut stream = Vec::with_capacity(want + 32);
        let mut counter = 0u32;
        while stream.len() < want {
            let mut block = Sha256::new();
            block.update(b"veribooth/h2s/expand");
            block.update(digest);
            block.update(counter.to_be_bytes());
            stream.extend_from_slice(&block.finalize());
            counter += 1;
        }
        self.scalar_reduce_bytes(&stream[..want])
    }
}

/// Extended-Euclid modular inverse; `None` when gcd(a, m) != 1.
fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    if a.is_zero() {
        return None;
    }
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let ext = a.extended_gcd(&m);
    if ext.gcd != BigInt::from(1) {
        return None;
    }
    let mut inv = ext.x % &m;
    if inv.sign() == Sign::Minus {
        inv += &m;
    }
    Some(inv.to_biguint().expect("non-negative after reduction"))
}

/// Nothing-up-my-sleeve second generator for the modular backend: hash the
/// seed to a field element and clear the cofactor, retrying until the result
/// lands in `G_q \ {1}`.
fn derive_h_by_cofactor_clearing(p: &BigUint, q: &BigUint, seed: &[u8]) -> BigUint {
    let cofactor = (p - BigUint::from(1u32)) / q;
    let p_width = ((p.bits() as usize) + 7) / 8;
    let mut counter = 0u32;
    loop {
        let t = hash_stream_to_int(seed, "h2g", counter, p_width + 16) % p;
        counter += 1;
        if t.is_zero() {
            continue;
        }
        let h = t.modpow(&cofactor, p);
        if h != BigUint::from(1u32) {
            return h;
        }
    }
}

/// Mock-backend `h`: a nonzero exponent derived from the seed. Any nonzero
/// exponent generates the full order-q group.
fn derive_mock_h_exponent(q: &BigUint, seed: &[u8]) -> BigUint {
    let q_width = ((q.bits() as usize) + 7) / 8;
    let mut counter = 0u32;
    loop {
        let e = hash_stream_to_int(seed, "mock-h", counter, q_width + 16) % q;
        counter += 1;
        if !e.is_zero() {
            return e;
        }
    }
}

fn hash_stream_to_int(seed: &[u8], label: &str, counter: u32, nbytes: usize) -> BigUint {
    let mut stream = Vec::with_capacity(nbytes + 32);
    let mut block_idx = 0u32;
    while stream.len() < nbytes {
        let mut hasher = Sha256::new();
        hasher.update(b"veribooth/h2g/v1");
        hasher.update(label.as_bytes());
        hasher.update((seed.len() as u64).to_be_bytes());
        hasher.update(seed);
        hasher.update(counter.to_be_bytes());
        hasher.update(block_idx.to_be_bytes());
        stream.extend_from_slice(&hasher.finalize());
        block_idx += 1;
    }
    BigUint::from_bytes_be(&stream[..nbytes])
}

// ---- serde (hex-string representations for state files) --------------------

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(self.0.to_bytes_be()))
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        Ok(Scalar(BigUint::from_bytes_be(&bytes)))
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let tag = match self.backend {
            BackendId::Mock => "m",
            BackendId::Production => "p",
        };
        serializer.serialize_str(&format!("{}:{}", tag, hex::encode(self.value.to_bytes_be())))
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let (tag, hexpart) = s
            .split_once(':')
            .ok_or_else(|| D::Error::custom("expected <backend>:<hex>"))?;
        let backend = match tag {
            "m" => BackendId::Mock,
            "p" => BackendId::Production,
            _ => return Err(D::Error::custom("unknown backend tag")),
        };
        let bytes = hex::decode(hexpart).map_err(D::Error::custom)?;
        Ok(GroupElement {
            backend,
            value: BigUint::from_bytes_be(&bytes),
        })
    }
}

impl Serialize for TargetElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(self.0.to_bytes_be()))
    }
}

impl<'de> Deserialize<'de> for TargetElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        Ok(TargetElement(BigUint::from_bytes_be(&bytes)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    #[test]
    fn toy_setup_matches_fixed_parameters() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        assert_eq!(*ctx.order(), BigUint::from(11u32));
        assert_eq!(ctx.generator().value, BigUint::from(2u32));
        assert_eq!(ctx.second_generator().value, BigUint::from(13u32));
        // h is in <g>: confirm by exhaustive exponentiation (13 = 2^7 mod 23)
        let mut found = None;
        for k in 0u64..11 {
            if ctx.exp_g(&ctx.scalar_from_u64(k)) == *ctx.second_generator() {
                found = Some(k);
            }
        }
        assert_eq!(found, Some(7));
    }

    #[test]
    fn setup_is_deterministic() {
        let a = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let b = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        assert_eq!(a, b);
        let c = GroupContext::setup_mock(SecurityProfile::Test, b"s1").unwrap();
        let d = GroupContext::setup_mock(SecurityProfile::Test, b"s1").unwrap();
        assert_eq!(c, d);
        let e = GroupContext::setup_mock(SecurityProfile::Test, b"s2").unwrap();
        assert_ne!(c.second_generator(), e.second_generator());
    }

    #[test]
    fn empty_seed_rejected() {
        assert!(matches!(
            GroupContext::setup_group(SecurityProfile::Toy, b""),
            Err(Error::EmptySeed)
        ));
    }

    #[test]
    fn generators_have_exact_order_q() {
        for profile in [SecurityProfile::Toy, SecurityProfile::Test] {
            for backend in [BackendId::Mock, BackendId::Production] {
                let ctx = GroupContext::setup(profile, backend, b"seed").unwrap();
                let q = Scalar(ctx.order().clone() % ctx.order()); // zero
                assert!(q.is_zero());
                let gq = ctx.exp_g(&ctx.scalar_from_biguint(ctx.order().clone()));
                assert_eq!(gq, ctx.identity());
                let hq = ctx.exp_h(&ctx.scalar_from_biguint(ctx.order().clone()));
                assert_eq!(hq, ctx.identity());
                assert_ne!(*ctx.generator(), ctx.identity());
                assert_ne!(*ctx.second_generator(), ctx.identity());
            }
        }
    }

    #[test]
    fn production_profile_parameters_check_out() {
        let ctx = GroupContext::setup_group(SecurityProfile::Production, b"seed").unwrap();
        assert_eq!(ctx.order().bits(), 160);
        assert_eq!(ctx.scalar_width(), 20);
        assert_eq!(ctx.element_width(), 256);
        let gq = ctx.exp_g(&ctx.scalar_from_biguint(ctx.order().clone()));
        assert_eq!(gq, ctx.identity());
        assert!(ctx.is_member(ctx.second_generator()));
    }

    #[test]
    fn exp_examples_in_toy_group() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let e = ctx.exp_g(&ctx.scalar_from_u64(3));
        assert_eq!(e.value, BigUint::from(8u32));
        assert_eq!(ctx.exp_g(&Scalar::zero()), ctx.identity());
        assert_eq!(ctx.exp_g(&ctx.scalar_from_u64(11)), ctx.identity());
    }

    #[test]
    fn mock_pairing_multiplies_exponents() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Toy, b"x").unwrap();
        let a = ctx.exp_g(&ctx.scalar_from_u64(2));
        let b = ctx.exp_g(&ctx.scalar_from_u64(6));
        let t = ctx.pair(&a, &b).unwrap();
        // exponents multiply mod 11: 2*6 = 12 = 1
        let expected = ctx.target_exp(&ctx.pair_gg().unwrap(), &ctx.scalar_from_u64(12));
        assert_eq!(t, expected);
        assert_eq!(t, ctx.target_exp(&ctx.pair_gg().unwrap(), &ctx.scalar_from_u64(1)));
        // identity maps to target identity
        let t0 = ctx.pair(&ctx.identity(), &b).unwrap();
        assert_eq!(t0, ctx.target_identity());
        // symmetry
        assert_eq!(ctx.pair(&a, &b).unwrap(), ctx.pair(&b, &a).unwrap());
    }

    #[test]
    fn pairing_unavailable_on_production_backend() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let g = ctx.generator().clone();
        assert!(matches!(ctx.pair(&g, &g), Err(Error::PairingUnavailable)));
    }

    #[test]
    fn exp_composes_like_scalar_multiplication() {
        // randomized property: exp(exp(g,a),b) == exp(g, a*b mod q), >= 1000 cases
        for backend in [BackendId::Mock, BackendId::Production] {
            let ctx = GroupContext::setup(SecurityProfile::Test, backend, b"prop").unwrap();
            let mut rng = derive_rng(b"prop-exp", backend.as_str());
            for _ in 0..1000 {
                let a = ctx.random_scalar(&mut rng);
                let b = ctx.random_scalar(&mut rng);
                let lhs = ctx.exp(&ctx.exp_g(&a), &b);
                let rhs = ctx.exp_g(&ctx.scalar_mul(&a, &b));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn bilinearity_holds_on_mock() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Test, b"bilinear").unwrap();
        let mut rng = derive_rng(b"prop-bilinear", "zkp");
        for _ in 0..1000 {
            let a = ctx.random_scalar(&mut rng);
            let b = ctx.random_scalar(&mut rng);
            let x = ctx.random_scalar(&mut rng);
            let ga = ctx.exp_g(&a);
            let gb = ctx.exp_g(&b);
            let gax = ctx.exp_g(&ctx.scalar_mul(&a, &x));
            let lhs = ctx.pair(&gax, &gb).unwrap();
            let rhs = ctx.target_exp(&ctx.pair(&ga, &gb).unwrap(), &x);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn backends_agree_on_group_laws() {
        let mock = GroupContext::setup_mock(SecurityProfile::Test, b"agree").unwrap();
        let real = GroupContext::setup_group(SecurityProfile::Test, b"agree").unwrap();
        let mut rng = derive_rng(b"agree", "laws");
        for _ in 0..200 {
            let a = mock.random_scalar(&mut rng);
            let b = mock.random_scalar(&mut rng);
            // identities that hold in any group of order q, checked on both
            for ctx in [&mock, &real] {
                let ga = ctx.exp_g(&a);
                let gb = ctx.exp_g(&b);
                assert_eq!(ctx.mul(&ga, &gb), ctx.exp_g(&ctx.scalar_add(&a, &b)));
                assert_eq!(ctx.div(&ga, &gb), ctx.exp_g(&ctx.scalar_sub(&a, &b)));
                assert_eq!(ctx.mul(&ga, &ctx.identity()), ga);
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        for profile in [SecurityProfile::Toy, SecurityProfile::Test] {
            for backend in [BackendId::Mock, BackendId::Production] {
                let ctx = GroupContext::setup(profile, backend, b"ser").unwrap();
                let mut rng = derive_rng(b"ser", profile.as_str());
                for _ in 0..100 {
                    let k = ctx.random_scalar(&mut rng);
                    let e = ctx.exp_g(&k);
                    let bytes = ctx.element_to_bytes(&e);
                    assert_eq!(bytes.len(), ctx.element_width());
                    assert_eq!(ctx.element_from_bytes(&bytes).unwrap(), e);
                    let sb = ctx.scalar_to_bytes(&k);
                    assert_eq!(ctx.scalar_from_bytes(&sb).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn deserialization_rejects_non_members() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        // 5 is in Z_23^* but has order 22, not 11
        let bytes = vec![0u8, 5u8];
        assert!(matches!(
            ctx.element_from_bytes(&bytes),
            Err(Error::NotInGroup)
        ));
        // width mismatch
        assert!(ctx.element_from_bytes(&[1u8]).is_err());
    }

    #[test]
    fn scalar_inverse() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let six = ctx.scalar_from_u64(6);
        let inv = ctx.scalar_inv(&six).unwrap();
        assert_eq!(inv, ctx.scalar_from_u64(2));
        assert!(ctx.scalar_inv(&Scalar::zero()).is_err());
    }

    #[test]
    fn context_is_shareable_across_threads() {
        let ctx = std::sync::Arc::new(GroupContext::setup_mock(SecurityProfile::Test, b"t").unwrap());
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let ctx = ctx.clone();
                std::thread::spawn(move || {
                    let k = ctx.scalar_from_u64(17 + i);
                    ctx.element_to_bytes(&ctx.exp_g(&k))
                })
            })
            .collect();
        for (i, handle) in handles.into_iter().enumerate() {
            let bytes = handle.join().unwrap();
            let k = ctx.scalar_from_u64(17 + i as u64);
            assert_eq!(bytes, ctx.element_to_bytes(&ctx.exp_g(&k)));
        }
    }
}
