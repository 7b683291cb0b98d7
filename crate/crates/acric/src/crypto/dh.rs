//! Modular-exponentiation group arithmetic for the key exchange.

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::{CryptoError, SessionKey, KEY_LEN};

/// RFC 3526 2048-bit MODP group (group 14), generator 2.
const MODP2048_PRIME_HEX: &str = concat!(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74",
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437",
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED",
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05",
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB",
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B",
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718",
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
);

/// Largest 64-bit safe prime. Far too small for real key exchange; exists so
/// unit tests and simulations run fast. The name says so on purpose.
const TOY64_PRIME: u64 = 0xFFFF_FFFF_FFFF_FA43;

/// A multiplicative group modulo a public prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DhGroup {
    name: &'static str,
    prime: BigUint,
    generator: BigUint,
}

impl DhGroup {
    pub fn modp2048() -> Self {
        let prime = BigUint::parse_bytes(MODP2048_PRIME_HEX.as_bytes(), 16)
            .expect("prime constant is valid hex");
        Self { name: "modp2048", prime, generator: BigUint::from(2u32) }
    }

    pub fn toy64_insecure() -> Self {
        Self {
            name: "toy64",
            prime: BigUint::from(TOY64_PRIME),
            generator: BigUint::from(2u32),
        }
    }

    /// Resolve a group by its configuration name (`modp2048` or `toy64`).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "modp2048" => Some(Self::modp2048()),
            "toy64" => Some(Self::toy64_insecure()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn prime(&self) -> &BigUint {
        &self.prime
    }

    pub fn generator(&self) -> &BigUint {
        &self.generator
    }

    /// Public values outside [2, p-2] are degenerate and must be refused.
    pub fn is_valid_public(&self, value: &BigUint) -> bool {
        let two = BigUint::from(2u32);
        let p_minus_2 = &self.prime - &two;
        *value >= two && *value <= p_minus_2
    }
}

/// A private exponent together with its public value g^x mod p.
#[derive(Debug, Clone)]
pub struct DhKeyPair {
    private_exponent: BigUint,
    public_value: BigUint,
}

impl DhKeyPair {
    pub fn generate(group: &DhGroup, rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let private_exponent = random_scalar(group, rng);
        let public_value = group
            .generator()
            .modpow(&private_exponent, group.prime());
        Self { private_exponent, public_value }
    }

    pub fn public_value(&self) -> &BigUint {
        &self.public_value
    }

    /// The raw shared group element for a peer's public value.
    pub fn shared_secret(&self, group: &DhGroup, peer_public: &BigUint) -> BigUint {
        peer_public.modpow(&self.private_exponent, group.prime())
    }
}

/// base^exponent mod modulus by square-and-multiply. Not constant time.
pub fn mod_exp(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint, CryptoError> {
    if *modulus <= BigUint::from(1u32) {
        return Err(CryptoError::InvalidModulus);
    }
    Ok(base.modpow(exponent, modulus))
}

/// Uniform scalar in [2, p-2] by rejection sampling.
pub fn random_scalar(group: &DhGroup, rng: &mut (impl RngCore + CryptoRng)) -> BigUint {
    let two = BigUint::from(2u32);
    let upper = group.prime() - &two; // inclusive upper bound
    let bits = upper.bits();
    let bytes = bits.div_ceil(8) as usize;
    let top_mask = if bits % 8 == 0 { 0xFF } else { (1u16 << (bits % 8)) as u8 - 1 };
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        buf[0] &= top_mask;
        let candidate = BigUint::from_bytes_be(&buf);
        if candidate >= two && candidate <= upper {
            return candidate;
        }
    }
}

/// Fixed-width session key from the shared group element: SHA-256 of its
/// minimal big-endian encoding.
pub fn derive_session_key(shared_secret: &BigUint, group: &DhGroup) -> Result<SessionKey, CryptoError> {
    let one = BigUint::from(1u32);
    let p_minus_1 = group.prime() - &one;
    if shared_secret <= &one || *shared_secret >= p_minus_1 {
        return Err(CryptoError::DegenerateSharedSecret);
    }
    let digest: [u8; KEY_LEN] = Sha256::digest(shared_secret.to_bytes_be()).into();
    Ok(SessionKey::from_bytes(digest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn mod_exp_basics() {
        let p = BigUint::from(23u32);
        assert_eq!(
            mod_exp(&BigUint::from(5u32), &BigUint::from(0u32), &p).unwrap(),
            BigUint::from(1u32)
        );
        assert_eq!(
            mod_exp(&BigUint::from(29u32), &BigUint::from(1u32), &p).unwrap(),
            BigUint::from(6u32)
        );
        assert_eq!(
            mod_exp(&BigUint::from(5u32), &BigUint::from(13u32), &p).unwrap(),
            BigUint::from(21u32)
        );
        assert!(mod_exp(&BigUint::from(5u32), &BigUint::from(2u32), &BigUint::from(1u32)).is_err());
    }

    #[test]
    fn agreement_on_toy_group() {
        let group = DhGroup::toy64_insecure();
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..100 {
            let a = DhKeyPair::generate(&group, &mut rng);
            let b = DhKeyPair::generate(&group, &mut rng);
            let s1 = a.shared_secret(&group, b.public_value());
            let s2 = b.shared_secret(&group, a.public_value());
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn agreement_on_production_group() {
        let group = DhGroup::modp2048();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..3 {
            let a = DhKeyPair::generate(&group, &mut rng);
            let b = DhKeyPair::generate(&group, &mut rng);
            assert_eq!(
                a.shared_secret(&group, b.public_value()),
                b.shared_secret(&group, a.public_value())
            );
        }
    }

    #[test]
    fn scalar_bounds_hold() {
        let group = DhGroup::toy64_insecure();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let two = BigUint::from(2u32);
        let upper = group.prime() - &two;
        for _ in 0..1000 {
            let s = random_scalar(&group, &mut rng);
            assert!(s >= two && s <= upper);
        }
    }

    #[test]
    fn session_key_derivation() {
        let group = DhGroup::toy64_insecure();
        let key = derive_session_key(&BigUint::from(2u32), &group).unwrap();
        // SHA-256 of the single byte 0x02.
        assert_eq!(
            hex::encode(key.as_bytes()),
            "dbc1b4c900ffe48d575b5da5c638040125f65db0fe3e24494b76ea986457d986"
        );

        assert!(derive_session_key(&BigUint::from(0u32), &group).is_err());
        assert!(derive_session_key(&BigUint::from(1u32), &group).is_err());
        let p_minus_1 = group.prime() - BigUint::from(1u32);
        assert!(derive_session_key(&p_minus_1, &group).is_err());
    }

    #[test]
    fn group_lookup() {
        assert_eq!(DhGroup::by_name("toy64").unwrap().name(), "toy64");
        assert_eq!(DhGroup::by_name("modp2048").unwrap().name(), "modp2048");
        assert!(DhGroup::by_name("modp1536").is_none());
    }

    #[test]
    fn public_value_validation() {
        let group = DhGroup::toy64_insecure();
        assert!(!group.is_valid_public(&BigUint::from(0u32)));
        assert!(!group.is_valid_public(&BigUint::from(1u32)));
        assert!(group.is_valid_public(&BigUint::from(2u32)));
        let p_minus_1 = group.prime() - BigUint::from(1u32);
        assert!(!group.is_valid_public(&p_minus_1));
        assert!(!group.is_valid_public(group.prime()));
    }
}
