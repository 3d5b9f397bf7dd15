//! Named DDH groups: safe-prime moduli p = 2q + 1 with all arithmetic in
//! the order-q subgroup of quadratic residues mod p.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Miller-Rabin rounds. Each round bounds the error by 1/4, so 32 rounds
/// keep the overall acceptance error below 2^-64.
const MR_ROUNDS: usize = 32;

/// RFC 3526 group 14 modulus (2048-bit safe prime). 2 is a quadratic
/// residue (p ≡ 7 mod 8), so it generates the order-q subgroup.
const MODP_2048_P: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

/// RFC 3526 group 15 modulus (3072-bit safe prime).
const MODP_3072_P: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AAAC42DAD33170D04507A33\
A85521ABDF1CBA64ECFB850458DBEF0A8AEA71575D060C7DB3970F85A6E1E4C7\
ABF5AE8CDB0933D71E8C94E04A25619DCEE3D2261AD2EE6BF12FFA06D98A0864\
D87602733EC86A64521F2B18177B200CBBE117577A615D6C770988C0BAD946E2\
08E24FA074E5AB3143DB5BFCE0FD108E4B82D120A93AD2CAFFFFFFFFFFFFFFFF";

/// Deterministically generated 160-bit-q safe prime for fast tests,
/// produced by `generate_safe_prime_group(160, TEST_160_SEED)`.
const TEST_160_P: &str = "1CC714EADEFC717912935B81D88B4244BDF829AD3";

/// Seed used to derive the "test-160" group.
pub const TEST_160_SEED: [u8; 32] = *b"ztric test-160 group seed v1\0\0\0\0";

/// A named safe-prime group: modulus p = 2q + 1, subgroup order q, and a
/// generator g of the order-q subgroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    name: String,
    p: BigUint,
    q: BigUint,
    g: BigUint,
}

impl GroupParams {
    /// Builds and validates group parameters.
    pub fn new(name: impl Into<String>, p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        let params = Self {
            name: name.into(),
            p,
            q,
            g,
        };
        params.validate()?;
        Ok(params)
    }

    /// Looks up one of the registered groups: "modp2048", "modp3072",
    /// "toy-p23", or "test-160".
    pub fn by_name(name: &str) -> Result<GroupParams> {
        match name {
            "modp2048" => Ok(from_safe_prime_hex("modp2048", MODP_2048_P, 2u32)),
            "modp3072" => Ok(from_safe_prime_hex("modp3072", MODP_3072_P, 2u32)),
            "toy-p23" => Ok(GroupParams {
                name: "toy-p23".into(),
                p: BigUint::from(23u32),
                q: BigUint::from(11u32),
                g: BigUint::from(4u32),
            }),
            "test-160" => Ok(test_160().clone()),
            other => Err(Error::UnknownGroup(other.to_string())),
        }
    }

    /// Checks the full parameter contract: p and q probable primes,
    /// p = 2q + 1, and g a non-identity element of the order-q subgroup.
    pub fn validate(&self) -> Result<()> {
        let one = BigUint::one();
        if self.p.bits() < 3 {
            return Err(Error::InvalidGroup("modulus too small".into()));
        }
        if self.p != &self.q * 2u32 + 1u32 {
            return Err(Error::InvalidGroup("p != 2q + 1".into()));
        }
        if !is_probable_prime(&self.p) {
            return Err(Error::InvalidGroup("p is not prime".into()));
        }
        if !is_probable_prime(&self.q) {
            return Err(Error::InvalidGroup("q is not prime".into()));
        }
        if self.g <= one || self.g >= self.p {
            return Err(Error::InvalidGroup("generator out of range".into()));
        }
        if self.g.modpow(&self.q, &self.p) != one {
            return Err(Error::InvalidGroup(
                "generator not in the order-q subgroup".into(),
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.p
    }

    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        base.modpow(exp, &self.p)
    }

    /// Multiplicative inverse mod p via Fermat (p is prime).
    pub fn inv(&self, a: &BigUint) -> BigUint {
        a.modpow(&(&self.p - 2u32), &self.p)
    }

    /// base^e for signed e; negative exponents go through the inverse.
    pub fn pow_signed(&self, base: &BigUint, e: i64) -> BigUint {
        if e >= 0 {
            self.pow(base, &BigUint::from(e as u64))
        } else {
            let positive = self.pow(base, &BigUint::from(e.unsigned_abs()));
            self.inv(&positive)
        }
    }

    /// Reduces a signed integer into [0, q).
    pub fn mod_q_signed(&self, v: i64) -> BigUint {
        if v >= 0 {
            BigUint::from(v as u64) % &self.q
        } else {
            let r = BigUint::from(v.unsigned_abs()) % &self.q;
            if r.is_zero() {
                r
            } else {
                &self.q - r
            }
        }
    }

    /// Membership in the order-q subgroup: x^q ≡ 1 (mod p).
    pub fn in_subgroup(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && x.modpow(&self.q, &self.p).is_one()
    }
}

fn from_safe_prime_hex(name: &str, p_hex: &str, g: u32) -> GroupParams {
    let p = BigUint::parse_bytes(p_hex.as_bytes(), 16).expect("registry constant");
    let q = (&p - 1u32) >> 1;
    GroupParams {
        name: name.into(),
        p,
        q,
        g: BigUint::from(g),
    }
}

fn test_160() -> &'static GroupParams {
    static GROUP: OnceLock<GroupParams> = OnceLock::new();
    GROUP.get_or_init(|| from_safe_prime_hex("test-160", TEST_160_P, 4))
}

/// Deterministically generates a safe-prime group with a q of `q_bits`
/// bits from the given seed. The generator is 4 = 2^2, a quadratic
/// residue, hence of order q.
pub fn generate_safe_prime_group(name: &str, q_bits: u64, seed: [u8; 32]) -> GroupParams {
    let mut rng = ChaCha20Rng::from_seed(seed);
    loop {
        let mut q = rng.gen_biguint(q_bits);
        q.set_bit(q_bits - 1, true);
        q.set_bit(0, true);
        if !is_probable_prime(&q) {
            continue;
        }
        let p = &q * 2u32 + 1u32;
        if !is_probable_prime(&p) {
            continue;
        }
        return GroupParams {
            name: name.into(),
            p,
            q,
            g: BigUint::from(4u32),
        };
    }
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 2048usize;
        let mut sieve = vec![true; limit];
        let mut primes = Vec::new();
        for n in 2..limit {
            if sieve[n] {
                primes.push(n as u32);
                let mut m = n * n;
                while m < limit {
                    sieve[m] = false;
                    m += n;
                }
            }
        }
        primes
    })
}

/// Miller-Rabin with MR_ROUNDS witnesses drawn from a rng seeded by the
/// candidate itself, so verdicts are deterministic per input.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    // n - 1 = d * 2^r with d odd
    let n_minus_1 = n - 1u32;
    let r = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> r;

    let mut seed = [0u8; 32];
    let digest = Sha256::digest(n.to_bytes_be());
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha20Rng::from_seed(seed);

    'witness: for _ in 0..MR_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..r.saturating_sub(1) {
            x = &x * &x % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_groups_are_valid() {
        for name in ["toy-p23", "test-160", "modp2048", "modp3072"] {
            let group = GroupParams::by_name(name).unwrap();
            group.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_group_is_rejected() {
        assert!(matches!(
            GroupParams::by_name("modp1024"),
            Err(Error::UnknownGroup(_))
        ));
    }

    #[test]
    fn toy_group_shape() {
        let g = GroupParams::by_name("toy-p23").unwrap();
        assert_eq!(g.p(), &BigUint::from(23u32));
        assert_eq!(g.q(), &BigUint::from(11u32));
        assert_eq!(g.g(), &BigUint::from(4u32));
    }

    #[test]
    fn modp_moduli_sizes() {
        let g14 = GroupParams::by_name("modp2048").unwrap();
        assert_eq!(g14.p().bits(), 2048);
        let g15 = GroupParams::by_name("modp3072").unwrap();
        assert_eq!(g15.p().bits(), 3072);
    }

    #[test]
    fn invalid_params_are_rejected() {
        // p = 2q + 1 violated
        let e = GroupParams::new(
            "bad",
            BigUint::from(23u32),
            BigUint::from(7u32),
            BigUint::from(4u32),
        );
        assert!(matches!(e, Err(Error::InvalidGroup(_))));

        // composite q
        let e = GroupParams::new(
            "bad",
            BigUint::from(19u32),
            BigUint::from(9u32),
            BigUint::from(4u32),
        );
        assert!(matches!(e, Err(Error::InvalidGroup(_))));

        // generator outside the subgroup: 5 is a non-residue mod 23
        let e = GroupParams::new(
            "bad",
            BigUint::from(23u32),
            BigUint::from(11u32),
            BigUint::from(5u32),
        );
        assert!(matches!(e, Err(Error::InvalidGroup(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_safe_prime_group("det", 48, [7u8; 32]);
        let b = generate_safe_prime_group("det", 48, [7u8; 32]);
        assert_eq!(a.p(), b.p());
        a.validate().unwrap();
    }

    #[test]
    fn test_160_matches_its_seed() {
        let derived = generate_safe_prime_group("test-160", 160, TEST_160_SEED);
        let registered = GroupParams::by_name("test-160").unwrap();
        assert_eq!(derived.p(), registered.p());
        assert_eq!(derived.g(), registered.g());
        assert_eq!(registered.q().bits(), 160);
    }

    #[test]
    fn mod_q_signed_reduces_correctly() {
        let g = GroupParams::by_name("toy-p23").unwrap();
        assert_eq!(g.mod_q_signed(5), BigUint::from(5u32));
        assert_eq!(g.mod_q_signed(-3), BigUint::from(8u32));
        assert_eq!(g.mod_q_signed(-11), BigUint::zero());
        assert_eq!(g.mod_q_signed(0), BigUint::zero());
    }

    #[test]
    fn primality_classifies_known_values() {
        for prime in [2u32, 3, 23, 11, 2053, 65537] {
            assert!(is_probable_prime(&BigUint::from(prime)), "{prime}");
        }
        for composite in [1u32, 4, 2047, 65535, 2048] {
            assert!(!is_probable_prime(&BigUint::from(composite)), "{composite}");
        }
    }
}
