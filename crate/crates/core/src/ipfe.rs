//! DDH inner-product functional encryption.
//!
//! Setup draws a secret vector s and publishes h_j = g^{s_j}. A functional
//! key for a weight column w is sk_w = <w, s> mod q. Encrypting x yields
//! (g^r, h_j^r * g^{x_j}); a key holder recovers exactly <x, w> and
//! nothing else about x.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::RngCore;

use crate::bsgs::{self, BsgsTable, DlogBound};
use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::matrix::IntMatrix;

/// Master secret vector s with every component uniform in [1, q-1].
#[derive(Debug, Clone)]
pub struct MasterSecretKey {
    group: GroupParams,
    s: Vec<BigUint>,
}

/// Master public key: the group plus h_j = g^{s_j}.
#[derive(Debug, Clone)]
pub struct MasterPublicKey {
    group: GroupParams,
    h: Vec<BigUint>,
}

/// Functional decryption key for one first-layer weight column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalKey {
    w: Vec<i64>,
    sk: BigUint,
}

/// Encryption of a quantized vector: c0 = g^r, c_j = h_j^r * g^{x_j}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    c0: BigUint,
    c: Vec<BigUint>,
}

impl MasterSecretKey {
    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn components(&self) -> &[BigUint] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn from_components(group: GroupParams, s: Vec<BigUint>) -> Result<Self> {
        for (j, sj) in s.iter().enumerate() {
            if sj < &BigUint::one() || sj >= group.q() {
                return Err(Error::Envelope(format!(
                    "msk component {j} outside [1, q-1]"
                )));
            }
        }
        Ok(Self { group, s })
    }
}

impl MasterPublicKey {
    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn elements(&self) -> &[BigUint] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn from_elements(group: GroupParams, h: Vec<BigUint>) -> Result<Self> {
        for (j, hj) in h.iter().enumerate() {
            if !group.in_subgroup(hj) {
                return Err(Error::Envelope(format!(
                    "mpk element {j} not in the order-q subgroup"
                )));
            }
        }
        Ok(Self { group, h })
    }
}

impl FunctionalKey {
    pub fn weights(&self) -> &[i64] {
        &self.w
    }

    pub fn sk(&self) -> &BigUint {
        &self.sk
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn from_parts(group: &GroupParams, w: Vec<i64>, sk: BigUint) -> Result<Self> {
        if &sk >= group.q() {
            return Err(Error::Envelope("functional key sk outside [0, q-1]".into()));
        }
        Ok(Self { w, sk })
    }
}

impl Ciphertext {
    pub fn c0(&self) -> &BigUint {
        &self.c0
    }

    pub fn components(&self) -> &[BigUint] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn from_parts(group: &GroupParams, c0: BigUint, c: Vec<BigUint>) -> Result<Self> {
        for (label, v) in std::iter::once(("c0", &c0)).chain(c.iter().map(|v| ("c", v))) {
            if v < &BigUint::one() || v >= group.p() {
                return Err(Error::Envelope(format!(
                    "ciphertext {label} outside [1, p-1]"
                )));
            }
        }
        Ok(Self { c0, c })
    }
}

/// Generates (mpk, msk) for vectors of length l.
pub fn setup(
    params: &GroupParams,
    l: usize,
    rng: &mut impl RngCore,
) -> Result<(MasterPublicKey, MasterSecretKey)> {
    params.validate()?;
    if l == 0 {
        return Err(Error::ShapeMismatch {
            expected: 1,
            got: 0,
        });
    }
    let one = BigUint::one();
    let s: Vec<BigUint> = (0..l)
        .map(|_| rng.gen_biguint_range(&one, params.q()))
        .collect();
    let h: Vec<BigUint> = s.iter().map(|sj| params.pow(params.g(), sj)).collect();
    Ok((
        MasterPublicKey {
            group: params.clone(),
            h,
        },
        MasterSecretKey {
            group: params.clone(),
            s,
        },
    ))
}

/// Derives one functional key per column of the l x n weight matrix:
/// sk_i = sum_j W[j][i] * s[j] mod q.
pub fn key_der(msk: &MasterSecretKey, weights: &IntMatrix) -> Result<Vec<FunctionalKey>> {
    if weights.rows() != msk.len() {
        return Err(Error::ShapeMismatch {
            expected: msk.len(),
            got: weights.rows(),
        });
    }
    if weights.cols() == 0 {
        return Err(Error::ShapeMismatch {
            expected: 1,
            got: 0,
        });
    }
    let group = &msk.group;
    let keys = weights
        .iter_columns()
        .map(|w| {
            let mut acc = BigUint::ZERO;
            for (wj, sj) in w.iter().zip(&msk.s) {
                acc += group.mod_q_signed(*wj) * sj;
            }
            FunctionalKey {
                w,
                sk: acc % group.q(),
            }
        })
        .collect();
    Ok(keys)
}

/// Encrypts a vector of quantized values in [0, 255] under fresh
/// randomness r drawn from the caller's entropy source.
pub fn encrypt(mpk: &MasterPublicKey, x: &[i64], rng: &mut impl RngCore) -> Result<Ciphertext> {
    let one = BigUint::one();
    let r = rng.gen_biguint_range(&one, mpk.group.q());
    encrypt_with_randomness(mpk, x, &r)
}

/// Encryption with caller-fixed randomness, for reproducible test vectors
/// and cross-implementation checks. Production callers use `encrypt`.
pub fn encrypt_with_randomness(
    mpk: &MasterPublicKey,
    x: &[i64],
    r: &BigUint,
) -> Result<Ciphertext> {
    if x.len() != mpk.len() {
        return Err(Error::ShapeMismatch {
            expected: mpk.len(),
            got: x.len(),
        });
    }
    for (index, &v) in x.iter().enumerate() {
        if !(0..=255).contains(&v) {
            return Err(Error::PlaintextOutOfRange { index, value: v });
        }
    }
    let group = &mpk.group;
    let c0 = group.pow(group.g(), r);
    let c = mpk
        .h
        .iter()
        .zip(x)
        .map(|(hj, &xj)| {
            let mask = group.pow(hj, r);
            group.mul(&mask, &group.pow(group.g(), &BigUint::from(xj as u64)))
        })
        .collect();
    Ok(Ciphertext { c0, c })
}

/// The group element prod_j c_j^{w_j} / c0^{sk}, which equals g^{<x, w>}.
/// Division is realized as multiplication by the modular inverse.
pub(crate) fn decrypt_to_group_element(
    ct: &Ciphertext,
    fk: &FunctionalKey,
    group: &GroupParams,
) -> Result<BigUint> {
    if fk.w.len() != ct.c.len() {
        return Err(Error::ShapeMismatch {
            expected: ct.c.len(),
            got: fk.w.len(),
        });
    }
    // Split positive and negative weights so every exponent stays small.
    let mut num = BigUint::one();
    let mut den = group.pow(&ct.c0, &fk.sk);
    for (cj, &wj) in ct.c.iter().zip(&fk.w) {
        if wj > 0 {
            num = group.mul(&num, &group.pow(cj, &BigUint::from(wj as u64)));
        } else if wj < 0 {
            den = group.mul(&den, &group.pow(cj, &BigUint::from(wj.unsigned_abs())));
        }
    }
    Ok(group.mul(&num, &group.inv(&den)))
}

/// Recovers the exact signed inner product <x, w> from a ciphertext and a
/// functional key, searching the discrete log inside `bound`.
pub fn decrypt_inner_product(
    ct: &Ciphertext,
    fk: &FunctionalKey,
    bound: DlogBound,
    group: &GroupParams,
) -> Result<i64> {
    let element = decrypt_to_group_element(ct, fk, group)?;
    bsgs::bsgs_dlog(group.g(), &element, bound, group)
}

/// Same as `decrypt_inner_product` but reuses a precomputed table.
pub fn decrypt_inner_product_with_table(
    ct: &Ciphertext,
    fk: &FunctionalKey,
    table: &BsgsTable,
) -> Result<i64> {
    let element = decrypt_to_group_element(ct, fk, table.group())?;
    table.solve(&element)
}
