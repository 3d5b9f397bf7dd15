//! Baby-step giant-step discrete logarithm over a signed search window.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::group::GroupParams;

/// Signed window guaranteed to contain the exponent being recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DlogBound {
    pub lo: i64,
    pub hi: i64,
}

impl DlogBound {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidGroup(format!(
                "dlog bound must contain zero, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Window for inner products of l quantized inputs in [0, 255] against
    /// signed weights in [-127, 127].
    pub fn for_quantized_inputs(l: usize) -> Self {
        let extent = l as i64 * 255 * 127;
        Self {
            lo: -extent,
            hi: extent,
        }
    }

    pub fn window(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn contains(&self, e: i64) -> bool {
        self.lo <= e && e <= self.hi
    }
}

/// Precomputed baby steps for one (group, base, bound) triple. Read-only
/// after construction and shareable across threads.
#[derive(Debug, Clone)]
pub struct BsgsTable {
    group: GroupParams,
    bound: DlogBound,
    m: u64,
    baby: HashMap<BigUint, u64>,
    giant: BigUint,
    shift: BigUint,
}

impl BsgsTable {
    pub fn build(group: &GroupParams, base: &BigUint, bound: DlogBound) -> Self {
        let m = (bound.window() as f64).sqrt().ceil() as u64;
        let m = m.max(1);
        let mut baby = HashMap::with_capacity(m as usize);
        let mut acc = BigUint::one();
        for j in 0..m {
            baby.entry(acc.clone()).or_insert(j);
            acc = group.mul(&acc, base);
        }
        // acc is now base^m; its inverse advances the giant strides.
        let giant = group.inv(&acc);
        let shift = group.pow_signed(base, bound.lo.checked_neg().expect("lo > i64::MIN"));
        Self {
            group: group.clone(),
            bound,
            m,
            baby,
            giant,
            shift,
        }
    }

    pub fn bound(&self) -> DlogBound {
        self.bound
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    /// Recovers e with base^e = target and e inside the bound.
    pub fn solve(&self, target: &BigUint) -> Result<i64> {
        let strides = self.bound.window().div_ceil(self.m);
        let mut gamma = self.group.mul(target, &self.shift);
        for i in 0..=strides {
            if let Some(&j) = self.baby.get(&gamma) {
                let e = self.bound.lo + (i * self.m + j) as i64;
                if self.bound.contains(e) {
                    return Ok(e);
                }
            }
            gamma = self.group.mul(&gamma, &self.giant);
        }
        Err(Error::DlogNotFound {
            lo: self.bound.lo,
            hi: self.bound.hi,
        })
    }
}

/// One-shot baby-step giant-step: O(sqrt(window)) group operations.
pub fn bsgs_dlog(
    base: &BigUint,
    target: &BigUint,
    bound: DlogBound,
    group: &GroupParams,
) -> Result<i64> {
    BsgsTable::build(group, base, bound).solve(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GroupParams {
        GroupParams::by_name("toy-p23").unwrap()
    }

    /// Exhaustive scan oracle over the same signed window.
    fn brute_force_dlog(
        base: &BigUint,
        target: &BigUint,
        bound: DlogBound,
        group: &GroupParams,
    ) -> Option<i64> {
        (bound.lo..=bound.hi).find(|&e| &group.pow_signed(base, e) == target)
    }

    #[test]
    fn identity_maps_to_zero() {
        let group = toy();
        let bound = DlogBound::new(-10, 10).unwrap();
        let e = bsgs_dlog(group.g(), &BigUint::one(), bound, &group).unwrap();
        assert_eq!(e, 0);
    }

    #[test]
    fn recovers_positive_exponent() {
        let group = toy();
        // 4^7 mod 23 = 8
        let target = group.pow_signed(group.g(), 7);
        assert_eq!(target, BigUint::from(8u32));
        let bound = DlogBound::new(0, 10).unwrap();
        assert_eq!(bsgs_dlog(group.g(), &target, bound, &group).unwrap(), 7);
    }

    #[test]
    fn recovers_negative_exponent() {
        let group = toy();
        let target = group.inv(&group.pow_signed(group.g(), 3));
        let bound = DlogBound::new(-10, 10).unwrap();
        let e = bsgs_dlog(group.g(), &target, bound, &group).unwrap();
        let oracle = brute_force_dlog(group.g(), &target, bound, &group).unwrap();
        assert_eq!(e, oracle);
        assert_eq!(e, -3);
    }

    #[test]
    fn missing_exponent_reports_not_found() {
        let group = GroupParams::by_name("test-160").unwrap();
        let target = group.pow_signed(group.g(), 1000);
        let bound = DlogBound::new(-10, 10).unwrap();
        assert!(matches!(
            bsgs_dlog(group.g(), &target, bound, &group),
            Err(Error::DlogNotFound { lo: -10, hi: 10 })
        ));
    }

    #[test]
    fn bound_must_contain_zero() {
        assert!(DlogBound::new(1, 10).is_err());
        assert!(DlogBound::new(-10, -1).is_err());
        assert!(DlogBound::new(0, 0).is_ok());
    }

    #[test]
    fn agrees_with_exhaustive_scan_on_test_group() {
        let group = GroupParams::by_name("test-160").unwrap();
        let bound = DlogBound::new(-300, 500).unwrap();
        let table = BsgsTable::build(&group, group.g(), bound);
        for e in (-300..=500).step_by(13) {
            let target = group.pow_signed(group.g(), e);
            assert_eq!(table.solve(&target).unwrap(), e);
        }
    }

    #[test]
    fn quantized_bound_extent() {
        let b = DlogBound::for_quantized_inputs(50);
        assert_eq!(b.hi, 50 * 255 * 127);
        assert_eq!(b.lo, -b.hi);
    }
}
