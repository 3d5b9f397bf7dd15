//! Pre-issuance checks on a first-layer weight matrix.
//!
//! The key budget rule requires strictly fewer functional keys than
//! inputs, leaving a 256^(l-n) solution space for the plaintext. The
//! basis check refuses any matrix whose column space contains a standard
//! basis vector, since the matching key would hand an xApp one input
//! component in the clear.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::IntMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBudgetReport {
    pub l: usize,
    pub n: usize,
    pub solution_space_bits: u64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCheckReport {
    pub passed: bool,
    pub offending_basis_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuanceReport {
    pub budget: KeyBudgetReport,
    pub basis: BasisCheckReport,
    pub passed: bool,
}

/// Budget rule: n functional keys against l inputs pass iff n < l.
pub fn check_key_budget(l: usize, n: usize) -> KeyBudgetReport {
    let passed = n < l;
    let solution_space_bits = if passed { 8 * (l - n) as u64 } else { 0 };
    KeyBudgetReport {
        l,
        n,
        solution_space_bits,
        passed,
    }
}

/// Decides, with exact integer arithmetic, whether any standard basis
/// vector of dimension l lies in the span of W's columns.
///
/// A fraction-free elimination of the augmented matrix [W | I] produces a
/// basis of the left null space of W in the rows whose W-part vanished;
/// e_k lies in the column space iff every null-space vector has a zero in
/// coordinate k. This yields the same verdict as comparing rank(W) with
/// rank([W | e_k]) for each k, with one elimination instead of l+1.
pub fn check_no_standard_basis(w: &IntMatrix) -> BasisCheckReport {
    let l = w.rows();
    let n = w.cols();
    assert!(l > 0 && n > 0, "weight matrix must be non-empty");

    // Augmented [W | I_l] over BigInt, row-major.
    let width = n + l;
    let mut m: Vec<Vec<BigInt>> = (0..l)
        .map(|r| {
            let mut row: Vec<BigInt> = (0..n).map(|c| BigInt::from(w.get(r, c))).collect();
            row.extend((0..l).map(|c| BigInt::from(u8::from(c == r))));
            row
        })
        .collect();

    // Bareiss fraction-free elimination restricted to the W columns.
    let mut prev_pivot = BigInt::from(1);
    let mut rank = 0usize;
    for col in 0..n {
        if rank == l {
            break;
        }
        let Some(pivot_row) = (rank..l).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot_row);
        for r in rank + 1..l {
            for c in col + 1..width {
                let value = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                let (quot, rem) = value.div_rem(&prev_pivot);
                debug_assert!(rem.is_zero(), "fraction-free division must be exact");
                m[r][c] = quot;
            }
            m[r][col] = BigInt::zero();
        }
        prev_pivot = m[rank][col].clone();
        rank += 1;
    }

    // Rows rank..l now have zero W-part; their identity-part entries form
    // a basis of the left null space.
    for k in 0..l {
        let in_span = (rank..l).all(|r| m[r][n + k].is_zero());
        if in_span {
            return BasisCheckReport {
                passed: false,
                offending_basis_index: Some(k),
            };
        }
    }
    BasisCheckReport {
        passed: true,
        offending_basis_index: None,
    }
}

/// The KDC gate: both checks must pass before `key_der` runs.
pub fn validate_for_issuance(w: &IntMatrix) -> IssuanceReport {
    let budget = check_key_budget(w.rows(), w.cols());
    let basis = check_no_standard_basis(w);
    let passed = budget.passed && basis.passed;
    IssuanceReport {
        budget,
        basis,
        passed,
    }
}

/// Converts a failed report into the refusal error the KDC raises.
pub fn refusal_error(report: &IssuanceReport) -> Error {
    let mut reasons = Vec::new();
    if !report.budget.passed {
        reasons.push(format!(
            "key budget violated: {} keys for {} inputs (need n < l)",
            report.budget.n, report.budget.l
        ));
    }
    if let Some(k) = report.basis.offending_basis_index {
        reasons.push(format!(
            "standard basis vector e_{k} lies in the column space"
        ));
    }
    Error::IssuanceRefused(reasons.join("; "))
}
