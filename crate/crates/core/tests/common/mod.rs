//! Shared fixtures and independent oracles for the integration suites.
//! Each suite uses its own subset.
#![allow(dead_code)]

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use ztric_core::lab::{self, SynthConfig, TrainConfig};
use ztric_core::quant::{fuse_linear_relu, quantize_model, CalibrationSet, QuantizedModel};
use ztric_core::IntMatrix;

/// Plaintext inner product oracle.
pub fn dot(x: &[i64], w: &[i64]) -> i64 {
    x.iter().zip(w).map(|(a, b)| a * b).sum()
}

pub struct CanonicalSetup {
    pub float: ztric_core::FloatModel,
    pub qmodel: QuantizedModel,
}

/// The canonical 50-input detector: trained on seed-42 synthetic data,
/// fused and quantized against a seed-42 calibration set. Built once per
/// test binary.
pub fn canonical() -> &'static CanonicalSetup {
    static SETUP: OnceLock<CanonicalSetup> = OnceLock::new();
    SETUP.get_or_init(|| {
        let data = lab::generate_dataset(&SynthConfig::with_seed(42), 2000).unwrap();
        let outcome = lab::train_mlp(&data, &[50, 30, 15, 7, 2], &TrainConfig::default()).unwrap();
        let fused = fuse_linear_relu(&outcome.model).unwrap();
        let cal: Vec<Vec<f64>> = lab::generate_dataset(&SynthConfig::with_seed(4242), 200)
            .unwrap()
            .into_iter()
            .map(|w| w.readings)
            .collect();
        let qmodel = quantize_model(&fused, &CalibrationSet::new(cal)).unwrap();
        CanonicalSetup {
            float: fused,
            qmodel,
        }
    })
}

/// Random dense matrix with entries in [-127, 127].
pub fn random_dense(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> IntMatrix {
    let mut m = IntMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, rng.gen_range(-127..=127));
        }
    }
    m
}

/// Independent basis-membership oracle: e_k lies in span(columns of W)
/// iff rank(W) == rank([W | e_k]). Ranks are computed by Gaussian
/// elimination modulo two large primes (a modular rank can only
/// undercount, and only with probability ~ n/p per prime, so agreement
/// of the maximum with the rational rank is overwhelming).
#[allow(clippy::needless_range_loop)]
pub mod rank_oracle {
    use ztric_core::IntMatrix;

    const PRIMES: [u64; 2] = [2_305_843_009_213_693_951, 4_611_686_018_427_387_847];

    fn rank_mod_p(w: &IntMatrix, extra_basis: Option<usize>, p: u64) -> usize {
        let rows = w.rows();
        let cols = w.cols() + usize::from(extra_basis.is_some());
        let mut m: Vec<Vec<u64>> = (0..rows)
            .map(|r| {
                let mut row: Vec<u64> = (0..w.cols())
                    .map(|c| w.get(r, c).rem_euclid(p as i64) as u64)
                    .collect();
                if let Some(k) = extra_basis {
                    row.push(u64::from(r == k));
                }
                row
            })
            .collect();

        let mul = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
        let pow = |mut base: u64, mut e: u64| {
            let mut acc = 1u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(acc, base);
                }
                base = mul(base, base);
                e >>= 1;
            }
            acc
        };

        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_multiple_of(p)) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = pow(m[rank][col], p - 2);
            for c in col..cols {
                m[rank][c] = mul(m[rank][c], inv);
            }
            for r in 0..rows {
                if r != rank && m[r][col] != 0 {
                    let f = m[r][col];
                    for c in col..cols {
                        let sub = mul(f, m[rank][c]);
                        m[r][c] = (m[r][c] + p - sub) % p;
                    }
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    fn rank(w: &IntMatrix, extra_basis: Option<usize>) -> usize {
        PRIMES
            .iter()
            .map(|&p| rank_mod_p(w, extra_basis, p))
            .max()
            .unwrap()
    }

    pub fn basis_vector_in_span(w: &IntMatrix, k: usize) -> bool {
        rank(w, None) == rank(w, Some(k))
    }

    pub fn first_offending(w: &IntMatrix) -> Option<usize> {
        (0..w.rows()).find(|&k| basis_vector_in_span(w, k))
    }
}
