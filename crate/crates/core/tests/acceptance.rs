//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers. Run with
//! `cargo test -p ztric-core --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use common::{canonical, dot, random_dense, rank_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use ztric_core::bsgs::DlogBound;
use ztric_core::envelope;
use ztric_core::ipfe::{self, MasterPublicKey, MasterSecretKey};
use ztric_core::lab::{self, SynthConfig};
use ztric_core::pipeline::{
    self, build_context, kdc_issue, run_pipeline, EncKpmPayload, RunMode, ScenarioConfig,
};
use ztric_core::quant::{self, quantized_forward, Activation, CalibrationSet, FloatModel};
use ztric_core::validator;
use ztric_core::{GroupParams, IntMatrix};

use num_bigint::BigUint;

/// Criterion 1: Exact recovery of 1000 random inner products on test-160 across
/// input lengths 2, 25, and 50, inside the runtime target.
#[test]
fn acceptance_1_ipfe_correctness_property_suite() {
    let start = Instant::now();
    let group = GroupParams::by_name("test-160").unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0001);
    let mut checked = 0usize;
    for (l, cases) in [(2usize, 334usize), (25, 333), (50, 333)] {
        let (mpk, msk) = ipfe::setup(&group, l, &mut rng).unwrap();
        let bound = DlogBound::for_quantized_inputs(l);
        for _ in 0..cases {
            let x: Vec<i64> = (0..l).map(|_| rng.gen_range(0..=255)).collect();
            let w: Vec<i64> = (0..l).map(|_| rng.gen_range(-127..=127)).collect();
            let wm = IntMatrix::from_rows(w.iter().map(|&v| vec![v]).collect()).unwrap();
            let fk = &ipfe::key_der(&msk, &wm).unwrap()[0];
            let ct = ipfe::encrypt(&mpk, &x, &mut rng).unwrap();
            let recovered = ipfe::decrypt_inner_product(&ct, fk, bound, &group).unwrap();
            assert_eq!(recovered, dot(&x, &w), "l={l}");
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(checked, 1000);
    assert!(elapsed.as_secs() < 60, "property suite took {elapsed:?}");
    println!("ACCEPTANCE 1 ipfe-correctness: PASS (1000 exact recoveries in {elapsed:.2?})");
}

/// Criterion 2: The four lines of the decryption identity hold as group elements
/// on the toy p=23 group for 50 random instances.
#[test]
fn acceptance_2_decryption_identity_replication() {
    let group = GroupParams::by_name("toy-p23").unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0002);
    for case in 0..50 {
        let l = rng.gen_range(2..=4);
        let s: Vec<i64> = (0..l).map(|_| rng.gen_range(1..=10)).collect();
        let x: Vec<i64> = (0..l).map(|_| rng.gen_range(0..=255)).collect();
        let w: Vec<i64> = (0..l).map(|_| rng.gen_range(-127..=127)).collect();
        let r: i64 = rng.gen_range(1..=10);

        let msk = MasterSecretKey::from_components(
            group.clone(),
            s.iter().map(|&v| BigUint::from(v as u64)).collect(),
        )
        .unwrap();
        let h = s
            .iter()
            .map(|&sj| group.pow_signed(group.g(), sj))
            .collect();
        let mpk = MasterPublicKey::from_elements(group.clone(), h).unwrap();
        let wm = IntMatrix::from_rows(w.iter().map(|&v| vec![v]).collect()).unwrap();
        let fk = &ipfe::key_der(&msk, &wm).unwrap()[0];
        let ct = ipfe::encrypt_with_randomness(&mpk, &x, &BigUint::from(r as u64)).unwrap();

        // prod c_j^{w_j} / c0^{sk}
        let mut num = BigUint::from(1u32);
        for (cj, &wj) in ct.components().iter().zip(&w) {
            num = group.mul(&num, &group.pow_signed(cj, wj));
        }
        let den = group.pow(ct.c0(), fk.sk());
        let line1 = group.mul(&num, &group.inv(&den));

        // prod g^{(s_j r + x_j) w_j} / g^{r sum w_j s_j}
        let masked: i64 = s
            .iter()
            .zip(&x)
            .zip(&w)
            .map(|((sj, xj), wj)| (sj * r + xj) * wj)
            .sum();
        let key_part: i64 = r * dot(&w, &s);
        let line2 = group.mul(
            &group.pow_signed(group.g(), masked),
            &group.inv(&group.pow_signed(group.g(), key_part)),
        );

        // exponents collected
        let line3 = group.pow_signed(group.g(), masked - key_part);

        // g^{<x, w>}
        let line4 = group.pow_signed(group.g(), dot(&x, &w));

        assert_eq!(line1, line2, "case {case}: masking step");
        assert_eq!(line2, line3, "case {case}: exponent collection");
        assert_eq!(line3, line4, "case {case}: randomness cancellation");
    }
    println!("ACCEPTANCE 2 decryption-identity: PASS (50 cases, 4 lines each, exact)");
}

/// Criterion 3: Encrypted and plaintext inference agree bit-for-bit on 1000
/// seed-42 windows through the canonical model.
#[test]
fn acceptance_3_encrypted_equals_plaintext_inference() {
    let setup = canonical();
    let group = GroupParams::by_name("test-160").unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0003);
    let (enc_bundle, xapp_bundle, _) = kdc_issue(&group, &setup.qmodel, &mut rng).unwrap();
    let ctx = build_context(&xapp_bundle).unwrap();
    let mpk = envelope::mpk_from_envelope(&enc_bundle.mpk).unwrap();

    let windows = lab::generate_dataset(&SynthConfig::with_seed(42), 1000).unwrap();
    let mut class_matches = 0usize;
    for window in &windows {
        let x_q = setup.qmodel.quantize_input(&window.readings).unwrap();
        let x_i: Vec<i64> = x_q.iter().map(|&v| v as i64).collect();
        let ct = ipfe::encrypt(&mpk, &x_i, &mut rng).unwrap();
        let secure = ctx.evaluate_encrypted(&ct).unwrap();
        let (plain_logits, plain_class) = quantized_forward(&setup.qmodel, &x_q).unwrap();
        assert_eq!(secure.logits, plain_logits, "logit mismatch");
        assert_eq!(secure.class, plain_class, "class mismatch");
        class_matches += 1;
    }
    assert_eq!(class_matches, 1000);
    println!("ACCEPTANCE 3 encrypted-vs-plaintext: PASS (1000/1000 classes and logits bit-exact)");
}

/// Criterion 4: Quantization costs at most one percentage point of accuracy
/// against the float model on a held-out split.
#[test]
fn acceptance_4_quantization_parity() {
    let setup = canonical();
    // Windows 2000.. of the seed-42 stream are disjoint from the 2000
    // training windows.
    let all = lab::generate_dataset(&SynthConfig::with_seed(42), 3000).unwrap();
    let test = &all[2000..];

    let float_acc = lab::float_accuracy(&setup.float, test);
    let mut hits = 0usize;
    for w in test {
        let x_q = setup.qmodel.quantize_input(&w.readings).unwrap();
        let (_, class) = quantized_forward(&setup.qmodel, &x_q).unwrap();
        if class == usize::from(w.label) {
            hits += 1;
        }
    }
    let quant_acc = hits as f64 / test.len() as f64;
    let gap_pp = (float_acc - quant_acc).abs() * 100.0;
    assert!(
        gap_pp <= 1.0,
        "float {float_acc:.4} vs quantized {quant_acc:.4}: gap {gap_pp:.2}pp"
    );
    println!(
        "ACCEPTANCE 4 quantization-parity: PASS (float {:.2}%, quantized {:.2}%, gap {:.2}pp <= 1.0pp)",
        float_acc * 100.0,
        quant_acc * 100.0,
        gap_pp
    );
}

/// Criterion 5: Validator verdicts: the known counterexample is rejected at index
/// 0, 500 random dense matrices pass, planted basis columns fail, and
/// every verdict matches the independent rank-comparison oracle.
#[test]
fn acceptance_5_validator_soundness() {
    let counterexample = IntMatrix::from_rows(vec![vec![1, 0], vec![0, 1], vec![0, 0]]).unwrap();
    let report = validator::check_no_standard_basis(&counterexample);
    assert!(!report.passed);
    assert_eq!(report.offending_basis_index, Some(0));
    assert_eq!(rank_oracle::first_offending(&counterexample), Some(0));

    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0005);
    let mut oracle_matches = 0usize;
    for i in 0..500 {
        let w = random_dense(50, 30, &mut rng);
        let report = validator::check_no_standard_basis(&w);
        assert!(report.passed, "random dense matrix {i} unexpectedly failed");
        assert_eq!(
            report.offending_basis_index,
            rank_oracle::first_offending(&w),
            "oracle disagreement on matrix {i}"
        );
        oracle_matches += 1;
    }

    // Plant a standard basis column into otherwise dense matrices.
    for i in 0..20 {
        let mut w = random_dense(50, 30, &mut rng);
        let k = rng.gen_range(0..50);
        let col = rng.gen_range(0..30);
        for r in 0..50 {
            w.set(r, col, i64::from(r == k));
        }
        let report = validator::check_no_standard_basis(&w);
        assert!(!report.passed, "planted e_{k} not caught (case {i})");
        assert_eq!(
            report.offending_basis_index,
            rank_oracle::first_offending(&w)
        );
    }

    println!(
        "ACCEPTANCE 5 validator-soundness: PASS (counterexample at e_0, {oracle_matches}/500 dense pass, 20 planted caught, oracle agreement 100%)"
    );
}

fn bench_model(time_windows: usize, seed: u64) -> ztric_core::QuantizedModel {
    let l = time_windows * lab::KPM_COUNT;
    let h1 = (l * 4 / 5).min(30);
    let dims = vec![l, h1, 15, 7, 2];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let layers = dims.len() - 1;
    let model = FloatModel {
        layer_dims: dims.clone(),
        weights: (0..layers)
            .map(|k| {
                (0..dims[k] * dims[k + 1])
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect(),
        biases: (0..layers)
            .map(|k| (0..dims[k + 1]).map(|_| rng.gen_range(-0.3..0.3)).collect())
            .collect(),
        activations: (0..layers)
            .map(|k| {
                if k + 1 == layers {
                    Activation::Linear
                } else {
                    Activation::Relu
                }
            })
            .collect(),
    };
    let model = quant::fuse_linear_relu(&model).unwrap();
    let synth = SynthConfig {
        time_windows,
        ..SynthConfig::with_seed(seed)
    };
    let cal: Vec<Vec<f64>> = lab::generate_dataset(&synth, 50)
        .unwrap()
        .into_iter()
        .map(|w| w.readings)
        .collect();
    quant::quantize_model(&model, &CalibrationSet::new(cal)).unwrap()
}

/// Criterion 6: Timing shape on modp2048: evaluation time grows strictly with the
/// window count, every record satisfies rtt >= encryption + eval, and
/// t=10 evaluation stays under the 2-second desk budget. Absolute values
/// are reported, not asserted against any reference.
#[test]
fn acceptance_6_timing_shape() {
    let mut mean_evals = Vec::new();
    let mut t10_mean_eval = f64::NAN;
    let mut rows = Vec::new();
    for t in [5usize, 10, 20] {
        let model = bench_model(t, 0xACCE_0006 ^ t as u64);
        let cfg = ScenarioConfig {
            group: "modp2048".into(),
            model: None,
            time_windows: t,
            window_count: 6,
            window_interval_ms: 0,
            seed: 42,
        };
        let outcome = run_pipeline(&cfg, &model, RunMode::Thread).unwrap();
        assert!(!outcome.partial, "t={t} run was partial");
        for record in &outcome.timings {
            assert!(
                record.rtt_covers_stages(),
                "t={t} window {}: rtt {} < encryption {} + eval {}",
                record.window_id,
                record.rtt_us,
                record.encryption_us,
                record.eval_us
            );
        }
        let row = pipeline::summarize(t, model.input_dim(), &outcome.timings);
        mean_evals.push(row.mean_eval_s);
        if t == 10 {
            t10_mean_eval = row.mean_eval_s;
        }
        rows.push(row);
    }
    assert!(
        mean_evals[0] < mean_evals[1] && mean_evals[1] < mean_evals[2],
        "eval means not strictly increasing: {mean_evals:?}"
    );
    assert!(
        t10_mean_eval < 2.0,
        "t=10 encrypted inference took {t10_mean_eval:.3}s per window"
    );
    println!("ACCEPTANCE 6 timing-shape: PASS (reported means below)");
    print!("{}", pipeline::format_table(&rows));
}

/// Criterion 7: No plaintext KPM encoding appears in any frame or database record
/// over a 200-window run, and a snooping consumer sees only ciphertexts.
#[test]
fn acceptance_7_zero_plaintext_boundary() {
    let model = bench_model(5, 0xACCE_0007);
    let cfg = ScenarioConfig {
        group: "test-160".into(),
        model: None,
        time_windows: 5,
        window_count: 200,
        window_interval_ms: 0,
        seed: 42,
    };
    let outcome = run_pipeline(&cfg, &model, RunMode::Thread).unwrap();
    assert_eq!(outcome.db.len(), 200);

    let windows = pipeline::scenario_windows(&cfg).unwrap();
    // Decision fidelity across the stream while we hold the plaintext.
    assert_eq!(outcome.decisions.len(), windows.len());
    for (decision, window) in outcome.decisions.iter().zip(&windows) {
        let x_q = model.quantize_input(&window.readings).unwrap();
        let (_, class) = quantized_forward(&model, &x_q).unwrap();
        assert_eq!(
            decision.jammer_present,
            class == 1,
            "window {}",
            decision.window_id
        );
    }
    for window in &windows {
        let x_q = model.quantize_input(&window.readings).unwrap();
        // The quantized vector both as raw bytes and as its JSON text.
        let raw = x_q.clone();
        let listed = x_q
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        for pattern in [raw.as_slice(), listed.as_bytes()] {
            assert!(
                !outcome.db.stored_bytes_contain(pattern),
                "plaintext pattern found in the database"
            );
            assert!(
                !outcome.audit.any_payload_contains(pattern),
                "plaintext pattern found on the wire"
            );
        }
    }

    // Snooping consumer: reads everything, learns only ciphertexts.
    let snooped = outcome.db.poll("snooper", usize::MAX);
    assert_eq!(snooped.len(), 200);
    let group = GroupParams::by_name("test-160").unwrap();
    for record in snooped {
        let payload: EncKpmPayload = serde_json::from_slice(&record.payload).unwrap();
        let ct = envelope::ct_from_envelope(&payload.ciphertext).unwrap();
        assert!(group.in_subgroup(ct.c0()));
        let keys: Vec<String> = serde_json::from_slice::<serde_json::Value>(&record.payload)
            .unwrap()
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["ciphertext", "encryption_us", "window_id"]);
    }
    println!(
        "ACCEPTANCE 7 zero-plaintext-boundary: PASS (200 windows scanned, snooper saw ciphertexts only)"
    );
}

/// Criterion 8: The trainer's analytic gradients match central finite differences
/// within 1e-4 relative error on a toy network.
#[test]
#[allow(clippy::needless_range_loop)] // perturb-by-index is the point
fn acceptance_8_gradient_check() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0008);
    let dims = [2usize, 2, 2];
    let mut model = FloatModel {
        layer_dims: dims.to_vec(),
        weights: vec![
            (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        ],
        biases: vec![vec![0.2, -0.1], vec![0.05, 0.15]],
        activations: vec![Activation::Relu, Activation::Linear],
    };
    let batch: Vec<(Vec<f64>, usize)> = (0..8)
        .map(|i| {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            (x, i % 2)
        })
        .collect();

    let (w_grads, b_grads) = lab::batch_gradients(&model, &batch);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        for idx in 0..model.weights[k].len() {
            let orig = model.weights[k][idx];
            model.weights[k][idx] = orig + h;
            let up = lab::batch_loss(&model, &batch);
            model.weights[k][idx] = orig - h;
            let down = lab::batch_loss(&model, &batch);
            model.weights[k][idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let analytic = w_grads[k][idx];
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        for idx in 0..model.biases[k].len() {
            let orig = model.biases[k][idx];
            model.biases[k][idx] = orig + h;
            let up = lab::batch_loss(&model, &batch);
            model.biases[k][idx] = orig - h;
            let down = lab::batch_loss(&model, &batch);
            model.biases[k][idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let analytic = b_grads[k][idx];
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
    println!("ACCEPTANCE 8 gradient-check: PASS (worst relative error {worst:.2e} < 1e-4)");
}
