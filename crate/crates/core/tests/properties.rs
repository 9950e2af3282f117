use etfkit_core::codes::{certify_grbe, code_to_frame, distance, frame_to_code, BinaryCode, Codeword};
use etfkit_core::designs::{harmonic_feasibility, round_robin_design, SteinerSystem};
use etfkit_core::frames::{Frame, Provenance};
use etfkit_core::gf::FiniteField;
use etfkit_core::metrics::{coherence, gram_equal, rip_delta, welch_bound};
use num_complex::Complex64;
use proptest::prelude::*;

fn field_and_pair() -> impl Strategy<Value = (u64, u32, usize, usize)> {
    prop_oneof![Just((2u64, 4u32)), Just((3, 3)), Just((5, 2)), Just((2, 6))].prop_flat_map(|(p, k)| {
        let q = (p as usize).pow(k);
        (Just(p), Just(k), 0..q, 0..q)
    })
}

proptest! {
    #[test]
    fn trace_is_additive_and_frobenius_invariant((p, k, a, b) in field_and_pair()) {
        let f = FiniteField::new(p, k).unwrap();
        let (x, y) = (f.element(a), f.element(b));
        let tr = |z| f.absolute_trace(z);
        prop_assert_eq!(tr(f.add(x, y)), (tr(x) + tr(y)) % p as u32);
        prop_assert_eq!(tr(f.pow(x, p)), tr(x));
    }

    #[test]
    fn multiplication_distributes((p, k, a, b) in field_and_pair(), c in 0usize..8) {
        let f = FiniteField::new(p, k).unwrap();
        let (x, y, z) = (f.element(a), f.element(b), f.element(c % f.order()));
        prop_assert_eq!(f.mul(z, f.add(x, y)), f.add(f.mul(z, x), f.mul(z, y)));
        if !x.is_zero() {
            prop_assert_eq!(f.mul(x, f.inv(x).unwrap()), f.element(1));
        }
    }

    #[test]
    fn harmonic_parameters_are_integral(k in 2u64..=6, w in 1u64..=20) {
        let v = k * (w * (k - 1) + 1);
        let rep = harmonic_feasibility(k, v).unwrap();
        // independent recount from first principles
        let r = (v - 1) / (k - 1);
        let b = v * r / k;
        let n = v * (r + 1);
        let lambda = (b as u128) * (b as u128 - 1) / (n as u128 - 1);
        prop_assert_eq!((b as u128) * (b as u128 - 1) % (n as u128 - 1), 0);
        prop_assert_eq!(rep.lambda as u128, lambda);
        prop_assert_eq!(rep.lambda, w * (w * (k - 1) + 1));
        let degree = b - rep.lambda;
        let root = (degree as f64).sqrt().round() as u64;
        prop_assert_eq!(root * root, degree);
        prop_assert!(rep.lambda_integral && rep.degree_is_square);
    }

    #[test]
    fn design_json_round_trips(half in 2usize..8) {
        let d = round_robin_design(2 * half).unwrap();
        prop_assert_eq!(SteinerSystem::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn sign_frames_round_trip_through_json_and_codes(m in 1usize..7, n in 1usize..9, seed in any::<u64>()) {
        let signs: Vec<i8> = (0..m * n).map(|i| if (seed >> (i % 64)) & 1 == 1 { -1 } else { 1 }).collect();
        let frame = Frame::from_signs(m, n, signs, m as u64, Provenance::Unspecified);
        prop_assert_eq!(&Frame::from_json(&frame.to_json()).unwrap(), &frame);
        let code = frame_to_code(&frame).unwrap();
        let back = code_to_frame(&code).unwrap();
        prop_assert_eq!(back.sign_form(), frame.sign_form());
        prop_assert_eq!(BinaryCode::from_text(&code.to_text()).unwrap(), code.clone());
        if n >= 2 {
            prop_assert!(2 * distance(&code).unwrap() <= m);
        }
        // ⟨φ_a, φ_b⟩ = (m − 2 hd)/m as integers
        let g = frame.exact_gram().unwrap();
        for a in 0..n {
            for b in 0..n {
                let hd = code.words()[a].hamming(&code.words()[b]) as i64;
                prop_assert_eq!(g[a * n + b], m as i64 - 2 * hd);
            }
        }
        let cert = certify_grbe(&code).unwrap();
        prop_assert!(cert.agree && cert.inner_product_identity);
    }

    #[test]
    fn welch_is_a_lower_bound(m in 2usize..5, extra in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let n = m + extra;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut entries: Vec<Complex64> = (0..m * n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for c in 0..n {
            let norm = (0..m).map(|r| entries[r * n + c].norm_sqr()).sum::<f64>().sqrt();
            for r in 0..m {
                entries[r * n + c] /= norm;
            }
        }
        let frame = Frame::from_entries(m, n, entries, Provenance::Unspecified);
        let mu = coherence(&frame).unwrap();
        prop_assert!(welch_bound(m, n).unwrap() <= mu + 1e-9);
        for l in 1..=3.min(n) {
            prop_assert!(rip_delta(&frame, l).unwrap().delta <= (l - 1) as f64 * mu + 1e-9);
        }
        let self_cmp = gram_equal(&frame, &frame, 0.0).unwrap();
        prop_assert!(self_cmp.passed);
    }

    #[test]
    fn complement_words_flip_every_bit(bits in proptest::collection::vec(any::<bool>(), 1..130)) {
        let w = Codeword::from_bits(&bits);
        let c = w.complement();
        prop_assert_eq!(w.hamming(&c), bits.len());
        prop_assert_eq!(c.complement(), w);
    }
}
