use etfkit_core::designs::{affine_design, kirkman15, round_robin_design, SteinerSystem};
use etfkit_core::flatmat::{dft, drop_row_simplex, hadamard, hadamard_constructible, AbelianGroup, UnimodularMatrix};
use etfkit_core::frames::{
    default_mcfarland_group, harmonic_etf, kirkman_etf, mcfarland_as_kirkman, mcfarland_set, naimark_complement,
    steiner_etf, DifferenceSet, Frame, Provenance,
};
use etfkit_core::metrics::{
    certify_etf, coherence, exact_coherence, gram_equal, rip_delta, spark, steiner_rip_verdict, SparkOptions,
};
use num_rational::Ratio;

fn unitary(n: usize) -> UnimodularMatrix {
    if hadamard_constructible(n) {
        hadamard(n).unwrap()
    } else {
        dft(n)
    }
}

fn designs() -> Vec<(&'static str, SteinerSystem)> {
    vec![
        ("affine(2,1)", affine_design(2, 1).unwrap()),
        ("affine(3,1)", affine_design(3, 1).unwrap()),
        ("affine(2,2)", affine_design(2, 2).unwrap()),
        ("round-robin(4)", round_robin_design(4).unwrap()),
        ("round-robin(6)", round_robin_design(6).unwrap()),
        ("round-robin(8)", round_robin_design(8).unwrap()),
        ("kirkman15", kirkman15()),
    ]
}

fn pair(design: &SteinerSystem) -> (Frame, Frame) {
    let r = design.replication();
    let simplex = drop_row_simplex(&unitary(r + 1), 0).unwrap();
    let basis = unitary(design.v / design.k);
    (steiner_etf(design, &simplex).unwrap(), kirkman_etf(design, &simplex, &basis).unwrap())
}

#[test]
fn steiner_and_kirkman_frames_are_etfs_with_equal_grams() {
    for (name, design) in designs() {
        let (phi, psi) = pair(&design);
        for f in [&phi, &psi] {
            let cert = certify_etf(f, 1e-9).unwrap();
            assert!(cert.verdict.pass, "{name}: {cert:?}");
            assert!((cert.coherence - cert.welch_bound).abs() <= 1e-9);
            let target = cert.frame_potential_target;
            assert!((cert.frame_potential - target).abs() <= 1e-6 * target);
        }
        assert!(psi.is_constant_amplitude(1e-12), "{name}");
        let cmp = gram_equal(&phi, &psi, 1e-9).unwrap();
        assert!(cmp.passed, "{name}: {cmp:?}");
        // welch bound is 1/R
        let mu = coherence(&phi).unwrap();
        assert!((mu - 1.0 / design.replication() as f64).abs() < 1e-12, "{name}");
    }
}

#[test]
fn every_point_spans_a_deficient_subspace() {
    for (name, design) in designs() {
        let (phi, _) = pair(&design);
        let r = design.replication();
        let labels = phi.column_labels.clone().unwrap();
        for v in 0..design.v {
            let cols: Vec<usize> = (0..phi.n()).filter(|&c| labels[c].1 == v).collect();
            assert_eq!(cols.len(), r + 1);
            let support = (0..phi.m())
                .filter(|&row| cols.iter().any(|&c| phi.get(row, c).norm() > 0.0))
                .count();
            assert_eq!(support, r, "{name} point {v}");
        }
    }
}

#[test]
fn harmonic_frames_of_difference_sets_are_etfs() {
    let cases = [
        (2, 1, AbelianGroup::elementary_abelian(2, 2)),
        (2, 1, AbelianGroup::cyclic(4)),
        (3, 1, AbelianGroup::cyclic(5)),
        (2, 2, AbelianGroup::elementary_abelian(2, 3)),
        (4, 1, AbelianGroup::cyclic(6)),
    ];
    for (q, j, g) in cases {
        let ds = mcfarland_set(q, j, &g).unwrap();
        let frame = harmonic_etf(&ds.group, &ds).unwrap();
        let cert = certify_etf(&frame, 1e-9).unwrap();
        assert!(cert.verdict.pass, "q={q} j={j} G={:?}: {cert:?}", g.factors());
    }
    let singer = DifferenceSet::new(AbelianGroup::cyclic(13), vec![0, 1, 3, 9]).unwrap();
    assert!(certify_etf(&harmonic_etf(&singer.group, &singer).unwrap(), 1e-9).unwrap().verdict.pass);
}

#[test]
fn mcfarland_over_three_has_coherence_one_quarter() {
    let ds = mcfarland_set(3, 1, &AbelianGroup::cyclic(5)).unwrap();
    let frame = harmonic_etf(&ds.group, &ds).unwrap();
    assert!((coherence(&frame).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn mcfarland_matches_kirkman_for_each_group_choice() {
    for (q, j, g) in [
        (2, 1, AbelianGroup::elementary_abelian(2, 2)),
        (2, 1, AbelianGroup::cyclic(4)),
        (3, 1, AbelianGroup::cyclic(5)),
        (2, 2, AbelianGroup::cyclic(8)),
    ] {
        let cmp = mcfarland_as_kirkman(q, j, &g, 1e-9).unwrap();
        assert!(cmp.entrywise.passed, "q={q} j={j}: {:?}", cmp.entrywise);
        assert!(gram_equal(&cmp.harmonic, &cmp.kirkman, 1e-9).unwrap().passed);
    }
}

#[test]
fn naimark_of_mcfarland_matches_complement_set() {
    let g = default_mcfarland_group(2, 1);
    let ds = mcfarland_set(2, 1, &g).unwrap();
    let frame = harmonic_etf(&ds.group, &ds).unwrap();
    let comp = naimark_complement(&frame, true).unwrap();
    let other = harmonic_etf(&ds.group, &ds.complement().unwrap()).unwrap();
    assert_eq!((comp.m(), other.m()), (10, 10));
    assert!((coherence(&comp).unwrap() - 0.2).abs() < 1e-9);
    assert!((coherence(&other).unwrap() - 0.2).abs() < 1e-12);
    assert!(certify_etf(&comp, 1e-9).unwrap().verdict.pass);
}

#[test]
fn spark_is_invariant_under_permutation_and_mixing() {
    let (phi, psi) = pair(&round_robin_design(4).unwrap());
    let order: Vec<usize> = (0..16).rev().collect();
    let opts = SparkOptions::default();
    let base = spark(&phi, &opts).unwrap().spark;
    assert_eq!(base, Some(4));
    assert_eq!(spark(&phi.permute_columns(&order), &opts).unwrap().spark, base);
    assert_eq!(spark(&psi, &opts).unwrap().spark, base);
    assert_eq!(spark(&psi.permute_columns(&order), &opts).unwrap().spark, base);
}

#[test]
fn spark_of_a_triangle_simplex() {
    let s = drop_row_simplex(&dft(3), 0).unwrap();
    let scale = 1.0 / 2f64.sqrt();
    let frame = Frame::from_entries(2, 3, s.entries().iter().map(|z| z * scale).collect(), Provenance::Unspecified);
    let rep = spark(&frame, &SparkOptions::default()).unwrap();
    assert_eq!(rep.spark, Some(3));
    assert_eq!(rep.independent_up_to, 2);
}

#[test]
fn spark_reports_lower_bound_when_capped() {
    let (phi, _) = pair(&round_robin_design(4).unwrap());
    let rep = spark(&phi, &SparkOptions { max_subset: Some(3), allow_large: false }).unwrap();
    assert_eq!((rep.spark, rep.independent_up_to), (None, 3));
}

#[test]
fn rip_constants_of_the_small_pair() {
    let (phi, psi) = pair(&round_robin_design(4).unwrap());
    for f in [&phi, &psi] {
        let d2 = rip_delta(f, 2).unwrap();
        assert!((d2.delta - 1.0 / 3.0).abs() < 1e-12);
        let d3 = rip_delta(f, 3).unwrap();
        assert_eq!(d3.subsets, 560);
        assert!(d3.delta <= 2.0 / 3.0 + 1e-12);
        assert!(rip_delta(f, 4).unwrap().delta >= 1.0 - 1e-9);
    }
    let verdict = steiner_rip_verdict(&psi).unwrap();
    assert!(verdict.consistent);
}

#[test]
fn exact_coherence_of_real_frames() {
    let (phi, psi) = pair(&round_robin_design(8).unwrap());
    assert_eq!(exact_coherence(&phi), Some(Ratio::new(1, 7)));
    assert_eq!(exact_coherence(&psi), Some(Ratio::new(1, 7)));
}
