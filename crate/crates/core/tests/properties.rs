use gtdyn::generators::DeterminantalKernel;
use gtdyn::links::link_entry;
use gtdyn::signatures::{enumerate_interlacing, enumerate_patterns};
use gtdyn::{Deformation, OmegaPoint, Signature};
use proptest::prelude::*;

fn signature(n: usize, lo: i64, hi: i64) -> impl Strategy<Value = Signature> {
    prop::collection::vec(lo..=hi, n).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        Signature::new(v).unwrap()
    })
}

fn deformation() -> impl Strategy<Value = Deformation> {
    prop_oneof![Just(Deformation::Classical), (0.3f64..0.95).prop_map(Deformation::Quantum)]
}

fn weyl_dim(lam: &Signature) -> f64 {
    let p = lam.parts();
    let mut d = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d *= (p[i] - p[j] + (j - i) as i64) as f64 / (j - i) as f64;
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transition_is_shift_equivariant(
        (lam, mu) in (1usize..=3).prop_flat_map(|n| (signature(n, -2, 2), signature(n, -3, 3))),
        k in -4i64..=4,
        q in deformation(),
    ) {
        let om = OmegaPoint { beta_plus: vec![0.3], alpha_minus: vec![0.2], gamma_plus: 0.2, ..OmegaPoint::zero() };
        let kernel = DeterminantalKernel::new(&om, lam.len(), q, -8, 8).unwrap();
        let a = kernel.entry(&lam, &mu);
        let b = kernel.entry(&lam.shifted(k), &mu.shifted(k));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn link_rows_sum_to_one(lam in (2usize..=4).prop_flat_map(|n| signature(n, -3, 3)), q in deformation()) {
        let s: f64 = enumerate_interlacing(&lam).unwrap().iter().map(|mu| link_entry(&lam, mu, q)).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12, "{s}");
    }

    #[test]
    fn signature_text_round_trips(lam in (1usize..=5).prop_flat_map(|n| signature(n, -50, 50))) {
        let back: Signature = lam.to_string().parse().unwrap();
        prop_assert_eq!(&back, &lam);
        prop_assert_eq!(lam.to_xconfig().to_signature(), lam);
    }

    #[test]
    fn pattern_count_is_dimension(lam in (1usize..=4).prop_flat_map(|n| signature(n, -2, 2))) {
        prop_assert_eq!(enumerate_patterns(&lam).len() as f64, weyl_dim(&lam));
    }
}
