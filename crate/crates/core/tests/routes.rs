use gtdyn::generators::{
    fusion_covered, generator_fusion_partial, DisplacementLaw, INTERIOR_EPS, q2_schur_measure, transition_det, Deformation,
};
use gtdyn::links::{boundary_link, link_un, link_uqn, verify_intertwine};
use gtdyn::{OmegaPoint, SignatureBox};

fn grid() -> Vec<(&'static str, OmegaPoint)> {
    vec![
        ("beta+", OmegaPoint::pure_beta_plus(0.3)),
        ("alpha-", OmegaPoint::pure_alpha_minus(0.4)),
        ("gamma+", OmegaPoint::pure_gamma_plus(0.5)),
        (
            "mixed",
            OmegaPoint {
                beta_plus: vec![0.3],
                alpha_minus: vec![0.2],
                gamma_plus: 0.2,
                ..OmegaPoint::zero()
            },
        ),
    ]
}

fn deformations() -> Vec<Deformation> {
    vec![Deformation::Classical, Deformation::Quantum(0.5), Deformation::Quantum(0.8)]
}

#[test]
fn determinantal_matches_fusion_on_covered_entries() {
    for (name, om) in grid() {
        for n in 1..=3 {
            for q in deformations() {
                let wbox = SignatureBox::new(n, -2, 2).unwrap();
                let weights = match q {
                    Deformation::Classical => boundary_link(&om, n, &wbox).unwrap(),
                    Deformation::Quantum(h) => q2_schur_measure(&om, n, h, &wbox).unwrap(),
                }
                .weights();
                let bx = SignatureBox::new(n, -2, 2).unwrap();
                let fus = generator_fusion_partial(&weights, n, q, &bx).unwrap().transition();
                let det = transition_det(&om, n, q, &bx).unwrap();
                let mut worst = 0.0f64;
                let mut count = 0;
                for (i, a) in bx.items().iter().enumerate() {
                    for (j, b) in bx.items().iter().enumerate() {
                        if fusion_covered(a, b, -2, 2) {
                            count += 1;
                            worst = worst.max((fus.entries[(i, j)] - det.entries[(i, j)]).abs());
                        }
                    }
                }
                assert!(count > 0);
                assert!(worst <= 1e-8, "{name} N={n} {q:?}: defect {worst:e}");
            }
        }
    }
}

#[test]
fn small_box_intertwining() {
    for (name, om) in grid() {
        for q in deformations() {
            let (below, above) = DisplacementLaw::one_step(&om, 2, q).unwrap().radius(INTERIOR_EPS);
            let (lo, hi) = (-below - 2, above + 2);
            let b2 = SignatureBox::new(2, lo, hi).unwrap();
            let b1 = SignatureBox::new(1, lo, hi).unwrap();
            let q2 = transition_det(&om, 2, q, &b2).unwrap();
            let q1 = transition_det(&om, 1, q, &b1).unwrap();
            let link = match q {
                Deformation::Classical => link_un(2, &b2, &b1).unwrap(),
                Deformation::Quantum(h) => link_uqn(2, h, &b2, &b1).unwrap(),
            };
            assert!(!q2.interior_rows().is_empty(), "{name} {q:?}");
            let d = verify_intertwine(&q2, &q1, &link).unwrap();
            assert!(d <= 1e-8, "{name} {q:?}: {d:e}");
        }
    }
}
