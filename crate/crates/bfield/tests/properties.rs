//! Property tests for the spectral kernel invariants. Case counts are
//! kept small: each case runs several 3-D transforms.

use proptest::prelude::*;

use bfield::field::VectorField;
use bfield::grid::Grid;
use bfield::ops;
use bfield::random::{random_bandlimited, random_solenoidal};
use bfield::snapshot::Snapshot;

fn grid() -> Grid {
    Grid::standard(16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Differential operators are linear in their inputs.
    #[test]
    fn operators_are_linear(
        seed_f in 0u64..1000,
        seed_g in 1000u64..2000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let g = grid();
        let f1 = random_bandlimited(&g, seed_f, 4, 1.0);
        let f2 = random_bandlimited(&g, seed_g, 4, 1.0);
        let combo = f1.axpy(a, &f2, b);

        let lhs = ops::gradient(&combo);
        let rhs = ops::gradient(&f1).scaled(a).add(&ops::gradient(&f2).scaled(b));
        let scale = rhs.linf().max(1e-12);
        prop_assert!(lhs.sub(&rhs).linf() / scale < 1e-12);

        let lhs = ops::laplacian(&combo);
        let rhs = ops::laplacian(&f1).axpy(a, &ops::laplacian(&f2), b);
        let scale = rhs.linf().max(1e-12);
        prop_assert!(lhs.sub(&rhs).linf() / scale < 1e-12);
    }

    /// div(curl v) and curl(grad f) vanish for any band-limited input.
    #[test]
    fn exact_vector_identities(seed in 0u64..5000) {
        let g = grid();
        let v = VectorField {
            x: random_bandlimited(&g, seed, 5, 1.0),
            y: random_bandlimited(&g, seed + 7, 5, 1.0),
            z: random_bandlimited(&g, seed + 13, 5, 1.0),
        };
        let c = ops::curl(&v);
        prop_assert!(ops::divergence(&c).l2() / c.l2().max(1e-300) < 1e-12);
        let f = random_bandlimited(&g, seed + 29, 5, 1.0);
        let gr = ops::gradient(&f);
        prop_assert!(ops::curl(&gr).linf() / gr.linf().max(1e-300) < 1e-12);
    }

    /// Parseval: the physical L2 norm equals the spectral L2 norm.
    #[test]
    fn parseval(seed in 0u64..5000, kmax in 1usize..7) {
        let g = grid();
        let f = random_bandlimited(&g, seed, kmax, 1.0);
        let phys = f.l2();
        let spec = ops::spectral_l2(&f);
        prop_assert!((phys - spec).abs() / phys.max(1e-300) < 1e-12);
    }

    /// Products of fields band-limited to half the dealias cutoff are
    /// exact after the dealias pass.
    #[test]
    fn dealiased_products_exact_in_low_band(seed in 0u64..5000) {
        let g = grid(); // n = 16: keep |k| <= 5, so kmax 2 products stay inside
        let a = random_bandlimited(&g, seed, 2, 1.0);
        let b = random_bandlimited(&g, seed + 3, 2, 1.0);
        let exact = a.zip(&b, |x, y| x * y);
        let deal = ops::mul(&a, &b);
        prop_assert!(deal.sub(&exact).linf() / exact.linf().max(1e-300) < 1e-12);
    }

    /// The B-field construction is exactly antisymmetric in its scalars.
    #[test]
    fn b_field_antisymmetry(seed in 0u64..5000) {
        let g = grid();
        let q = random_bandlimited(&g, seed, 3, 1.0);
        let t = random_bandlimited(&g, seed + 11, 3, 1.0);
        let ab = bfield::pv::b_field(&q, &t).unwrap();
        let ba = bfield::pv::b_field(&t, &q).unwrap();
        for (x, y) in ab.x.values().iter().zip(ba.x.values()) {
            prop_assert_eq!(*x, -*y);
        }
    }

    /// Leray projection is idempotent and annihilates gradients.
    #[test]
    fn leray_projection_properties(seed in 0u64..5000) {
        let g = grid();
        let v = VectorField {
            x: random_bandlimited(&g, seed, 4, 1.0),
            y: random_bandlimited(&g, seed + 1, 4, 1.0),
            z: random_bandlimited(&g, seed + 2, 4, 1.0),
        };
        let p = ops::leray_project(&v);
        prop_assert!(ops::divergence_defect(&p) < 1e-12);
        let pp = ops::leray_project(&p);
        prop_assert!(pp.sub(&p).linf() / p.linf().max(1e-300) < 1e-12);
        let grad = ops::gradient(&random_bandlimited(&g, seed + 5, 4, 1.0));
        prop_assert!(ops::leray_project(&grad).linf() / grad.linf().max(1e-300) < 1e-11);
    }

    /// Snapshot round trips are bit-identical for arbitrary field content
    /// and names.
    #[test]
    fn snapshot_roundtrip(
        seed in 0u64..5000,
        name in "[a-z][a-z0-9_]{0,15}",
    ) {
        let g = Grid::standard(8).unwrap();
        let f = random_bandlimited(&g, seed, 3, 1.0);
        let v = random_solenoidal(&g, seed + 1, 2, 1.0);
        let mut snap = Snapshot::new(8, g.box_length(), 0.5);
        snap.push_scalar(&name, &f);
        snap.push_vector("v", &v);
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(&snap, &back);
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }
}
