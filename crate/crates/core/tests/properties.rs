//! Property tests for exact structural invariants: algebra laws on random
//! sparse elements, the scaling roundtrip, spectral monotonicity in p, and
//! grid index arithmetic.

use proptest::prelude::*;

use wick_forge::basis::{GridSpec, SpectralBasis};
use wick_forge::chaos::{ChaosAlgebra, ChaosExpansion, MultiIndex};

const K: usize = 4;

fn sparse_expansion() -> impl Strategy<Value = ChaosExpansion> {
    let term = (0u32..=3, 0..K, -1.0f64..1.0);
    proptest::collection::vec(term, 1..4).prop_map(|terms| {
        ChaosExpansion::from_terms(
            K,
            terms
                .into_iter()
                .map(|(d, c, w)| (MultiIndex::single(c, d), w)),
        )
        .expect("coords < K by construction")
    })
}

fn rel_residual(a: &ChaosExpansion, b: &ChaosExpansion) -> f64 {
    let mut diff = a.clone();
    let mut neg = b.clone();
    neg.scale(-1.0);
    diff.add_assign(&neg).expect("same K");
    diff.norm(0.0) / (1.0 + a.norm(0.0).max(b.norm(0.0)))
}

proptest! {
    #[test]
    fn products_commute_and_distribute(
        x in sparse_expansion(),
        y in sparse_expansion(),
        z in sparse_expansion(),
        p in 0.0f64..3.0,
    ) {
        let algebra = ChaosAlgebra::new(K, 12).unwrap();
        type Prod<'a> = Box<dyn Fn(&ChaosExpansion, &ChaosExpansion) -> ChaosExpansion + 'a>;
        let products: [Prod; 3] = [
            Box::new(|a, b| algebra.multiply(a, b).unwrap()),
            Box::new(|a, b| algebra.wick(a, b).unwrap()),
            Box::new(|a, b| algebra.star(a, b, p).unwrap()),
        ];
        for op in &products {
            prop_assert!(rel_residual(&op(&x, &y), &op(&y, &x)) <= 1e-12);
            let mut yz = y.clone();
            yz.add_assign(&z).unwrap();
            let mut rhs = op(&x, &y);
            rhs.add_assign(&op(&x, &z)).unwrap();
            prop_assert!(rel_residual(&op(&x, &yz), &rhs) <= 1e-12);
        }
        // the interpolated product at exponent zero is the plain product
        let s0 = algebra.star(&x, &y, 0.0).unwrap();
        prop_assert!(rel_residual(&s0, &algebra.multiply(&x, &y).unwrap()) <= 1e-12);
    }

    #[test]
    fn scaling_roundtrip_is_the_identity(
        x in sparse_expansion(),
        p in 0.0f64..4.0,
    ) {
        let algebra = ChaosAlgebra::new(K, 12).unwrap();
        let back = algebra
            .gamma(&algebra.gamma(&x, p).unwrap(), -p)
            .unwrap();
        prop_assert!(rel_residual(&back, &x) <= 1e-12);
    }

    #[test]
    fn delta_norm_decreases_in_the_smoothing_exponent(
        t in 0.0f64..2.0,
        p in 0.75f64..3.0,
        step in 0.25f64..1.0,
    ) {
        let basis = SpectralBasis::new(16).unwrap();
        let lo = basis.delta_norm_sq(t, p).unwrap().with_tail();
        let hi = basis.delta_norm_sq(t, p + step).unwrap().with_tail();
        prop_assert!(hi < lo, "|δ|² must shrink as p grows: {hi} vs {lo}");
    }

    #[test]
    fn grid_nodes_round_trip(
        dt_steps in 1u32..20,
        n in 1usize..50,
        m_frac in 0.0f64..1.0,
    ) {
        let dt = dt_steps as f64 * 0.01;
        let grid = GridSpec::new(dt * n as f64, dt).unwrap();
        prop_assert_eq!(grid.intervals(), n);
        let m = ((n as f64) * m_frac).floor() as usize;
        prop_assert_eq!(grid.node_index(grid.node(m)).unwrap(), m);
    }
}
