use nalgebra::DVector;
use parframe::sampling::fibonacci_sphere;
use parframe::seed::rng_from;
use parframe::spectral::{mobius_fixture, spectral_cover, trivial_fixture, SpectralCoverGraph};
use parframe::Tolerance;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_lines_give_a_double_cover(seed in any::<u64>(), n in 20usize..200) {
        let s = fibonacci_sphere(n, 1.0).unwrap();
        let mut rng = rng_from(seed);
        let lines: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5).normalize())
            .collect();
        let c = SpectralCoverGraph::from_eigenlines(&lines, s.edges(), 1, 0.0);
        prop_assert!(c.ambiguous_edges.is_empty());
        prop_assert_eq!(c.base_component_count(), 1);
        prop_assert!((1..=2).contains(&c.component_count()));
        prop_assert!(c.deck_invariant());
        prop_assert!(c.lifts_are_consistent(s.edges()));
        prop_assert_eq!(c.edges.len(), 2 * s.edges().len());
        // a component and its deck image are either equal or disjoint
        for v in 0..c.node_count() {
            let (a, b) = (c.components[v], c.components[v ^ 1]);
            prop_assert!(c.component_count() == 1 || a != b);
        }
    }
}

#[test]
fn covers_are_stable_under_refinement() {
    let tol = Tolerance::default();
    for n in (8..=512).step_by(8) {
        let m = spectral_cover(&mobius_fixture(n).unwrap(), 1, &tol).unwrap();
        let t = spectral_cover(&trivial_fixture(n).unwrap(), 1, &tol).unwrap();
        assert_eq!((m.component_count(), t.component_count()), (1, 2), "N = {n}");
    }
}
