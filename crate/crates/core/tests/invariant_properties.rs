use parframe::invariants::{
    decide_d_plus_1, is_odd_prime, lens_search, lens_stably_parallelizable, Existence, LensSpace, ManifoldDescriptor,
};
use proptest::prelude::*;

/// Direct evaluation: power sums by repeated multiplication.
fn brute_force(p: u64, b: &[u64]) -> bool {
    let n = b.len() as u64 - 1;
    if n >= p {
        return false;
    }
    (1..=n / 2).all(|j| {
        let total: u64 = b
            .iter()
            .map(|&x| {
                let mut v = 1u64;
                for _ in 0..2 * j {
                    v = v * x % p;
                }
                v
            })
            .sum();
        total % p == 0
    })
}

fn tuples(p: u64, len: usize) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t| (1..p).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

#[test]
fn lens_criterion_matches_brute_force() {
    for p in [3u64, 5, 7, 11, 13] {
        for n in 0..=4 {
            for b in tuples(p, n + 1) {
                let l = LensSpace::new(p, b.clone()).unwrap();
                assert_eq!(lens_stably_parallelizable(&l), brute_force(p, &b), "p={p} b={b:?}");
            }
        }
    }
}

#[test]
fn three_dimensional_lens_spaces_are_all_stably_parallelizable() {
    for p in (3u64..60).filter(|&p| is_odd_prime(p)) {
        for b in tuples(p.min(13), 2) {
            assert!(lens_stably_parallelizable(&LensSpace::new(p, b).unwrap()));
        }
    }
}

#[test]
fn witnesses_exist_when_p_is_one_mod_n_plus_one() {
    for n in 1usize..=3 {
        let p = (3u64..).find(|&p| is_odd_prime(p) && p % (n as u64 + 1) == 1 && p > n as u64).unwrap();
        let w = lens_search(p, n).unwrap().unwrap_or_else(|| panic!("no witness for p={p}, n={n}"));
        assert_eq!(w.n(), n);
        assert!(brute_force(p, w.weights()));
    }
}

fn refinements(m: &ManifoldDescriptor) -> Vec<ManifoldDescriptor> {
    let mut out = Vec::new();
    let opt = |f: Option<bool>| -> Vec<Option<bool>> { if f.is_some() { vec![f] } else { vec![None, Some(false), Some(true)] } };
    let flag = |f: bool| -> Vec<bool> { if f { vec![true] } else { vec![false, true] } };
    for orientable in flag(m.orientable) {
        for sp in opt(m.stably_parallelizable) {
            for h1 in opt(m.h1_z2_trivial) {
                for w2 in opt(m.w2_zero) {
                    for p1 in opt(m.p1_zero) {
                        for hs in flag(m.homology_sphere) {
                            for cs in flag(m.closed_surface) {
                                out.push(ManifoldDescriptor {
                                    dim: m.dim,
                                    orientable,
                                    stably_parallelizable: sp,
                                    h1_z2_trivial: h1,
                                    w2_zero: w2,
                                    p1_zero: p1,
                                    homology_sphere: hs,
                                    closed_surface: cs,
                                    betti: None,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn decisions_are_monotone_in_information() {
    for dim in 1..=4 {
        let all = refinements(&ManifoldDescriptor::new(dim));
        for m in &all {
            let Ok(d) = decide_d_plus_1(m) else { continue };
            if d.verdict == Existence::Unknown {
                continue;
            }
            for r in refinements(m) {
                if let Ok(e) = decide_d_plus_1(&r) {
                    assert_eq!(e.verdict, d.verdict, "{m:?} -> {r:?}");
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn search_result_is_first_in_lex_order(n in 1usize..=3, pi in 0usize..4) {
        let p = [3u64, 5, 7, 11][pi];
        let found = lens_search(p, n).unwrap();
        let first = tuples(p, n + 1).into_iter().find(|b| brute_force(p, b));
        prop_assert_eq!(found.map(|l| l.weights().to_vec()), first);
    }
}
