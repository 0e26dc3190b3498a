use proptest::prelude::*;

use linefree::constructions::{hypercube, layered, load_reference_set, qr_construction};
use linefree::search::{max_free_exact, SearchConfig};
use linefree::verifier::{find_progression, identity_check, line_profile};
use linefree::{parse_grid, render_grid, AffineMap, PointSet, SpaceSpec};

const SPACES: [(u32, u32); 6] = [(3, 2), (3, 3), (5, 2), (5, 3), (7, 2), (7, 3)];

fn set_in(p: u32, n: u32) -> impl Strategy<Value = PointSet> {
    let space = SpaceSpec::new(p, n).unwrap();
    proptest::collection::vec(any::<bool>(), space.num_points()).prop_map(move |bits| {
        PointSet::from_indices(space, bits.iter().enumerate().filter(|b| *b.1).map(|b| b.0))
            .unwrap()
    })
}

fn any_set() -> impl Strategy<Value = PointSet> {
    proptest::sample::select(SPACES.to_vec()).prop_flat_map(|(p, n)| set_in(p, n))
}

fn matrix(n: usize, p: u32) -> impl Strategy<Value = (Vec<Vec<u32>>, Vec<u32>)> {
    (
        proptest::collection::vec(proptest::collection::vec(0..p, n), n),
        proptest::collection::vec(0..p, n),
    )
}

/// Brute-force check over all (base, step) pairs, independent of the verifier.
fn has_progression(set: &PointSet, k: u32) -> bool {
    let space = set.space();
    let (p, n) = (space.p(), space.n() as usize);
    let mut a = vec![0u32; n];
    let mut d = vec![0u32; n];
    let mut q = vec![0u32; n];
    for base in set.iter() {
        space.coords_into(base, &mut a);
        for step in 1..space.num_points() {
            space.coords_into(step, &mut d);
            let hit = (1..k).all(|t| {
                for i in 0..n {
                    q[i] = (a[i] + t * d[i]) % p;
                }
                set.contains(space.index_of(&q))
            });
            if hit {
                return true;
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn double_counting_identities(set in any_set()) {
        let space = set.space();
        let m = set.len() as u64;
        let x = line_profile(&set).x;
        let per_point = (space.num_points() as u64 - 1) / (space.p() as u64 - 1);
        let inc: u64 = x.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        let pairs: u64 = x.iter().enumerate().map(|(i, &c)| (i as u64) * (i as u64).saturating_sub(1) / 2 * c).sum();
        prop_assert_eq!(x.iter().sum::<u64>(), space.num_lines() as u64);
        prop_assert_eq!(inc, m * per_point);
        prop_assert_eq!(pairs, m * m.saturating_sub(1) / 2);
        prop_assert!(identity_check(&set).is_ok());
    }

    #[test]
    fn verifier_matches_brute_force(set in set_in(5, 2), k in 3u32..=5) {
        let found = find_progression(&set, k).unwrap();
        prop_assert_eq!(found.is_some(), has_progression(&set, k));
        if let Some(w) = found {
            let space = set.space();
            for pt in w.points(&space) {
                prop_assert!(set.contains(pt));
            }
        }
    }

    #[test]
    fn affine_maps_preserve_freeness(set in set_in(5, 3), (m, v) in matrix(3, 5)) {
        let space = set.space();
        if let Ok(map) = AffineMap::new(space, m, v) {
            let image = set.apply_affine(&map).unwrap();
            prop_assert_eq!(image.len(), set.len());
            prop_assert_eq!(find_progression(&image, 5).unwrap().is_none(), find_progression(&set, 5).unwrap().is_none());
        }
    }

    #[test]
    fn grid_round_trip(set in any_set()) {
        let k = set.space().p();
        let doc = parse_grid(&render_grid(&set, k)).unwrap();
        prop_assert_eq!(doc.k, k);
        prop_assert_eq!(doc.set, set);
    }

    #[test]
    fn products_of_free_sets_are_free(a in set_in(3, 1), b in set_in(3, 2)) {
        let prod = a.product(&b).unwrap();
        prop_assert_eq!(prod.len(), a.len() * b.len());
        let a_free = find_progression(&a, 3).unwrap().is_none();
        let b_free = find_progression(&b, 3).unwrap().is_none();
        if a_free && b_free {
            prop_assert!(find_progression(&prod, 3).unwrap().is_none());
        }
    }
}

#[test]
fn affine_images_of_constructions_stay_free() {
    let space = SpaceSpec::new(7, 3).unwrap();
    let qr = qr_construction(7).unwrap();
    let map = AffineMap::new(
        space,
        vec![vec![1, 2, 0], vec![0, 1, 3], vec![4, 0, 1]],
        vec![3, 1, 6],
    )
    .unwrap();
    let image = qr.apply_affine(&map).unwrap();
    assert_eq!(image.len(), 225);
    assert!(find_progression(&image, 7).unwrap().is_none());
}

#[test]
fn construction_products_stay_free() {
    let pairs = [
        (hypercube(5, 1).unwrap(), layered(5, 3).unwrap()),
        (
            load_reference_set("fig70").unwrap(),
            hypercube(5, 1).unwrap(),
        ),
        (hypercube(5, 2).unwrap(), hypercube(5, 2).unwrap()),
    ];
    for (a, b) in pairs {
        let prod = a.product(&b).unwrap();
        assert_eq!(prod.len(), a.len() * b.len());
        assert!(find_progression(&prod, 5).unwrap().is_none());
    }
}

#[test]
fn bundled_and_generated_sets_round_trip() {
    let sets = [
        (load_reference_set("fig70").unwrap(), 5),
        (qr_construction(7).unwrap(), 7),
        (layered(5, 4).unwrap(), 5),
        (hypercube(7, 1).unwrap(), 7),
        (hypercube(3, 1).unwrap(), 3),
    ];
    for (set, k) in sets {
        let doc = parse_grid(&render_grid(&set, k)).unwrap();
        assert_eq!(doc.set, set);
        assert_eq!(doc.k, k);
    }
}

#[test]
fn search_is_thread_count_independent() {
    for (p, n, k) in [(5, 2, 4), (3, 3, 3), (7, 1, 5)] {
        let results: Vec<(usize, PointSet)> = [1, 2, 4]
            .iter()
            .map(|&threads| {
                let r = max_free_exact(
                    p,
                    n,
                    k,
                    &SearchConfig {
                        threads,
                        ..SearchConfig::default()
                    },
                )
                .unwrap();
                assert!(r.optimal);
                (r.size(), r.best)
            })
            .collect();
        assert!(results.windows(2).all(|w| w[0] == w[1]), "({p},{n},{k})");
    }
}
