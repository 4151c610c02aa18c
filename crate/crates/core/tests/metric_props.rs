use std::collections::{BTreeSet, HashMap};

use coarse_core::metric::metric_compare;
use coarse_core::{GroupDescriptor, GroupElement, Letter, ProperMetric};
use proptest::prelude::*;

fn groups() -> Vec<GroupDescriptor> {
    ["free:2", "lattice:2", "bs12", "product(free:1,lattice:1)"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn letters() -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0..2usize, any::<bool>()).prop_map(|(g, i)| Letter::new(g, i)), 0..7)
}

/// Naive union-find over all pairs at distance `≤ r`.
fn components_oracle(m: &ProperMetric, pts: &[GroupElement], r: u32) -> BTreeSet<BTreeSet<GroupElement>> {
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            i = p[i];
        }
        i
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if m.distance(&pts[i], &pts[j]).unwrap() <= r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: HashMap<usize, BTreeSet<GroupElement>> = HashMap::new();
    for i in 0..pts.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(pts[i].clone());
    }
    groups.into_values().collect()
}

#[test]
fn triangle_inequality_and_left_invariance_on_radius_four_windows() {
    for g in groups() {
        let m = ProperMetric::standard(&g);
        let ball = m.ball_at_identity(2).unwrap();
        let pts = ball.members();
        let shift = m.ball_at_identity(4).unwrap().members().last().unwrap().clone();
        for x in pts {
            assert_eq!(m.distance(x, x).unwrap(), 0);
            for y in pts {
                let dxy = m.distance(x, y).unwrap();
                assert_eq!(dxy, m.distance(y, x).unwrap());
                let sx = g.compose(&shift, x).unwrap();
                let sy = g.compose(&shift, y).unwrap();
                assert_eq!(dxy, m.distance(&sx, &sy).unwrap(), "{g}");
                for z in pts {
                    assert!(m.distance(x, z).unwrap() <= dxy + m.distance(y, z).unwrap());
                }
            }
        }
    }
}

#[test]
fn balls_are_nested_and_ordered() {
    for g in groups() {
        let m = ProperMetric::standard(&g);
        let mut prev: Vec<GroupElement> = Vec::new();
        for r in 0..=4 {
            let ball = m.ball_at_identity(r).unwrap();
            assert!(ball.len() >= prev.len());
            assert_eq!(&ball.members()[..prev.len()], &prev[..], "{g} radius {r}");
            for (x, d) in ball.members().iter().zip(ball.distances()) {
                assert_eq!(m.norm(x).unwrap(), *d);
                assert!(*d <= r);
            }
            for w in ball.distances().windows(2) {
                assert!(w[0] <= w[1]);
            }
            prev = ball.members().to_vec();
        }
    }
    // Free group of rank 2: 1 + 4·(3^r − 1)/2 elements.
    let f2 = ProperMetric::standard(&GroupDescriptor::free(2).unwrap());
    for r in 0..=5u32 {
        assert_eq!(f2.ball_at_identity(r).unwrap().len(), 1 + 2 * (3usize.pow(r) - 1));
    }
    // Z²: 2r² + 2r + 1 lattice points.
    let z2 = ProperMetric::standard(&GroupDescriptor::lattice(2).unwrap());
    for r in 0..=10usize {
        assert_eq!(z2.ball_at_identity(r as u32).unwrap().len(), 2 * r * r + 2 * r + 1);
    }
}

#[test]
fn ball_around_a_center_is_the_translate() {
    let g: GroupDescriptor = "bs12".parse().unwrap();
    let m = ProperMetric::standard(&g);
    let c = g.parse_word("a b a").unwrap();
    let around = m.ball(&c, 3).unwrap();
    let translated: BTreeSet<GroupElement> = m
        .ball_at_identity(3)
        .unwrap()
        .members()
        .iter()
        .map(|x| g.compose(&c, x).unwrap())
        .collect();
    let got: BTreeSet<GroupElement> = around.members().iter().cloned().collect();
    assert_eq!(got, translated);
}

#[test]
fn components_agree_with_union_find() {
    for g in groups() {
        let m = ProperMetric::standard(&g);
        let ball = m.ball_at_identity(3).unwrap();
        // An irregular subset: every third point.
        let pts: Vec<GroupElement> = ball.members().iter().step_by(3).cloned().collect();
        for r in 1..=3 {
            let got: BTreeSet<BTreeSet<GroupElement>> = m
                .r_components(&pts, r)
                .unwrap()
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect();
            assert_eq!(got, components_oracle(&m, &pts, r), "{g} r={r}");
        }
    }
}

#[test]
fn diameter_and_neighborhood_match_brute_force() {
    for g in groups() {
        let m = ProperMetric::standard(&g);
        let window = m.ball_at_identity(3).unwrap();
        let pts: Vec<GroupElement> = window.members().iter().step_by(5).cloned().collect();
        let mut brute = 0;
        for x in &pts {
            for y in &pts {
                brute = brute.max(m.distance(x, y).unwrap());
            }
        }
        assert_eq!(m.diameter(&pts).unwrap(), brute, "{g}");
        assert_eq!(m.diameter_within(&pts, brute).unwrap(), Some(brute));
        if brute > 0 {
            assert_eq!(m.diameter_within(&pts, brute - 1).unwrap(), None);
        }
        let set = &pts[..2.min(pts.len())];
        let nb = m.neighborhood(set, 2, &window).unwrap();
        let expect: Vec<GroupElement> = window
            .members()
            .iter()
            .filter(|x| set.iter().any(|a| m.distance(x, a).unwrap() < 2))
            .cloned()
            .collect();
        assert_eq!(nb, expect, "{g}");
    }
}

#[test]
fn comparing_word_metrics_on_z() {
    let z = GroupDescriptor::integers();
    let m1 = ProperMetric::standard(&z);
    let m2 = ProperMetric::with_generators(&z, vec![GroupElement::integer(1), GroupElement::integer(2)]).unwrap();
    let window = m1.ball_at_identity(20).unwrap();
    let p = metric_compare(&m1, &m2, &window).unwrap();
    for t in 0..=40u32 {
        assert!(p.lower_at(t).unwrap() >= t.div_ceil(2), "t={t}");
        assert!(p.upper_at(t).unwrap() <= t);
    }
    assert_eq!(p.lower_at(40), Some(20));
    assert_eq!(p.coarse_surjectivity, Some(0));
}

#[test]
fn comparing_word_metrics_on_f2() {
    let f2 = GroupDescriptor::free(2).unwrap();
    let m1 = ProperMetric::standard(&f2);
    let ab = f2.parse_word("a b").unwrap();
    let gens = vec![f2.generator(0).unwrap(), f2.generator(1).unwrap(), ab.clone()];
    let m2 = ProperMetric::with_generators(&f2, gens).unwrap();
    assert_eq!(m2.norm(&ab).unwrap(), 1);
    assert_eq!(m2.norm(&f2.parse_word("a b a b").unwrap()).unwrap(), 2);
    let window = m1.ball_at_identity(3).unwrap();
    let p = metric_compare(&m1, &m2, &window).unwrap();
    for t in 0..=6u32 {
        assert!(p.upper_at(t).unwrap() <= t);
        assert!(p.lower_at(t).unwrap() >= t.div_ceil(2));
    }
}

proptest! {
    #[test]
    fn norm_is_symmetric_and_subadditive(u in letters(), v in letters()) {
        for g in groups() {
            let m = ProperMetric::standard(&g);
            let x = g.evaluate_word(&u).unwrap();
            let y = g.evaluate_word(&v).unwrap();
            let nx = m.norm(&x).unwrap();
            prop_assert!(nx as usize <= u.len());
            prop_assert_eq!(nx, m.norm(&g.invert(&x).unwrap()).unwrap());
            prop_assert!(m.norm(&g.compose(&x, &y).unwrap()).unwrap() <= nx + m.norm(&y).unwrap());
        }
    }

    #[test]
    fn components_partition_the_points(r in 1u32..4, step in 1usize..6) {
        let g = GroupDescriptor::lattice(2).unwrap();
        let m = ProperMetric::standard(&g);
        let pts: Vec<GroupElement> = m.ball_at_identity(6).unwrap().members().iter().step_by(step).cloned().collect();
        let comps = m.r_components(&pts, r).unwrap();
        let total: usize = comps.iter().map(Vec::len).sum();
        prop_assert_eq!(total, pts.len());
        let all: BTreeSet<&GroupElement> = comps.iter().flatten().collect();
        prop_assert_eq!(all.len(), pts.len());
        for (i, a) in comps.iter().enumerate() {
            for b in &comps[i + 1..] {
                for x in a {
                    for y in b {
                        prop_assert!(m.distance(x, y).unwrap() > r);
                    }
                }
            }
        }
    }
}
