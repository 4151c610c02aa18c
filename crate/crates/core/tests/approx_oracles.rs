use coarse_core::approx::{ApproximateGroup, CutProjectSpec};
use coarse_core::{GroupDescriptor, GroupElement, ProperMetric};
use num_bigint::BigInt;
use proptest::prelude::*;

const DIGITS: u32 = 50;

/// `|m − n√2| ≤ p/q` decided with a 50-digit truncation of `√2`.
/// Returns `None` when the truncation error could matter.
fn decimal_oracle(m: i64, n: i64, p: u64, q: u64) -> Option<bool> {
    if n == 0 {
        return Some(m.unsigned_abs() * q <= p);
    }
    let ten = BigInt::from(10).pow(DIGITS);
    let sqrt2 = (BigInt::from(2) * &ten * &ten).sqrt(); // ⌊√2·10^50⌋
    let value = BigInt::from(m) * &ten - BigInt::from(n) * &sqrt2;
    let bound = BigInt::from(p) * &ten / BigInt::from(q);
    let slack = BigInt::from(n.unsigned_abs() + 2);
    let mag = if value < BigInt::from(0) { -value } else { value };
    if mag.clone() + &slack <= bound {
        Some(true)
    } else if mag > bound.clone() + &slack {
        Some(false)
    } else {
        None
    }
}

/// Membership in `⟨a⟩ ∪ {b, b⁻¹}` read off the normal form.
fn pattern_oracle(g: &GroupElement) -> bool {
    match g {
        GroupElement::Bs(b) => {
            let integral = b.x.is_zero() || b.x.exponent() >= 0;
            (b.height == 0 && integral) || (b.x.is_zero() && b.height.abs() == 1)
        }
        _ => false,
    }
}

#[test]
fn cut_and_project_matches_decimal_expansion() {
    let mut decided = 0;
    for (p, q) in [(1, 2), (1, 1), (3, 2), (7, 5), (1, 10)] {
        let spec = CutProjectSpec::new(p, q).unwrap();
        for m in -50i64..=50 {
            for n in -50i64..=50 {
                if let Some(expect) = decimal_oracle(m, n, p, q) {
                    assert_eq!(spec.accepts(m, n), expect, "c={p}/{q} at ({m},{n})");
                    decided += 1;
                }
            }
        }
    }
    // No point sits within the truncation error of the boundary.
    assert_eq!(decided, 5 * 101 * 101);
}

#[test]
fn cut_and_project_members_in_a_window() {
    let z2 = GroupDescriptor::lattice(2).unwrap();
    let m = ProperMetric::standard(&z2);
    let window = m.ball_at_identity(20).unwrap();
    let lambda = ApproximateGroup::parse("cutproject:c=1/2", &z2).unwrap();
    let expect: Vec<GroupElement> = window
        .members()
        .iter()
        .filter(|g| {
            let v = z2.lattice_coordinates(g).unwrap();
            decimal_oracle(v[0], v[1], 1, 2).unwrap()
        })
        .cloned()
        .collect();
    assert_eq!(lambda.members_in(&window), expect);
    assert!(!expect.is_empty());
}

#[test]
fn bs_pattern_passes_with_the_classical_witness() {
    let bs: GroupDescriptor = "bs12".parse().unwrap();
    let window = ProperMetric::standard(&bs).ball_at_identity(6).unwrap();
    let lambda = ApproximateGroup::parse("bs12-pattern", &bs).unwrap();
    let f: Vec<GroupElement> = ["e", "b", "-b", "-b a"].iter().map(|w| bs.parse_word(w).unwrap()).collect();
    let report = lambda.verify_tao_axioms(&f, &window).unwrap();
    assert!(report.pass, "{:?}", report.product_failures);
    assert!(report.unital);
    assert!(report.asymmetric.is_empty());

    // Independent count of products (Λ ∩ W)² not covered by Λ·F.
    let members: Vec<&GroupElement> = window.members().iter().filter(|g| pattern_oracle(g)).collect();
    assert_eq!(report.lambda_in_window, members.len());
    let uncovered = |f: &[GroupElement]| {
        let mut n = 0;
        for x in &members {
            for y in &members {
                let p = bs.compose(x, y).unwrap();
                if !f.iter().any(|t| pattern_oracle(&bs.compose(&p, &bs.invert(t).unwrap()).unwrap())) {
                    n += 1;
                }
            }
        }
        n
    };
    assert_eq!(uncovered(&f), 0);
    let trivial = vec![bs.identity()];
    let weak = lambda.verify_tao_axioms(&trivial, &window).unwrap();
    assert!(!weak.pass);
    assert_eq!(weak.product_failure_count, uncovered(&trivial));
    for (x, y) in &weak.product_failures {
        assert!(!pattern_oracle(&bs.compose(x, y).unwrap()));
    }
    // b·a = (2, 1) is neither in ⟨a⟩ nor b^{±1}.
    assert!(!pattern_oracle(&bs.parse_word("b a").unwrap()));
}

#[test]
fn witness_search_for_cut_and_project() {
    let z2 = GroupDescriptor::lattice(2).unwrap();
    let m = ProperMetric::standard(&z2);
    let window = m.ball_at_identity(12).unwrap();
    let lambda = ApproximateGroup::parse("cutproject:c=1/2", &z2).unwrap();
    let f = lambda.search_tao_witness(&window, &m, 6).unwrap().expect("a witness inside radius 6");
    assert!(f.len() <= 8, "{f:?}");
    let report = lambda.verify_tao_axioms(&f, &window).unwrap();
    assert!(report.pass);
}

#[test]
fn approximate_groups_are_symmetric_and_unital() {
    let cases = [("bs12", "bs12-pattern"), ("lattice:2", "cutproject:c=1/2"), ("lattice:2", "cutproject:c=3/2"), ("free:2", "whole")];
    for (g, l) in cases {
        let g: GroupDescriptor = g.parse().unwrap();
        let lambda = ApproximateGroup::parse(l, &g).unwrap();
        assert!(lambda.contains(&g.identity()));
        let window = ProperMetric::standard(&g).ball_at_identity(5).unwrap();
        for x in window.members() {
            assert_eq!(lambda.contains(x), lambda.contains(&g.invert(x).unwrap()), "{l} at {x}");
        }
        let mut prev = 0;
        for k in 1..=3 {
            let p = lambda.power_window(k, &window).unwrap();
            assert!(p.len() >= prev);
            prev = p.len();
        }
        assert_eq!(lambda.to_string(), l);
    }
    let z2 = GroupDescriptor::lattice(2).unwrap();
    assert!(ApproximateGroup::parse("bs12-pattern", &z2).is_err());
    assert!(ApproximateGroup::parse("cutproject:c=0/1", &z2).is_err());
    assert!(ApproximateGroup::parse("cutproject:c=x", &z2).is_err());
}

proptest! {
    #[test]
    fn acceptance_is_monotone_in_the_width(m in -400i64..400, n in -400i64..400, p in 1u64..20, q in 1u64..20) {
        let narrow = CutProjectSpec::new(p, q + 1).unwrap();
        let wide = CutProjectSpec::new(p, q).unwrap();
        prop_assert!(!narrow.accepts(m, n) || wide.accepts(m, n));
        prop_assert_eq!(wide.accepts(m, n), wide.accepts(-m, -n));
        if let Some(e) = decimal_oracle(m, n, p, q) {
            prop_assert_eq!(wide.accepts(m, n), e);
        }
    }
}
