//! Approximate subgroups as decidable membership predicates.
//!
//! A subset `Λ` of a group is an approximate subgroup when it is symmetric,
//! unital and `Λ² ⊆ ΛF` for a finite `F`. Only the first two properties are
//! decidable from a predicate; the covering condition is verified on finite
//! windows and reported with the window radius.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement};
use crate::metric::{Ball, ProperMetric};

/// Cut-and-project data for `Z²` with the lattice `{(m, n, m - n√2)}` and
/// window `W = [-c, c]`, `c = numerator / denominator`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CutProjectSpec {
    pub numerator: u64,
    pub denominator: u64,
}

impl CutProjectSpec {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if numerator == 0 || denominator == 0 {
            return Err(Error::Precondition(format!(
                "cut-and-project half-width {numerator}/{denominator} must be positive"
            )));
        }
        Ok(CutProjectSpec {
            numerator,
            denominator,
        })
    }

    /// Exact test of `|m - n√2| ≤ c`.
    pub fn accepts(&self, m: i64, n: i64) -> bool {
        let q = self.denominator as i128;
        let p = self.numerator as i128;
        let a = q * m as i128;
        let b = q * n as i128;
        // -p ≤ a - b√2 ≤ p
        sign_minus_sqrt2(a - p, b) <= 0 && sign_minus_sqrt2(a + p, b) >= 0
    }
}

/// Sign of `x - y√2`, decided by sign analysis and comparing `x²` with `2y²`.
pub fn sign_minus_sqrt2(x: i128, y: i128) -> i8 {
    if y == 0 {
        return x.signum() as i8;
    }
    if x >= 0 && y < 0 {
        return 1;
    }
    if x <= 0 && y > 0 {
        return -1;
    }
    // same signs; x² = 2y² is impossible for y ≠ 0
    let x2 = x.checked_mul(x).expect("cut-and-project coordinates overflow i128");
    let y2 = y
        .checked_mul(y)
        .and_then(|v| v.checked_mul(2))
        .expect("cut-and-project coordinates overflow i128");
    let magnitude = if x2 > y2 { 1 } else { -1 };
    if x > 0 {
        magnitude
    } else {
        -magnitude
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ApproxKind {
    WholeGroup,
    /// `⟨a⟩ ∪ {b, b⁻¹}` in `BS(1,2)`.
    Bs12Pattern,
    CutAndProject(CutProjectSpec),
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproximateGroup {
    ambient: GroupDescriptor,
    kind: ApproxKind,
    witness: Option<Vec<GroupElement>>,
}

impl ApproximateGroup {
    pub fn whole(ambient: &GroupDescriptor) -> Self {
        ApproximateGroup {
            ambient: ambient.clone(),
            kind: ApproxKind::WholeGroup,
            witness: None,
        }
    }

    pub fn bs12_pattern() -> Self {
        ApproximateGroup {
            ambient: GroupDescriptor::BaumslagSolitar12,
            kind: ApproxKind::Bs12Pattern,
            witness: None,
        }
    }

    pub fn cut_and_project(spec: CutProjectSpec) -> Self {
        ApproximateGroup {
            ambient: GroupDescriptor::Lattice { rank: 2 },
            kind: ApproxKind::CutAndProject(spec),
            witness: None,
        }
    }

    /// Parses `whole`, `bs12-pattern` or `cutproject:c=P/Q` against `ambient`.
    pub fn parse(spec: &str, ambient: &GroupDescriptor) -> Result<Self> {
        let spec = spec.trim();
        let out = match spec {
            "whole" => Self::whole(ambient),
            "bs12-pattern" => Self::bs12_pattern(),
            _ => {
                let c = spec
                    .strip_prefix("cutproject:c=")
                    .ok_or_else(|| Error::parse("approximate group", spec))?;
                let (p, q) = c.split_once('/').unwrap_or((c, "1"));
                let p = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("approximate group", spec))?;
                let q = q
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("approximate group", spec))?;
                Self::cut_and_project(CutProjectSpec::new(p, q)?)
            }
        };
        if &out.ambient != ambient {
            return Err(Error::DescriptorMismatch {
                expected: out.ambient.to_string(),
                found: ambient.to_string(),
            });
        }
        Ok(out)
    }

    pub fn with_witness(mut self, f: Vec<GroupElement>) -> Self {
        self.witness = Some(f);
        self
    }

    pub fn ambient(&self) -> &GroupDescriptor {
        &self.ambient
    }

    pub fn kind(&self) -> &ApproxKind {
        &self.kind
    }

    pub fn witness(&self) -> Option<&[GroupElement]> {
        self.witness.as_deref()
    }

    pub fn is_whole_group(&self) -> bool {
        self.kind == ApproxKind::WholeGroup
    }

    /// Decidable membership in `Λ`.
    pub fn contains(&self, g: &GroupElement) -> bool {
        if !self.ambient.contains(g) {
            return false;
        }
        match (&self.kind, g) {
            (ApproxKind::WholeGroup, _) => true,
            (ApproxKind::Bs12Pattern, GroupElement::Bs(b)) => {
                (b.height == 0 && b.x.to_integer().is_some())
                    || (b.x.is_zero() && b.height.abs() == 1)
            }
            (ApproxKind::CutAndProject(spec), GroupElement::Vector(v)) => spec.accepts(v[0], v[1]),
            _ => false,
        }
    }

    /// `Λ ∩ window`, in window order.
    pub fn members_in(&self, window: &Ball) -> Vec<GroupElement> {
        window
            .members()
            .iter()
            .filter(|g| self.contains(g))
            .cloned()
            .collect()
    }

    /// Elements of `window` that are products of `k` members of
    /// `Λ ∩ window`, with every partial product inside the window.
    ///
    /// The result is monotone in `k` because `e ∈ Λ`.
    pub fn power_window(&self, k: u32, window: &Ball) -> Result<Vec<GroupElement>> {
        if k == 0 {
            return Err(Error::Precondition("power_window needs k ≥ 1".into()));
        }
        let base = self.members_in(window);
        let mut have = vec![false; window.len()];
        for g in &base {
            have[window.position(g).expect("member of window")] = true;
        }
        let mut current: Vec<GroupElement> = base.clone();
        for _ in 1..k {
            let mut next = Vec::new();
            for p in &current {
                for l in &base {
                    let q = self.ambient.compose_unchecked(p, l);
                    if let Some(i) = window.position(&q) {
                        if !have[i] {
                            have[i] = true;
                            next.push(q);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            current.extend(next);
        }
        Ok(window
            .members()
            .iter()
            .zip(have)
            .filter(|(_, h)| *h)
            .map(|(g, _)| g.clone())
            .collect())
    }

    /// Windowed check of Tao's axioms with the finite set `f`.
    pub fn verify_tao_axioms(&self, f: &[GroupElement], window: &Ball) -> Result<TaoReport> {
        if f.is_empty() {
            return Err(Error::Precondition("F must be nonempty".into()));
        }
        for x in f {
            self.ambient.check(x)?;
        }
        let f_inv: Vec<GroupElement> = f.iter().map(|x| self.ambient.invert_unchecked(x)).collect();
        let unital = self.contains(&self.ambient.identity());
        let mut asymmetric = Vec::new();
        for g in window.members() {
            if self.contains(g) != self.contains(&self.ambient.invert_unchecked(g)) {
                asymmetric.push(g.clone());
            }
        }
        let lambda = self.members_in(window);
        let mut failures = Vec::new();
        let mut failure_count = 0usize;
        for l1 in &lambda {
            for l2 in &lambda {
                let p = self.ambient.compose_unchecked(l1, l2);
                let covered = f_inv
                    .iter()
                    .any(|fi| self.contains(&self.ambient.compose_unchecked(&p, fi)));
                if !covered {
                    failure_count += 1;
                    if failures.len() < MAX_WITNESSES {
                        failures.push((l1.clone(), l2.clone()));
                    }
                }
            }
        }
        let pass = unital && failure_count == 0 && asymmetric.is_empty();
        Ok(TaoReport {
            window_radius: window.radius(),
            lambda_in_window: lambda.len(),
            checked_pairs: lambda.len() * lambda.len(),
            unital,
            asymmetric,
            product_failures: failures,
            product_failure_count: failure_count,
            pass,
            f: f.to_vec(),
        })
    }

    /// Greedy set-cover search for `F` inside the ball of `search_radius`
    /// so that `(Λ ∩ window)² ⊆ ΛF`. Evidence relative to the window only.
    pub fn search_tao_witness(
        &self,
        window: &Ball,
        metric: &ProperMetric,
        search_radius: u32,
    ) -> Result<Option<Vec<GroupElement>>> {
        let lambda = self.members_in(window);
        let mut products: Vec<GroupElement> = lambda
            .iter()
            .flat_map(|a| lambda.iter().map(move |b| (a, b)))
            .map(|(a, b)| self.ambient.compose_unchecked(a, b))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        products.sort();
        let candidates = metric.ball_at_identity(search_radius)?;
        let covers: Vec<Vec<usize>> = candidates
            .members()
            .iter()
            .map(|f| {
                let fi = self.ambient.invert_unchecked(f);
                (0..products.len())
                    .filter(|&i| self.contains(&self.ambient.compose_unchecked(&products[i], &fi)))
                    .collect()
            })
            .collect();
        let mut uncovered: HashSet<usize> = (0..products.len()).collect();
        let mut chosen = Vec::new();
        while !uncovered.is_empty() {
            let (best, gain) = covers
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.iter().filter(|p| uncovered.contains(p)).count()))
                .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if gain == 0 {
                return Ok(None);
            }
            for p in &covers[best] {
                uncovered.remove(p);
            }
            chosen.push(candidates.members()[best].clone());
        }
        Ok(Some(chosen))
    }
}

/// Cap on listed counterexamples in reports; counts are always exact.
pub const MAX_WITNESSES: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct TaoReport {
    pub window_radius: u32,
    pub lambda_in_window: usize,
    pub checked_pairs: usize,
    pub unital: bool,
    pub asymmetric: Vec<GroupElement>,
    pub product_failures: Vec<(GroupElement, GroupElement)>,
    pub product_failure_count: usize,
    pub pass: bool,
    pub f: Vec<GroupElement>,
}

/// `{ (m, n) ∈ window : |m - n√2| ≤ c }`, in window order.
pub fn cut_project_members(spec: &CutProjectSpec, window: &Ball) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for g in window.members() {
        match g {
            GroupElement::Vector(v) if v.len() == 2 => {
                if spec.accepts(v[0], v[1]) {
                    out.push(g.clone());
                }
            }
            _ => {
                return Err(Error::KindMismatch {
                    group: "lattice:2".into(),
                    element: g.to_string(),
                })
            }
        }
    }
    Ok(out)
}

impl fmt::Display for ApproximateGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ApproxKind::WholeGroup => f.write_str("whole"),
            ApproxKind::Bs12Pattern => f.write_str("bs12-pattern"),
            ApproxKind::CutAndProject(s) => {
                write!(f, "cutproject:c={}/{}", s.numerator, s.denominator)
            }
        }
    }
}

impl FromStr for CutProjectSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match ApproximateGroup::parse(&format!("cutproject:c={s}"), &GroupDescriptor::Lattice { rank: 2 })?.kind {
            ApproxKind::CutAndProject(spec) => Ok(spec),
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs_metric() -> ProperMetric {
        ProperMetric::standard(&GroupDescriptor::BaumslagSolitar12)
    }

    #[test]
    fn bs_pattern_membership() {
        let l = ApproximateGroup::bs12_pattern();
        let g = l.ambient().clone();
        assert!(l.contains(&g.parse_word("a^5").unwrap()));
        assert!(!l.contains(&g.parse_word("b b").unwrap()));
        assert!(l.contains(&g.parse_word("-b").unwrap()));
        assert!(l.contains(&g.identity()));
        assert!(!l.contains(&g.parse_word("-b a b").unwrap()));
    }

    #[test]
    fn cut_project_membership() {
        let spec = CutProjectSpec::new(1, 2).unwrap();
        assert!(spec.accepts(3, 2));
        assert!(spec.accepts(1, 1));
        assert!(!spec.accepts(1, 0));
        assert!(spec.accepts(0, 0));
        assert!(spec.accepts(-3, -2));
        assert!(!spec.accepts(3, -2));
        assert!(CutProjectSpec::new(0, 1).is_err());
    }

    #[test]
    fn sign_analysis() {
        assert_eq!(sign_minus_sqrt2(3, 2), 1); // 3 - 2.828
        assert_eq!(sign_minus_sqrt2(1, 1), -1);
        assert_eq!(sign_minus_sqrt2(-3, -2), -1);
        assert_eq!(sign_minus_sqrt2(-1, -1), 1);
        assert_eq!(sign_minus_sqrt2(0, 0), 0);
        assert_eq!(sign_minus_sqrt2(0, 1), -1);
        assert_eq!(sign_minus_sqrt2(5, -1), 1);
    }

    #[test]
    fn powers() {
        let z = GroupDescriptor::integers();
        let m = ProperMetric::standard(&z);
        let w = m.ball_at_identity(4).unwrap();
        let l = ApproximateGroup::whole(&z);
        assert_eq!(l.power_window(1, &w).unwrap(), w.members());
        assert_eq!(l.power_window(2, &w).unwrap(), w.members());
        assert!(l.power_window(0, &w).is_err());

        let p = ApproximateGroup::bs12_pattern();
        let w = bs_metric().ball_at_identity(3).unwrap();
        let g = p.ambient();
        let sq = p.power_window(2, &w).unwrap();
        assert!(sq.contains(&g.parse_word("a b").unwrap()));
        assert!(!p.power_window(1, &w).unwrap().contains(&g.parse_word("a b").unwrap()));
    }

    #[test]
    fn tao_axioms_bs_pattern() {
        let p = ApproximateGroup::bs12_pattern();
        let g = p.ambient().clone();
        let w = bs_metric().ball_at_identity(6).unwrap();
        let f: Vec<_> = ["e", "b", "-b", "-b a"].iter().map(|s| g.parse_word(s).unwrap()).collect();
        let report = p.verify_tao_axioms(&f, &w).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.window_radius, 6);

        let only_e = vec![g.identity()];
        let report = p.verify_tao_axioms(&only_e, &w).unwrap();
        assert!(!report.pass);
        let ba = (g.parse_word("b").unwrap(), g.parse_word("a").unwrap());
        assert!(report.product_failures.contains(&ba));
        assert!(p.verify_tao_axioms(&[], &w).is_err());
    }

    #[test]
    fn whole_group_is_a_subgroup() {
        let z2 = GroupDescriptor::lattice(2).unwrap();
        let w = ProperMetric::standard(&z2).ball_at_identity(3).unwrap();
        let l = ApproximateGroup::whole(&z2);
        assert!(l.verify_tao_axioms(&[z2.identity()], &w).unwrap().pass);
    }

    #[test]
    fn parse_specs() {
        let z2 = GroupDescriptor::lattice(2).unwrap();
        let l = ApproximateGroup::parse("cutproject:c=1/2", &z2).unwrap();
        assert_eq!(l.to_string(), "cutproject:c=1/2");
        assert!(ApproximateGroup::parse("bs12-pattern", &z2).is_err());
        assert!(ApproximateGroup::parse("cutproject:c=x", &z2).is_err());
        assert!(ApproximateGroup::parse("whole", &z2).unwrap().is_whole_group());
    }
}
