//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use coarse_core::approx::ApproximateGroup;
use coarse_core::asdim::{greedy_cover, hurewicz_report, lattice_cover, pullback_assembly, validate_coloring};
use coarse_core::coarse_check::{containment_almost, lipschitz_scan, r_neighborhood_absorption, symmetry_gap};
use coarse_core::instances::{bundled_quasimorphisms, instance, INSTANCES};
use coarse_core::quasimorphism::{Homomorphism, Quasimorphism};
use coarse_core::{GroupDescriptor, GroupElement, ProperMetric};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn left_defect(f: &Quasimorphism, radius: u32) -> Result<BTreeSet<GroupElement>, String> {
    let w = ProperMetric::standard(f.domain()).ball_at_identity(radius).map_err(e)?;
    let cm = ProperMetric::standard(f.codomain());
    Ok(f.defect_observed(&w, &cm).map_err(e)?.left_elements().into_iter().collect())
}

fn c1_group_axioms() -> Check {
    let g: GroupDescriptor = "bs12".parse().map_err(e)?;
    let a = g.generator(0).map_err(e)?;
    let b = g.generator(1).map_err(e)?;
    let bab = g.compose(&g.compose(&b, &a).map_err(e)?, &g.invert(&b).map_err(e)?).map_err(e)?;
    ensure(bab == g.compose(&a, &a).map_err(e)?, "b a b⁻¹ ≠ a²")?;
    let ball = ProperMetric::standard(&g).ball_at_identity(3).map_err(e)?;
    let pts = ball.members();
    let mut triples = 0usize;
    for x in pts {
        for y in pts {
            let xy = g.compose(x, y).map_err(e)?;
            for z in pts {
                let l = g.compose(&xy, z).map_err(e)?;
                let r = g.compose(x, &g.compose(y, z).map_err(e)?).map_err(e)?;
                ensure(l == r, format!("associativity fails at ({x}, {y}, {z})"))?;
                triples += 1;
            }
        }
    }
    Ok(format!("{} elements, {triples} triples", pts.len()))
}

fn c2_defect_sets() -> Check {
    let fd = instance("floordiv-z").map_err(e)?;
    let got: BTreeSet<i64> = left_defect(&fd.f, 50)?.iter().filter_map(GroupElement::as_integer).collect();
    let mut oracle = BTreeSet::new();
    for x in -50i64..=50 {
        for y in -50i64..=50 {
            oracle.insert((x + y).div_euclid(2) - x.div_euclid(2) - y.div_euclid(2));
        }
    }
    ensure(got == oracle && got == BTreeSet::from([0, 1]), format!("floor division defect {got:?}"))?;

    let z = GroupDescriptor::integers();
    let z2 = GroupDescriptor::lattice(2).map_err(e)?;
    let extra = Quasimorphism::homomorphism(
        Homomorphism::new(&z2, &z, vec![GroupElement::integer(3), GroupElement::integer(-2)]).map_err(e)?,
    );
    let homs = [instance("hom-z2").map_err(e)?.f, instance("height-bs12").map_err(e)?.f, extra];
    for h in &homs {
        let d = left_defect(h, 4)?;
        ensure(d == BTreeSet::from([h.codomain().identity()]), format!("{h}: defect {d:?}"))?;
    }

    let brooks = instance("brooks-f2").map_err(e)?.f;
    let sets: Vec<BTreeSet<GroupElement>> = [4, 5, 6].iter().map(|&r| left_defect(&brooks, r)).collect::<Result<_, _>>()?;
    ensure(sets[0] == sets[1] && sets[1] == sets[2], "Brooks defect changes between radii 4, 5, 6")?;
    Ok(format!("floordiv {{0,1}}, {} homomorphisms {{e}}, Brooks |D| = {} at 4,5,6", homs.len(), sets[0].len()))
}

fn c3_distance_identity() -> Check {
    let all = bundled_quasimorphisms().map_err(e)?;
    let mut pairs = 0usize;
    for (name, f) in &all {
        let g = f.domain();
        let h = f.codomain();
        let dm = ProperMetric::standard(g);
        let cm = ProperMetric::standard(h);
        let w = dm.ball_at_identity(4).map_err(e)?;
        let vals: Vec<GroupElement> = w.members().iter().map(|x| f.eval(x)).collect::<Result<_, _>>().map_err(e)?;
        for (x, fx) in w.members().iter().zip(&vals) {
            let fx_inv = h.invert(fx).map_err(e)?;
            for (y, fy) in w.members().iter().zip(&vals) {
                let fxy = f.eval(&g.compose(x, y).map_err(e)?).map_err(e)?;
                let lhs = cm.distance(&fxy, &h.compose(fx, fy).map_err(e)?).map_err(e)?;
                let z = h.compose(&h.compose(&h.invert(fy).map_err(e)?, &fx_inv).map_err(e)?, &fxy).map_err(e)?;
                let rhs = cm.norm(&z).map_err(e)?;
                ensure(lhs == rhs, format!("{name}: {lhs} ≠ {rhs} at ({x}, {y})"))?;
                pairs += 1;
            }
        }
        let report = f.bounded_distance_check(&w, &cm).map_err(e)?;
        ensure(report.identity_failure_count == 0, format!("{name}: library check disagrees"))?;
    }
    Ok(format!("{} maps, {pairs} pairs", all.len()))
}

fn c4_lipschitz_chain() -> Check {
    let ts: Vec<u32> = (1..=6).collect();
    let mut rows = 0;
    for spec in INSTANCES {
        let inst = spec.build().map_err(e)?;
        let d = inst.defect().map_err(e)?;
        let scan = lipschitz_scan(&inst, &d, &ts).map_err(e)?;
        for r in &scan.rows {
            ensure(r.s_obs <= 3 * d.c + r.s_ball, format!("{} t={}: {} > 3·{} + {}", spec.name, r.t, r.s_obs, d.c, r.s_ball))?;
            rows += 1;
        }
        let gap = symmetry_gap(&inst, &d).map_err(e)?;
        ensure(gap.gap <= 2 * d.c, format!("{}: symmetry gap {} > 2·{}", spec.name, gap.gap, d.c))?;
    }
    Ok(format!("{} instances, {rows} (instance, t) rows", INSTANCES.len()))
}

fn c5_tao_axiom() -> Check {
    let bs: GroupDescriptor = "bs12".parse().map_err(e)?;
    let lambda = ApproximateGroup::bs12_pattern();
    let f: Vec<GroupElement> = ["e", "b", "-b", "-b a"].iter().map(|w| bs.parse_word(w)).collect::<Result<_, _>>().map_err(e)?;
    let w = ProperMetric::standard(&bs).ball_at_identity(6).map_err(e)?;
    let r = lambda.verify_tao_axioms(&f, &w).map_err(e)?;
    ensure(r.pass, format!("{} uncovered products", r.product_failure_count))?;
    Ok(format!("|Λ ∩ B(6)| = {}, {} pairs", r.lambda_in_window, r.checked_pairs))
}

fn c6_containments() -> Check {
    let mut out = Vec::new();
    for name in ["hom-z2", "floordiv-z", "floordiv-z2"] {
        let base = instance(name).map_err(e)?;
        let d = base.defect().map_err(e)?;
        for r in [2u32, 4] {
            let inst = base.clone().with_window(12.max(4 * r)).with_scale(r);
            let a = containment_almost(&inst, &d).map_err(e)?;
            ensure(a.right_radius == 4 * a.left_radius && a.left_radius >= 12, "window hygiene")?;
            ensure(a.pass, format!("{name} r={r}: {} containment failures", a.failure_count))?;
            let b = r_neighborhood_absorption(&inst, &d).map_err(e)?;
            ensure(b.right_radius == 4 * b.left_radius, "window hygiene")?;
            ensure(b.pass, format!("{name} r={r}: {} absorption failures", b.failure_count))?;
            out.push(format!("{name}@{r}:R={}", b.big_r));
        }
    }
    Ok(out.join(" "))
}

fn c7_lattice_covers() -> Check {
    let mut out = Vec::new();
    for n in [1usize, 2] {
        let g = GroupDescriptor::lattice(n).map_err(e)?;
        let m = ProperMetric::standard(&g);
        let w = m.ball_at_identity(60).map_err(e)?;
        for r in [4u32, 8, 16] {
            let c = lattice_cover(n, &w, r, &m).map_err(e)?;
            let v = validate_coloring(&c, &m).map_err(e)?;
            ensure(c.colors() == n + 1, format!("Z^{n} r={r}: {} colors", c.colors()))?;
            ensure(c.bound <= 8 * r, format!("Z^{n} r={r}: D = {}", c.bound))?;
            ensure(v.valid, format!("Z^{n} r={r}: {} violations", v.violation_count))?;
            out.push(format!("Z^{n}@{r}:D={}", c.bound));
        }
    }
    Ok(out.join(" "))
}

fn c8_pullback() -> Check {
    let inst = instance("floordiv-z2").map_err(e)?;
    let d = inst.defect().map_err(e)?;
    let at = inst.clone().with_window(60);
    let scan = lipschitz_scan(&at, &d, &[2]).map_err(e)?;
    let r_y = scan.rows[0].s_obs;
    let xw = at.left_window().map_err(e)?;
    let mut image: Vec<GroupElement> = xw.members().iter().map(|x| at.f.eval(x)).collect::<Result<_, _>>().map_err(e)?;
    image.sort();
    image.dedup();
    let cover_y = greedy_cover(&image, &at.codomain_metric, r_y, usize::MAX, 8 * r_y, 0).map_err(e)?;
    let pb = pullback_assembly(&at, &xw, &cover_y.coloring, 2, 16, 0).map_err(e)?;
    ensure(pb.valid, format!("{} violations", pb.validation.violation_count))?;
    ensure(pb.colors <= 4, format!("{} colors", pb.colors))?;
    Ok(format!("r_Y = s_obs(2) = {r_y}, {} colors, D = {}", pb.colors, pb.diameter))
}

fn c9_hurewicz() -> Check {
    let mut out = Vec::new();
    for name in ["hom-z2", "floordiv-z2", "floordiv-z"] {
        let inst = instance(name).map_err(e)?;
        let d = inst.defect().map_err(e)?;
        let rep = hurewicz_report(&inst, &d, &[2, 4, 8], 60, 8, 0).map_err(e)?;
        for row in &rep.rows {
            ensure(
                row.colors_x + 1 <= row.colors_y + row.colors_k,
                format!("{name} r={}: {} > {} + {} − 1", row.r, row.colors_x, row.colors_y, row.colors_k),
            )?;
            out.push(format!("{name}@{}:{}≤{}", row.r, row.colors_x, row.colors_y + row.colors_k - 1));
        }
    }
    Ok(out.join(" "))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(e)?
        .map(|entry| {
            let p = entry.map_err(e)?.path();
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, std::fs::read(&p).map_err(e)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn c10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(e)?;
    let mut snaps = Vec::new();
    for (i, workers) in ["2", "2", "1"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_coarse-forge"))
            .args(["all", "--instance", "floordiv-z2", "--seed", "17", "--workers", workers, "--out"])
            .arg(&dir)
            .output()
            .map_err(e)?;
        ensure(status.status.code() == Some(0), format!("run {i} exited with {:?}", status.status.code()))?;
        snaps.push(snapshot(&dir)?);
    }
    ensure(!snaps[0].is_empty(), "no report files")?;
    ensure(snaps[0] == snaps[1], "repeated runs differ")?;
    ensure(snaps[0] == snaps[2], "worker count changes the reports")?;
    Ok(format!("{} files identical across 3 runs", snaps[0].len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 10] = [
        ("BS(1,2) relation and associativity on the radius-3 ball", Duration::from_secs(1), c1_group_axioms),
        ("defect sets: floordiv {0,1}, homomorphisms {e}, Brooks stable", Duration::from_secs(30), c2_defect_sets),
        ("d′(f(xy), f(x)f(y)) = ‖left defect‖ on radius-4 windows", Duration::from_secs(30), c3_distance_identity),
        ("s_obs(t) ≤ 3C + S(t) and symmetry gap ≤ 2C for t = 1..6", Duration::from_secs(60), c4_lipschitz_chain),
        ("Tao axioms for the BS(1,2) pattern with F = {e, b, b⁻¹, b⁻¹a} at ρ = 6", Duration::from_secs(30), c5_tao_axiom),
        ("fiber containment and absorption at r ∈ {2,4}, ρ_right = 4ρ_left", Duration::from_secs(120), c6_containments),
        ("lattice covers: 2 and 3 colors, D ≤ 8r, r ∈ {4,8,16}, ρ = 60", Duration::from_secs(60), c7_lattice_covers),
        ("pullback cover for floordiv Z² → Z at r_X = 2: valid, ≤ 4 colors", Duration::from_secs(60), c8_pullback),
        ("colors_X ≤ colors_Y + colors_K − 1 at r ∈ {2,4,8}, ρ = 60", Duration::from_secs(300), c9_hurewicz),
        ("repeated `all` runs give byte-identical reports", Duration::from_secs(300), c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took longer than {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} [PRIMARY] {}: {} ({:.2?}, limit {:?}, exact) {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            took,
            limit,
            detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
