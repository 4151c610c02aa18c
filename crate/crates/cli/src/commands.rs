//! One function per subcommand, each producing a report section.

use std::collections::BTreeMap;
use std::sync::Arc;

use coarse_core::approx::ApproximateGroup;
use coarse_core::asdim::{greedy_cover, hurewicz_report, lattice_cover, validate_coloring, CoverColoring};
use coarse_core::coarse_check::{
    chain_facts, containment_almost, fiber_family, kernel_targets, kernel_window, lipschitz_scan, r_neighborhood_absorption,
    symmetry_gap, TheoremInstance,
};
use coarse_core::quasimorphism::{DefectReport, Quasimorphism};
use coarse_core::{GroupDescriptor, GroupElement, ProperMetric};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};
use crate::output::{Section, Table};
use crate::CliError;

fn config_error(what: &str) -> CliError {
    CliError::Config(format!("{what} is required for this command"))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn group(cfg: &ExperimentConfig) -> Result<GroupDescriptor, CliError> {
    Ok(cfg.group.as_deref().ok_or_else(|| config_error("group"))?.parse()?)
}

fn metric(cfg: &ExperimentConfig, g: &GroupDescriptor) -> ProperMetric {
    ProperMetric::standard(g).with_budget(cfg.budget)
}

fn quasimorphism(cfg: &ExperimentConfig, domain: &GroupDescriptor) -> Result<Quasimorphism, CliError> {
    let spec = cfg.qm.as_deref().ok_or_else(|| config_error("qm"))?;
    let codomain: Option<GroupDescriptor> = cfg.codomain.as_deref().map(str::parse).transpose()?;
    Ok(Quasimorphism::parse(spec, domain, codomain.as_ref())?)
}

fn theorem_instance(cfg: &ExperimentConfig, window: u32, scale: u32) -> Result<TheoremInstance, CliError> {
    let g = group(cfg)?;
    let f = quasimorphism(cfg, &g)?;
    let xi = ApproximateGroup::parse(cfg.approx.as_deref().unwrap_or("whole"), f.domain())?;
    let lambda = ApproximateGroup::parse(cfg.lambda.as_deref().unwrap_or("whole"), f.codomain())?;
    let name = cfg.instance.clone().unwrap_or_else(|| "custom".into());
    let mut inst = TheoremInstance::new(name, f, xi, lambda, window, scale)?;
    inst.domain_metric = Arc::new(metric(cfg, inst.f.domain()));
    inst.codomain_metric = Arc::new(metric(cfg, inst.f.codomain()));
    Ok(inst)
}

fn defect_window(cfg: &ExperimentConfig) -> u32 {
    cfg.defect_window.unwrap_or(cfg.window)
}

/// The defect set every theorem check is run against.
fn theorem_defect(cfg: &ExperimentConfig) -> Result<(TheoremInstance, DefectReport), CliError> {
    let inst = theorem_instance(cfg, defect_window(cfg), 1)?;
    let d = inst.defect()?;
    Ok((inst, d))
}

fn sorted(set: impl IntoIterator<Item = GroupElement>) -> Vec<GroupElement> {
    let mut v: Vec<GroupElement> = set.into_iter().collect();
    v.sort();
    v
}

pub fn ball(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let g = group(cfg)?;
    let m = metric(cfg, &g);
    let b = m.ball_at_identity(cfg.window)?;
    let mut spheres: BTreeMap<u32, usize> = BTreeMap::new();
    for d in b.distances() {
        *spheres.entry(*d).or_default() += 1;
    }
    let mut table = Table::new("ball", &["element", "norm"]);
    for (x, d) in b.members().iter().zip(b.distances()) {
        table.push(vec![g.render(x), d.to_string()]);
    }
    let report = json!({
        "group": g.to_string(),
        "radius": cfg.window,
        "norm_mode": m.mode(),
        "size": b.len(),
        "sphere_sizes": spheres,
    });
    Ok(Section::new("ball", true, report, vec![table]))
}

pub fn defect(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let g = group(cfg)?;
    let f = quasimorphism(cfg, &g)?;
    let dm = metric(cfg, f.domain());
    let cm = metric(cfg, f.codomain());
    let window = dm.ball_at_identity(cfg.window)?;
    let report = f.defect_observed(&window, &cm)?;
    let membership = f.check_defect_membership(&report.left_elements(), &window)?;
    let identity = f.bounded_distance_check(&window, &cm)?;
    let radii: Vec<u32> = if cfg.window > 0 { vec![cfg.window - 1, cfg.window] } else { vec![0] };
    let stabilization = f.defect_stabilization(&dm, &cm, &radii)?;
    let pass = membership.pass && identity.identity_failure_count == 0;
    let mut table = Table::new("defect", &["side", "element", "norm", "x", "y"]);
    for (side, entries) in [("left", &report.left_defect), ("right", &report.right_defect)] {
        for e in entries {
            table.push(vec![
                side.into(),
                f.codomain().render(&e.element),
                cm.norm(&e.element)?.to_string(),
                g.render(&e.x),
                g.render(&e.y),
            ]);
        }
    }
    let value = json!({
        "quasimorphism": f.to_string(),
        "domain": f.domain().to_string(),
        "codomain": f.codomain().to_string(),
        "defect": to_value(&report)?,
        "membership": to_value(&membership)?,
        "identity_check": to_value(&identity)?,
        "stabilization": to_value(&stabilization)?,
    });
    Ok(Section::new("defect", pass, value, vec![table]))
}

pub fn approx_check(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let g = group(cfg)?;
    let m = metric(cfg, &g);
    let lambda = ApproximateGroup::parse(cfg.approx.as_deref().unwrap_or("whole"), &g)?;
    let window = m.ball_at_identity(cfg.window)?;
    let (witness, source) = match &cfg.witness {
        Some(words) => {
            let f: Vec<GroupElement> = words.iter().map(|w| g.parse_element(w)).collect::<Result<_, _>>()?;
            (Some(f), "given")
        }
        None => (lambda.search_tao_witness(&window, &m, cfg.search_radius)?, "searched"),
    };
    let mut table = Table::new("failures", &["lambda1", "lambda2"]);
    let (pass, report) = match &witness {
        Some(f) => {
            let r = lambda.verify_tao_axioms(f, &window)?;
            for (a, b) in &r.product_failures {
                table.push(vec![g.render(a), g.render(b)]);
            }
            (r.pass, Some(r))
        }
        None => (false, None),
    };
    let value = json!({
        "approximate_group": lambda.to_string(),
        "ambient": g.to_string(),
        "witness_source": source,
        "witness": witness.as_ref().map(|f| f.iter().map(|x| g.render(x)).collect::<Vec<_>>()),
        "tao": to_value(&report)?,
    });
    Ok(Section::new("approx-check", pass, value, vec![table]))
}

pub fn lipschitz(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let (base, d) = theorem_defect(cfg)?;
    let inst = base.with_window(cfg.window);
    let scan = lipschitz_scan(&inst, &d, &cfg.t_values)?;
    let sym = symmetry_gap(&inst, &d)?;
    let chain = chain_facts(&inst, &d)?;
    let mut table = Table::new("lipschitz", &["t", "s_obs", "s_ball", "c_obs", "bound", "pass"]);
    for r in &scan.rows {
        table.push(vec![
            r.t.to_string(),
            r.s_obs.to_string(),
            r.s_ball.to_string(),
            scan.c_obs.to_string(),
            r.bound.to_string(),
            r.pass.to_string(),
        ]);
    }
    let pass = scan.pass && sym.pass && chain.pass;
    let value = json!({
        "instance": inst.name,
        "c_obs": d.c,
        "lipschitz": to_value(&scan)?,
        "symmetry": to_value(&sym)?,
        "chain": to_value(&chain)?,
    });
    Ok(Section::new("lipschitz", pass, value, vec![table]))
}

/// Containment and absorption at each scale, on the given left window
/// (or `max(12, 4r)` when `None`).
fn containment_at(cfg: &ExperimentConfig, window: Option<u32>) -> Result<Section, CliError> {
    let (base, d) = theorem_defect(cfg)?;
    let mut rows = Vec::new();
    let mut pass = true;
    let mut table = Table::new(
        "containment",
        &[
            "r",
            "left_radius",
            "right_radius",
            "almost_pass",
            "almost_failures",
            "repaired_at",
            "big_r",
            "absorption_pass",
            "absorption_failures",
        ],
    );
    for &r in &cfg.scales {
        let w = window.unwrap_or(12.max(4 * r));
        let inst = base.clone().with_window(w).with_scale(r);
        let outside = inst.image_violations(&inst.left_window()?)?;
        let almost = containment_almost(&inst, &d)?;
        let absorb = r_neighborhood_absorption(&inst, &d)?;
        let ok = outside.is_empty() && almost.pass && absorb.pass;
        pass &= ok;
        table.push(vec![
            r.to_string(),
            almost.left_radius.to_string(),
            almost.right_radius.to_string(),
            almost.pass.to_string(),
            almost.failure_count.to_string(),
            almost.repaired_at.map(|x| x.to_string()).unwrap_or_default(),
            absorb.big_r.to_string(),
            absorb.pass.to_string(),
            absorb.failure_count.to_string(),
        ]);
        rows.push(json!({
            "r": r,
            "image_outside_lambda": outside.iter().map(|x| inst.f.domain().render(x)).collect::<Vec<_>>(),
            "containment_almost": to_value(&almost)?,
            "absorption": to_value(&absorb)?,
            "pass": ok,
        }));
    }
    let value = json!({
        "instance": base.name,
        "c_obs": d.c,
        "defect_radius": d.window_radius,
        "defect": d.left_elements(),
        "tested": rows,
    });
    Ok(Section::new("containment", pass, value, vec![table]))
}

pub fn containment(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    containment_at(cfg, Some(cfg.window))
}

fn kernel_at(cfg: &ExperimentConfig, window: u32) -> Result<Section, CliError> {
    let (base, d) = theorem_defect(cfg)?;
    let inst = base.with_window(window);
    let w = inst.left_window()?;
    let targets = sorted(kernel_targets(&inst, &d)?);
    let k = kernel_window(&inst, &d, &w)?;
    let g = inst.f.domain();
    let contains_identity = k.contains(&g.identity());
    let mut table = Table::new("kernel", &["element", "value"]);
    for x in &k {
        table.push(vec![g.render(x), inst.f.codomain().render(&inst.f.eval(x)?)]);
    }
    let mut fibers = Vec::new();
    for &r in &cfg.scales {
        let fam = fiber_family(&inst.clone().with_scale(r), &w)?;
        let sizes: Vec<usize> = fam.iter().map(|f| f.members.len()).collect();
        fibers.push(json!({
            "r": r,
            "fibers": fam.len(),
            "min_size": sizes.iter().min(),
            "max_size": sizes.iter().max(),
        }));
    }
    let value = json!({
        "instance": inst.name,
        "window_radius": window,
        "defect_radius": d.window_radius,
        "targets": targets,
        "kernel_size": k.len(),
        "contains_identity": contains_identity,
        "fiber_families": fibers,
    });
    Ok(Section::new("kernel", contains_identity, value, vec![table]))
}

pub fn kernel(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    kernel_at(cfg, cfg.window)
}

fn cover_row(table: &mut Table, r: u32, method: &str, c: &CoverColoring, valid: bool, success: bool) {
    table.push(vec![
        r.to_string(),
        method.into(),
        c.colors().to_string(),
        c.clusters.len().to_string(),
        c.bound.to_string(),
        valid.to_string(),
        success.to_string(),
    ]);
}

pub fn color(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let g = group(cfg)?;
    let m = metric(cfg, &g);
    let window = m.ball_at_identity(cfg.window)?;
    let points = match &cfg.approx {
        Some(spec) => ApproximateGroup::parse(spec, &g)?.members_in(&window),
        None => window.members().to_vec(),
    };
    let mut table = Table::new("color", &["r", "method", "colors", "clusters", "bound", "valid", "success"]);
    let mut rows = Vec::new();
    let mut pass = true;
    for &r in &cfg.scales {
        let budget = cfg.d.unwrap_or(cfg.budget_factor * r);
        let limit = cfg.max_colors.unwrap_or(usize::MAX);
        let greedy = greedy_cover(&points, &m, r, limit, budget, cfg.seed)?;
        let v = validate_coloring(&greedy.coloring, &m)?;
        pass &= v.valid && greedy.success;
        cover_row(&mut table, r, "greedy", &greedy.coloring, v.valid, greedy.success);
        let mut lattice = None;
        if let (GroupDescriptor::Lattice { rank }, None) = (&g, &cfg.approx) {
            if *rank <= 2 {
                let c = lattice_cover(*rank, &window, r, &m)?;
                let lv = validate_coloring(&c, &m)?;
                pass &= lv.valid;
                cover_row(&mut table, r, "lattice", &c, lv.valid, true);
                lattice = Some(json!({ "summary": c.summary(), "validation": to_value(&lv)? }));
            }
        }
        rows.push(json!({
            "r": r,
            "d_budget": budget,
            "max_colors": cfg.max_colors,
            "greedy": {
                "success": greedy.success,
                "candidate": greedy.candidate,
                "ordering": greedy.ordering,
                "attempts": to_value(&greedy.attempts)?,
                "summary": greedy.coloring.summary(),
                "validation": to_value(&v)?,
            },
            "lattice": lattice,
        }));
    }
    let value = json!({
        "group": g.to_string(),
        "window_radius": cfg.window,
        "points": points.len(),
        "scales": rows,
        "note": "color counts at scale r on a finite window, not asymptotic dimension",
    });
    Ok(Section::new("color", pass, value, vec![table]))
}

pub fn hurewicz(cfg: &ExperimentConfig) -> Result<Section, CliError> {
    let (base, d) = theorem_defect(cfg)?;
    let inst = base.with_window(cfg.window);
    let rep = hurewicz_report(&inst, &d, &cfg.scales, cfg.window, cfg.budget_factor, cfg.seed)?;
    let mut table = Table::new(
        "hurewicz",
        &[
            "r",
            "colors_x",
            "colors_y",
            "colors_k",
            "holds",
            "d_budget",
            "d_x",
            "d_y",
            "d_k",
            "pullback_r_y",
            "pullback_colors",
            "pullback_diameter",
            "pullback_valid",
        ],
    );
    for r in &rep.rows {
        table.push(vec![
            r.r.to_string(),
            r.colors_x.to_string(),
            r.colors_y.to_string(),
            r.colors_k.to_string(),
            r.holds.to_string(),
            r.d_budget.to_string(),
            r.d_x.to_string(),
            r.d_y.to_string(),
            r.d_k.to_string(),
            r.pullback.r_y.to_string(),
            r.pullback.colors.to_string(),
            r.pullback.diameter.to_string(),
            r.pullback.valid.to_string(),
        ]);
    }
    let value = json!({
        "hurewicz": to_value(&rep)?,
        "note": "color counts at scale r on a finite window, not asymptotic dimension",
    });
    Ok(Section::new("hurewicz", rep.pass, value, vec![table]))
}

/// Defect, Lipschitz chain, containments, kernel and the color-count
/// report, in that order.
pub fn all(cfg: &ExperimentConfig) -> Result<Vec<Section>, CliError> {
    let mut defect_cfg = cfg.clone();
    defect_cfg.window = defect_window(cfg);
    let mut lip_cfg = cfg.clone();
    lip_cfg.window = defect_window(cfg);
    let top = cfg.scales.iter().max().copied().unwrap_or(1);
    Ok(vec![
        defect(&defect_cfg)?,
        lipschitz(&lip_cfg)?,
        containment_at(cfg, None)?,
        kernel_at(cfg, 12.max(4 * top))?,
        hurewicz(cfg)?,
    ])
}

pub fn sections(cfg: &ExperimentConfig) -> Result<Vec<Section>, CliError> {
    Ok(match cfg.command {
        Command::Ball => vec![ball(cfg)?],
        Command::Defect => vec![defect(cfg)?],
        Command::ApproxCheck => vec![approx_check(cfg)?],
        Command::Lipschitz => vec![lipschitz(cfg)?],
        Command::Containment => vec![containment(cfg)?],
        Command::Kernel => vec![kernel(cfg)?],
        Command::Color => vec![color(cfg)?],
        Command::Hurewicz => vec![hurewicz(cfg)?],
        Command::All => all(cfg)?,
    })
}
