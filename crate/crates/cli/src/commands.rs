//! Subcommand implementations over a parsed problem.

use rayon::prelude::*;
use serde_json::{json, Value};

use conservkit::conslaw::{
    characteristic, is_trivial_density, minimal_density, structure_check, verify_verdict, ConservedVector,
};
use conservkit::discover::{cosymmetry_scan, find_conservation_laws, generate_basis, BasisSpec};
use conservkit::error::{Error, Result};
use conservkit::jet::{total_dx_n, EvolutionEquation};
use conservkit::linear::{
    as_linear, check_gamma, determining_system, formal_adjoint, is_adjoint_solution, linear_flux,
    quadratic_cv, self_adjoint_part, solve_determining, LinearOperator,
};
use conservkit::transform::{
    contact_diagnostics, pushforward_cv, transform_equation, two_cl_point_transform, validate_contact,
    ContactTransformation,
};
use conservkit::Expr;

use crate::problem::{Item, ItemKind, Problem};
use crate::report::{ItemReport, Report};

/// Options of the `discover` subcommand; unset values fall back to `set` statements.
#[derive(Clone, Debug, Default)]
pub struct DiscoverOptions {
    pub max_order: Option<usize>,
    pub jet_degree: Option<usize>,
    pub tx_degree: Option<usize>,
    pub basis: Option<Vec<Expr>>,
    pub gauge: bool,
    pub cosymmetries: bool,
}

/// Caps of the determining-system ansatz.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub r: usize,
    pub degree: usize,
}

impl Caps {
    pub fn resolve(p: &Problem, r: Option<usize>, degree: Option<usize>) -> Caps {
        let get = |k: &str, d: usize| p.setting(k).and_then(|v| usize::try_from(v).ok()).unwrap_or(d);
        Caps {
            r: r.unwrap_or_else(|| get("r", 4)),
            degree: degree.unwrap_or_else(|| get("degree", 8)),
        }
    }
}

pub fn conserved_vector(p: &Problem, item: &Item) -> Result<ConservedVector> {
    let eq = p.equation()?;
    match &item.kind {
        ItemKind::Density(rho) => ConservedVector::from_density(&p.ctx, eq, rho.clone()),
        ItemKind::Conserved { rho, sigma } => Ok(ConservedVector::new(rho.clone(), sigma.clone(), eq.clone())),
        ItemKind::Multiplier(v) => linear_flux(&p.ctx, &operator(p)?, v),
        ItemKind::Gamma(g) => quadratic_cv(&p.ctx, &operator(p)?, &self_adjoint_part(&p.ctx, g)?),
        _ => Err(Error::Problem(format!("`{}` is not a density", item.name))),
    }
}

pub fn is_law(item: &Item) -> bool {
    matches!(item.kind, ItemKind::Density(_) | ItemKind::Conserved { .. })
}

pub fn contact(p: &Problem, item: &Item) -> Result<ContactTransformation> {
    let ctx = &p.ctx;
    match &item.kind {
        ItemKind::Transform { map, inverse } => {
            let ct = validate_contact(ctx, &map[0], &map[1], &map[2])?;
            match inverse {
                Some([t, x, u]) => ct.with_inverse(ctx, t, x, u),
                None => Ok(ct),
            }
        }
        ItemKind::Pair { rho1, rho2, u } => Ok(two_cl_point_transform(ctx, rho1, rho2, u.as_ref())?.contact),
        _ => Err(Error::Problem(format!("`{}` is not a transformation", item.name))),
    }
}

pub fn operator(p: &Problem) -> Result<LinearOperator> {
    if let Some(op) = &p.operator {
        return Ok(op.clone());
    }
    as_linear(&p.ctx, p.equation()?)?
        .ok_or_else(|| Error::Problem(format!("{} is not a homogeneous linear equation", p.equation().unwrap())))
}

/// Runs `f` over the selected items in parallel, keeping input order.
fn per_item<F>(p: &Problem, report: &mut Report, select: fn(&Item) -> bool, f: F)
where
    F: Fn(&Item, &mut ItemReport) -> Result<()> + Sync,
{
    let out: Vec<ItemReport> = p
        .items
        .par_iter()
        .filter(|i| select(i))
        .map(|item| {
            let mut r = ItemReport::new(&item.name, item.kind.label());
            if let Err(e) = f(item, &mut r) {
                r.error(e);
            }
            r
        })
        .collect();
    report.items.extend(out);
}

fn law_header(p: &Problem, report: &mut Report) -> Result<()> {
    report.header.push(format!("equation: {}", p.equation()?));
    Ok(())
}

fn verify_into(p: &Problem, cv: &ConservedVector, r: &mut ItemReport) -> Result<bool> {
    let v = verify_verdict(&p.ctx, cv)?;
    r.set("density", cv.rho.to_string());
    r.set("flux", cv.sigma.to_string());
    r.set("verified", v.equal);
    r.set("method", v.method.to_string());
    r.line(format!("density: {}", cv.rho));
    r.line(format!("flux: {}", cv.sigma));
    let ok = r.record(format!("D_t({}) + D_x({}) = 0", cv.rho, cv.sigma), &v);
    r.line(if ok {
        format!("verified ({})", v.method)
    } else {
        format!("NOT verified: divergence {}", v.witness)
    });
    Ok(ok)
}

/// A density whose flux cannot be recovered is a failed verdict, not an error.
fn law_or_fail(p: &Problem, item: &Item, r: &mut ItemReport) -> Result<Option<ConservedVector>> {
    match conserved_vector(p, item) {
        Ok(cv) => Ok(Some(cv)),
        Err(Error::NotADensity) => {
            r.line("NOT a conserved density: D_t rho is not a total x-derivative");
            r.set("verified", false);
            r.fact("D_t rho lies in Im D_x", false, "variational derivative of D_t rho is nonzero");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn verify(p: &Problem) -> Result<Report> {
    let mut report = Report::new("verify", None);
    law_header(p, &mut report)?;
    per_item(p, &mut report, is_law, |item, r| {
        if let Some(cv) = law_or_fail(p, item, r)? {
            verify_into(p, &cv, r)?;
        }
        Ok(())
    });
    Ok(report)
}

pub fn characteristics(p: &Problem) -> Result<Report> {
    let mut report = Report::new("characteristic", None);
    law_header(p, &mut report)?;
    per_item(p, &mut report, is_law, |item, r| {
        if let Some(cv) = law_or_fail(p, item, r)? {
            if verify_into(p, &cv, r)? {
                let g = characteristic(&p.ctx, &cv)?;
                r.set("characteristic", g.to_string());
                r.line(format!("characteristic: {g}"));
            }
        }
        Ok(())
    });
    Ok(report)
}

pub fn reduce(p: &Problem) -> Result<Report> {
    let mut report = Report::new("reduce", None);
    law_header(p, &mut report)?;
    per_item(p, &mut report, is_law, |item, r| {
        let Some(cv) = law_or_fail(p, item, r)? else {
            return Ok(());
        };
        if !verify_into(p, &cv, r)? {
            return Ok(());
        }
        let rec = minimal_density(&p.ctx, &cv)?;
        r.set("steps", rec.steps);
        r.set("trivial", rec.trivial);
        if rec.trivial {
            r.set("density_order", "trivial");
            r.line("density order: trivial");
        } else {
            r.set("density_order", rec.density_order);
            r.set("reduced_density", rec.representative.rho.to_string());
            r.set("reduced_flux", rec.representative.sigma.to_string());
            r.set("characteristic", rec.characteristic.to_string());
            r.line(format!("reduced density: {}", rec.representative.rho));
            r.line(format!("reduced flux: {}", rec.representative.sigma));
            r.line(format!("density order: {}", rec.density_order));
        }
        Ok(())
    });
    Ok(report)
}

pub fn trivial(p: &Problem) -> Result<Report> {
    let mut report = Report::new("trivial", None);
    per_item(p, &mut report, is_law, |item, r| {
        let rho = match &item.kind {
            ItemKind::Density(rho) | ItemKind::Conserved { rho, .. } => rho,
            _ => unreachable!("filtered"),
        };
        let t = is_trivial_density(&p.ctx, rho)?;
        r.set("density", rho.to_string());
        r.set("trivial", t);
        r.line(format!("{rho}: {}", if t { "trivial" } else { "nontrivial" }));
        Ok(())
    });
    Ok(report)
}

fn is_map(item: &Item) -> bool {
    matches!(item.kind, ItemKind::Transform { .. } | ItemKind::Pair { .. })
}

/// Writes `F = D_x(G)` or `F = D_x^2(H)` when such forms exist.
fn conservative_forms(p: &Problem, eq: &EvolutionEquation, r: &mut ItemReport) -> Result<()> {
    let s = structure_check(&p.ctx, eq)?;
    if let Some(h) = &s.h {
        let back = total_dx_n(&p.ctx, h, 2)?;
        r.identity(&p.ctx, "doubly conservative form", eq.rhs(), &back);
        r.line(format!("u~_t~ = D_x^2({h})"));
    }
    if let Some(g) = &s.g {
        let back = total_dx_n(&p.ctx, g, 1)?;
        r.identity(&p.ctx, "conservative form", eq.rhs(), &back);
        r.line(format!("u~_t~ = D_x({g})"));
    }
    r.set("structure", serde_json::to_value(s.report()).unwrap_or(Value::Null));
    Ok(())
}

pub fn transform(p: &Problem) -> Result<Report> {
    let mut report = Report::new("transform", None);
    law_header(p, &mut report)?;
    report
        .header
        .push("results are written in tilde coordinates, named t, x, u, u1, ...".into());
    let eq = p.equation()?;
    per_item(p, &mut report, is_map, |item, r| {
        if let ItemKind::Transform { map, .. } = &item.kind {
            let d = contact_diagnostics(&p.ctx, &map[0], &map[1], &map[2])?;
            r.set("diagnostics", serde_json::to_value(&d).unwrap_or(Value::Null));
            if !d.valid() {
                for m in &d.messages {
                    r.line(m.clone());
                }
                r.fact("map is a nondegenerate contact transformation", false, d.messages.join("; "));
                return Ok(());
            }
        }
        let ct = contact(p, item)?;
        r.set("T", ct.t.to_string());
        r.set("X", ct.x.to_string());
        r.set("U", ct.u.to_string());
        r.set("V", ct.v.to_string());
        r.line(format!("(t~, x~, u~) = ({}, {}, {})", ct.t, ct.x, ct.u));
        r.line(format!("u~_x~ = {}", ct.v));
        let out = transform_equation(&p.ctx, eq, &ct)?;
        r.set("transformed", out.rhs().to_string());
        r.line(format!("u~_t~ = {}", out.rhs()));
        conservative_forms(p, &out, r)?;
        if let ItemKind::Pair { rho1, rho2, .. } = &item.kind {
            for (k, rho) in [rho1, rho2].into_iter().enumerate() {
                let cv = ConservedVector::from_density(&p.ctx, eq, rho.clone())?;
                let pushed = pushforward_cv(&p.ctx, &cv, &ct)?;
                let v = verify_verdict(&p.ctx, &pushed)?;
                r.record(format!("pushed-forward law {} is conserved", k + 1), &v);
                let rec = minimal_density(&p.ctx, &pushed)?;
                r.line(format!(
                    "law {}: density {} reduces to {}, characteristic {}",
                    k + 1,
                    pushed.rho,
                    rec.representative.rho,
                    rec.characteristic
                ));
                r.set(&format!("characteristic{}", k + 1), rec.characteristic.to_string());
            }
        }
        Ok(())
    });
    Ok(report)
}

pub fn pushforward(p: &Problem) -> Result<Report> {
    let mut report = Report::new("pushforward", None);
    law_header(p, &mut report)?;
    let maps: Vec<&Item> = p.items.iter().filter(|i| is_map(i)).collect();
    let laws: Vec<&Item> = p.items.iter().filter(|i| is_law(i)).collect();
    let pairs: Vec<(&Item, &Item)> = maps.iter().flat_map(|m| laws.iter().map(move |l| (*m, *l))).collect();
    let out: Vec<ItemReport> = pairs
        .par_iter()
        .map(|(m, l)| {
            let mut r = ItemReport::new(&format!("{}/{}", m.name, l.name), "pushforward");
            let run = |r: &mut ItemReport| -> Result<()> {
                let ct = contact(p, m)?;
                let cv = conserved_vector(p, l)?;
                let pushed = pushforward_cv(&p.ctx, &cv, &ct)?;
                r.line(format!("transformed equation: u~_t~ = {}", pushed.equation.rhs()));
                if verify_into(p, &pushed, r)? {
                    let rec = minimal_density(&p.ctx, &pushed)?;
                    r.set("characteristic", rec.characteristic.to_string());
                    r.line(format!("characteristic: {}", rec.characteristic));
                    if rec.trivial {
                        r.line("density order: trivial");
                    } else {
                        r.line(format!("density order: {}", rec.density_order));
                    }
                }
                Ok(())
            };
            if let Err(e) = run(&mut r) {
                r.error(e);
            }
            r
        })
        .collect();
    report.items.extend(out);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearTask {
    Adjoint,
    Flux,
    Determine,
    Gamma,
}

pub fn linear(p: &Problem, task: LinearTask, caps: Caps) -> Result<Report> {
    let ctx = &p.ctx;
    let op = operator(p)?;
    let mut report = Report::new("linear", None);
    report.header.push(format!("u_t = A u with A = {op}"));
    match task {
        LinearTask::Adjoint => {
            let adj = formal_adjoint(ctx, &op)?;
            let mut r = ItemReport::new("A", "adjoint");
            r.set("operator", op.to_string());
            r.set("adjoint", adj.to_string());
            r.line(format!("A^dagger = {adj}"));
            let back = formal_adjoint(ctx, &adj)?;
            r.fact("(A^dagger)^dagger = A", back.op().same_as(op.op()), back.op().sub(op.op()).to_string());
            report.items.push(r);
        }
        LinearTask::Flux => per_item(p, &mut report, |i| matches!(i.kind, ItemKind::Multiplier(_)), |item, r| {
            let ItemKind::Multiplier(v) = &item.kind else { unreachable!("filtered") };
            let sol = is_adjoint_solution(ctx, &op, v)?;
            r.fact(format!("v = {v} solves v_t + A^dagger v = 0"), sol, "");
            if sol {
                let cv = linear_flux(ctx, &op, v)?;
                verify_into(p, &cv, r)?;
            }
            Ok(())
        }),
        LinearTask::Determine => {
            let sys = determining_system(ctx, &op, caps.r)?;
            let mut r = ItemReport::new(&format!("r={}", caps.r), "determining_system");
            r.set("system", serde_json::to_value(sys.report()).unwrap_or(Value::Null));
            r.line(format!(
                "gamma = {} + v",
                (0..=caps.r).map(|k| format!("g{k}(t,x) u{k}")).collect::<Vec<_>>().join(" + ")
            ));
            for (label, e) in &sys.equations {
                r.line(format!("[{label}] {e} = 0"));
            }
            let sols = solve_determining(ctx, &op, caps.r, caps.degree)?;
            r.line(format!(
                "polynomial ansatz of degree {} in (t, x): {} independent solutions",
                caps.degree,
                sols.len()
            ));
            let mut listed = Vec::new();
            let mut jet_free = true;
            for s in &sols {
                jet_free &= s.is_jet_free();
                r.line(format!("  Gamma = {}, v = {}", s.gamma, s.v));
                listed.push(json!({"gamma": s.gamma.to_string(), "v": s.v.to_string(), "jet_free": s.is_jet_free()}));
            }
            r.set("degree", caps.degree);
            r.set("solutions", listed);
            r.set("jet_free", jet_free);
            r.line(if jet_free {
                "all solutions have g^k = 0"
            } else {
                "jet-dependent cosymmetries found"
            });
            report.items.push(r);
        }
        LinearTask::Gamma => per_item(p, &mut report, |i| matches!(i.kind, ItemKind::Gamma(_)), |item, r| {
            let ItemKind::Gamma(g) = &item.kind else { unreachable!("filtered") };
            r.set("gamma", g.to_string());
            let ok = check_gamma(ctx, &op, g)?;
            r.fact(format!("Gamma_t + Gamma A + A^dagger Gamma = 0 for Gamma = {g}"), ok, "");
            r.line(format!("Gamma = {g}: {}", if ok { "solves the operator equation" } else { "does NOT solve the operator equation" }));
            if ok {
                let sa = self_adjoint_part(ctx, g)?;
                if sa.is_zero() {
                    r.line("self-adjoint part vanishes: no quadratic law");
                    return Ok(());
                }
                let cv = quadratic_cv(ctx, &op, &sa)?;
                if verify_into(p, &cv, r)? {
                    let rec = minimal_density(ctx, &cv)?;
                    r.set("density_order", rec.density_order);
                    r.line(format!("minimal density {} of order {}", rec.representative.rho, rec.density_order));
                }
            }
            Ok(())
        }),
    }
    Ok(report)
}

pub fn basis(p: &Problem, o: &DiscoverOptions) -> Result<(Vec<Expr>, String)> {
    if let Some(b) = &o.basis {
        return Ok((b.clone(), "basis file".into()));
    }
    if o.max_order.is_none() && o.jet_degree.is_none() && o.tx_degree.is_none() {
        if let Some(b) = &p.basis {
            return Ok((b.clone(), "problem file".into()));
        }
    }
    let get = |v: Option<usize>, k: &str, d: usize| {
        v.or_else(|| p.setting(k).and_then(|s| usize::try_from(s).ok())).unwrap_or(d)
    };
    let mut spec = BasisSpec::new(get(o.max_order, "max_order", 1), get(o.jet_degree, "jet_degree", 3), get(o.tx_degree, "tx_degree", 1));
    spec.gauge = o.gauge;
    let desc = format!(
        "automatic: order <= {}, jet degree <= {}, (t, x) degree <= {}",
        spec.max_order, spec.jet_degree, spec.tx_degree
    );
    Ok((generate_basis(&spec)?, desc))
}

pub fn discover(p: &Problem, o: &DiscoverOptions) -> Result<Report> {
    let ctx = &p.ctx;
    let eq = p.equation()?;
    let (terms, desc) = basis(p, o)?;
    let mut report = Report::new("discover", None);
    law_header(p, &mut report)?;
    report.header.push(format!("basis ({desc}): {} terms", terms.len()));
    let found = find_conservation_laws(ctx, eq, &terms)?;
    for note in &found.rejected {
        report.header.push(format!("rejected {note}"));
    }
    if found.laws.is_empty() {
        report.header.push("no conservation laws in ansatz".into());
    } else {
        report.header.push(format!(
            "{} independent conservation laws (kernel dimension {})",
            found.dimension(),
            found.kernel_dimension
        ));
    }
    let mut summary = ItemReport::new("ansatz", "discovery");
    summary.set("basis", terms.iter().map(|b| b.to_string()).collect::<Vec<_>>());
    summary.set("dimension", found.dimension());
    summary.set("kernel_dimension", found.kernel_dimension);
    summary.set("rejected", found.rejected.clone());
    report.items.push(summary);
    for (k, rec) in found.laws.iter().enumerate() {
        let mut r = ItemReport::new(&format!("law{}", k + 1), "law");
        let cv = &rec.representative;
        verify_into(p, cv, &mut r)?;
        r.set("characteristic", rec.characteristic.to_string());
        r.set("density_order", rec.density_order);
        r.line(format!("characteristic: {}", rec.characteristic));
        r.line(format!("density order: {}", rec.density_order));
        report.items.push(r);
    }
    if o.cosymmetries {
        let (cos, rejected) = cosymmetry_scan(ctx, eq, &terms)?;
        for note in rejected {
            report.header.push(format!("cosymmetry scan rejected {note}"));
        }
        for (k, c) in cos.iter().enumerate() {
            let mut r = ItemReport::new(&format!("cosymmetry{}", k + 1), "cosymmetry");
            r.set("gamma", c.gamma.to_string());
            r.set("is_characteristic", c.is_characteristic);
            r.line(format!(
                "{}{}",
                c.gamma,
                if c.is_characteristic { " (characteristic)" } else { "" }
            ));
            report.items.push(r);
        }
    }
    Ok(report)
}

pub fn parse_summary(p: &Problem) -> Report {
    let mut report = Report::new("parse", None);
    if let Some(eq) = &p.equation {
        report.header.push(format!("equation: {eq} (order {})", eq.order()));
    }
    for f in p.ctx.symbols.functions() {
        if f.builtin.is_none() {
            report.header.push(format!("function {}({})", f.name, f.params.join(", ")));
        }
    }
    for u in p.ctx.symbols.units() {
        report.header.push(format!("unit {u}"));
    }
    for item in &p.items {
        let mut r = ItemReport::new(&item.name, item.kind.label());
        r.set("line", item.line);
        let text = match &item.kind {
            ItemKind::Density(e) | ItemKind::Multiplier(e) => e.to_string(),
            ItemKind::Conserved { rho, sigma } => format!("({rho}, {sigma})"),
            ItemKind::Transform { map, .. } => format!("({}, {}, {})", map[0], map[1], map[2]),
            ItemKind::Pair { rho1, rho2, .. } => format!("{rho1}; {rho2}"),
            ItemKind::Gamma(g) => g.to_string(),
        };
        r.set("value", text.clone());
        r.line(text);
        report.items.push(r);
    }
    if let Some(b) = &p.basis {
        report.header.push(format!("basis of {} terms", b.len()));
    }
    report.header.push(format!("{} expectations", p.expects.len()));
    report
}
