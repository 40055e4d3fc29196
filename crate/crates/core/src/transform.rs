//! Contact and point transformations `t~ = T(t)`, `x~ = X(t,x,u,u1)`, `u~ = U(t,x,u,u1)`
//! of evolution equations and their conserved vectors.

use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::conslaw::ConservedVector;
use crate::error::{Error, Result};
use crate::expr::{equals, Atom, Coeff, Context, Exp, Expr, Var};
use crate::integrate::integrate;
use crate::jet::{total_dt, total_dx, EvolutionEquation};

/// Which formula produced `V = u~_{x~}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VBranch {
    /// `(U_x + U_u u1) / (X_x + X_u u1)`
    TotalRatio,
    /// `U_{u1} / X_{u1}`
    DerivativeRatio,
}

/// Outcome of the nondegeneracy and contact checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t_derivative_nonzero: bool,
    pub rank_two: bool,
    pub contact_condition: bool,
    pub point: bool,
    pub v_branch: Option<VBranch>,
    pub v: Option<String>,
    pub messages: Vec<String>,
}

impl Diagnostics {
    pub fn valid(&self) -> bool {
        self.t_derivative_nonzero && self.rank_two && self.contact_condition && self.v.is_some()
    }
}

/// A validated contact transformation together with its first prolongation `V`.
#[derive(Clone, Debug)]
pub struct ContactTransformation {
    pub t: Expr,
    pub x: Expr,
    pub u: Expr,
    pub v: Expr,
    pub branch: VBranch,
    dx_x: Expr,
    prolongation: Arc<Mutex<Vec<Expr>>>,
    inverse: OnceLock<Box<ContactTransformation>>,
}

/// A contact transformation whose components do not involve `u1`.
#[derive(Clone, Debug)]
pub struct PointTransformation {
    pub contact: ContactTransformation,
    /// `X_x U_u - X_u U_x`
    pub delta: Expr,
}

impl std::ops::Deref for PointTransformation {
    type Target = ContactTransformation;
    fn deref(&self) -> &ContactTransformation {
        &self.contact
    }
}

fn only_depends(e: &Expr, allowed: &[Var]) -> bool {
    e.free_vars().iter().all(|v| allowed.contains(v))
}

fn minors(ctx: &Context, x: &Expr, u: &Expr) -> Result<[Expr; 3]> {
    let p = |e: &Expr, v| e.partial(ctx, v);
    let (xx, xu, xp) = (p(x, Var::X)?, p(x, Var::U(0))?, p(x, Var::U(1))?);
    let (ux, uu, up) = (p(u, Var::X)?, p(u, Var::U(0))?, p(u, Var::U(1))?);
    Ok([
        &(&xx * &uu) - &(&xu * &ux),
        &(&xx * &up) - &(&xp * &ux),
        &(&xu * &up) - &(&xp * &uu),
    ])
}

/// Runs the nondegeneracy and contact checks without failing.
pub fn contact_diagnostics(ctx: &Context, t: &Expr, x: &Expr, u: &Expr) -> Result<Diagnostics> {
    let mut messages = Vec::new();
    let txu = [Var::T, Var::X, Var::U(0), Var::U(1)];
    if !only_depends(t, &[Var::T]) {
        return Err(Error::Precondition(format!("T = {t} must depend on t only")));
    }
    for (name, e) in [("X", x), ("U", u)] {
        if !only_depends(e, &txu) {
            return Err(Error::Precondition(format!(
                "{name} = {e} must depend on (t, x, u, u1) only"
            )));
        }
    }
    let t_derivative_nonzero = !t.partial(ctx, Var::T)?.is_zero();
    if !t_derivative_nonzero {
        messages.push("T_t vanishes".into());
    }
    let rank_two = minors(ctx, x, u)?.iter().any(|m| !m.is_zero());
    if !rank_two {
        messages.push("the Jacobian of (X, U) in (x, u, u1) has rank below 2".into());
    }
    let p = |e: &Expr, v| e.partial(ctx, v);
    let u1 = Expr::u(1);
    let dx = &p(x, Var::X)? + &(&p(x, Var::U(0))? * &u1);
    let du = &p(u, Var::X)? + &(&p(u, Var::U(0))? * &u1);
    let (xp, up) = (p(x, Var::U(1))?, p(u, Var::U(1))?);
    let residual = &(&du * &xp) - &(&dx * &up);
    let verdict = equals(ctx, &residual, &Expr::zero());
    let contact_condition = verdict.equal;
    if !contact_condition {
        messages.push(format!("contact condition fails: residual {residual}"));
    }
    let (v, v_branch) = if !dx.is_zero() {
        (Some(du.div(&dx)?), Some(VBranch::TotalRatio))
    } else if !xp.is_zero() {
        (Some(up.div(&xp)?), Some(VBranch::DerivativeRatio))
    } else {
        messages.push("both X_x + X_u u1 and X_{u1} vanish".into());
        (None, None)
    };
    let point = !x.depends_on(Var::U(1)) && !u.depends_on(Var::U(1));
    Ok(Diagnostics {
        t_derivative_nonzero,
        rank_two,
        contact_condition,
        point,
        v_branch,
        v: v.as_ref().map(Expr::to_string),
        messages,
    })
}

/// Validates `(T, X, U)` and derives `V`.
pub fn validate_contact(ctx: &Context, t: &Expr, x: &Expr, u: &Expr) -> Result<ContactTransformation> {
    let d = contact_diagnostics(ctx, t, x, u)?;
    if !d.t_derivative_nonzero || !d.rank_two {
        return Err(Error::Degenerate(d.messages.join("; ")));
    }
    if !d.contact_condition {
        return Err(Error::ContactViolated(d.messages.join("; ")));
    }
    let p = |e: &Expr, v| e.partial(ctx, v);
    let u1 = Expr::u(1);
    let (v, branch) = match d.v_branch {
        Some(VBranch::TotalRatio) => {
            let dx = &p(x, Var::X)? + &(&p(x, Var::U(0))? * &u1);
            let du = &p(u, Var::X)? + &(&p(u, Var::U(0))? * &u1);
            (du.div(&dx)?, VBranch::TotalRatio)
        }
        Some(VBranch::DerivativeRatio) => (
            p(u, Var::U(1))?.div(&p(x, Var::U(1))?)?,
            VBranch::DerivativeRatio,
        ),
        None => return Err(Error::Internal(d.messages.join("; "))),
    };
    if p(x, Var::U(0))?.is_zero() && p(u, Var::U(0))?.is_zero() {
        return Err(Error::Degenerate("X_u and U_u both vanish".into()));
    }
    let dx_x = total_dx(ctx, x)?;
    if dx_x.is_zero() {
        return Err(Error::Degenerate("D_x X vanishes".into()));
    }
    Ok(ContactTransformation {
        t: t.clone(),
        x: x.clone(),
        u: u.clone(),
        v: v.clone(),
        branch,
        dx_x,
        prolongation: Arc::new(Mutex::new(vec![u.clone(), v])),
        inverse: OnceLock::new(),
    })
}

impl PointTransformation {
    pub fn new(ctx: &Context, t: &Expr, x: &Expr, u: &Expr) -> Result<PointTransformation> {
        if x.depends_on(Var::U(1)) || u.depends_on(Var::U(1)) {
            return Err(Error::Precondition(
                "point transformations depend on (t, x, u) only".into(),
            ));
        }
        let contact = validate_contact(ctx, t, x, u)?;
        let delta = minors(ctx, x, u)?[0].clone();
        Ok(PointTransformation { contact, delta })
    }
}

impl ContactTransformation {
    pub fn is_point(&self) -> bool {
        !self.x.depends_on(Var::U(1)) && !self.u.depends_on(Var::U(1))
    }

    /// `D_x X`, whose zero set is excluded.
    pub fn dx_x(&self) -> &Expr {
        &self.dx_x
    }

    /// Loci excluded from the computation: `D_x X = 0` and the zeros of the
    /// denominator of `V`.
    pub fn singular_loci(&self) -> Vec<Expr> {
        let mut out = vec![self.dx_x.clone()];
        for (p, _) in self.v.denominator() {
            let e = Expr::from_poly(p.clone());
            if !out.iter().any(|o| o.same_as(&e)) {
                out.push(e);
            }
        }
        out
    }

    /// `u~_k = ((1 / D_x X) D_x)^k V` in original coordinates; `k = 0` gives `U`.
    pub fn prolong(&self, ctx: &Context, k: usize) -> Result<Expr> {
        ctx.check_jet(k)?;
        let mut cache = self.prolongation.lock().expect("prolongation cache poisoned");
        while cache.len() <= k {
            let last = cache.last().expect("cache holds U and V");
            let next = total_dx(ctx, last)?.div(&self.dx_x)?;
            cache.push(next);
        }
        Ok(cache[k].clone())
    }

    /// Attaches a user-supplied inverse `(t, x, u) = (T', X', U')` written in tilde
    /// coordinates. The inverse is validated and checked to undo the transformation.
    pub fn with_inverse(self, ctx: &Context, t: &Expr, x: &Expr, u: &Expr) -> Result<ContactTransformation> {
        let inv = validate_contact(ctx, t, x, u)?;
        check_round_trip(ctx, &self, &inv)?;
        let _ = self.inverse.set(Box::new(inv));
        Ok(self)
    }

    /// The supplied inverse, or one solved for when the map is a triangular point map.
    pub fn inverse(&self, ctx: &Context) -> Result<&ContactTransformation> {
        if let Some(inv) = self.inverse.get() {
            return Ok(inv);
        }
        let inv = auto_inverse(ctx, self)?;
        let _ = self.inverse.set(Box::new(inv));
        Ok(self.inverse.get().expect("inverse just set"))
    }

    /// The inverse as a transformation in its own right, with `self` as its inverse.
    pub fn inverted(&self, ctx: &Context) -> Result<ContactTransformation> {
        let inv = self.inverse(ctx)?.clone();
        let fresh = ContactTransformation {
            inverse: OnceLock::new(),
            ..inv
        };
        let mut me = self.clone();
        me.inverse = OnceLock::new();
        let _ = fresh.inverse.set(Box::new(me));
        Ok(fresh)
    }

    /// Rewrites an expression in original jet coordinates in terms of the tilde
    /// coordinates, which are printed with the plain names `t, x, u, u1, ...`.
    pub fn to_tilde(&self, ctx: &Context, e: &Expr) -> Result<Expr> {
        let inv = self.inverse(ctx).map_err(|err| match err {
            Error::Inversion { reason, .. } => Error::Inversion {
                reason,
                expression: e.to_string(),
            },
            other => other,
        })?;
        let m = e.max_jet_index().unwrap_or(0);
        let mut jets = Vec::with_capacity(m + 1);
        for k in 0..=m {
            jets.push(inv.prolong(ctx, k)?);
        }
        e.substitute(&|a| match a {
            Atom::Var(Var::T) => Some(inv.t.clone()),
            Atom::Var(Var::X) => Some(inv.x.clone()),
            Atom::Var(Var::U(k)) => Some(jets[*k].clone()),
            _ => None,
        })
    }

    /// `F~` before the change to tilde coordinates.
    pub fn mixed_rhs(&self, ctx: &Context, eq: &EvolutionEquation) -> Result<Expr> {
        let p = |e: &Expr, v| e.partial(ctx, v);
        let tt = p(&self.t, Var::T)?;
        let a = &p(&self.u, Var::U(0))? - &(&p(&self.x, Var::U(0))? * &self.v);
        let b = &p(&self.u, Var::T)? - &(&p(&self.x, Var::T)? * &self.v);
        (&(&a * eq.rhs()) + &b).div(&tt)
    }
}

fn check_round_trip(ctx: &Context, fwd: &ContactTransformation, inv: &ContactTransformation) -> Result<()> {
    let back = |e: &Expr| {
        e.substitute(&|a| match a {
            Atom::Var(Var::T) => Some(inv.t.clone()),
            Atom::Var(Var::X) => Some(inv.x.clone()),
            Atom::Var(Var::U(0)) => Some(inv.u.clone()),
            Atom::Var(Var::U(1)) => Some(inv.v.clone()),
            _ => None,
        })
    };
    for (name, e, want) in [
        ("t", &fwd.t, Expr::t()),
        ("x", &fwd.x, Expr::x()),
        ("u", &fwd.u, Expr::u(0)),
        ("u1", &fwd.v, Expr::u(1)),
    ] {
        let got = back(e)?;
        if !equals(ctx, &got, &want).equal {
            return Err(Error::Inversion {
                reason: format!("the inverse does not undo the transformation: {name} becomes {got}"),
                expression: e.to_string(),
            });
        }
    }
    Ok(())
}

/// Solves `expr = 0` for `v` when `expr` is affine, a monomial power, or quadratic in `v`.
fn solve_for(ctx: &Context, expr: &Expr, v: Var) -> Result<Expr> {
    let fail = |why: &str| Error::Inversion {
        reason: format!("cannot solve for {v}: {why}"),
        expression: expr.to_string(),
    };
    let d1 = expr.partial(ctx, v)?;
    if d1.is_zero() {
        return Err(fail("no dependence"));
    }
    if !d1.depends_on(v) {
        let b = expr.subs1(v, &Expr::zero())?;
        return b.neg().div(&d1);
    }
    // c v^p + r = 0 with c, r free of v
    let d2 = d1.partial(ctx, v)?;
    let ratio = (&d2 * &Expr::var(v)).div(&d1)?;
    if let Some(pm1) = ratio.as_constant() {
        let p = pm1 + Coeff::from_integer(1.into());
        let p = Exp::new(
            i64::try_from(p.numer()).map_err(|_| fail("exponent too large"))?,
            i64::try_from(p.denom()).map_err(|_| fail("exponent too large"))?,
        );
        let pe = crate::expr::exp_to_coeff(&p);
        let c = d1.div(&Expr::var(v).pow(p - Exp::from_integer(1))?)?.scale(&pe.recip());
        let rest = expr - &(&c * &Expr::var(v).pow(p)?);
        if !rest.depends_on(v) && !c.depends_on(v) {
            return rest.neg().div(&c)?.pow(p.recip());
        }
    }
    let d3 = d2.partial(ctx, v)?;
    if d3.is_zero() {
        let a = d2.scale(&Coeff::new(1.into(), 2.into()));
        let b = d1.subs1(v, &Expr::zero())?;
        let c = expr.subs1(v, &Expr::zero())?;
        let Some(pm) = ctx.symbols.units().find(|n| n.as_str() == "pm") else {
            return Err(fail("quadratic equation; declare the unit `pm` for the root sign"));
        };
        let disc = &(&b * &b) - &(&a * &c).scale(&Coeff::from_integer(4.into()));
        let root = &Expr::unit(pm) * &disc.sqrt()?;
        return (&root - &b).div(&a.scale(&Coeff::from_integer(2.into())));
    }
    Err(fail("unsupported equation shape"))
}

/// Inverts a point transformation whose equations can be solved one variable at a time.
fn auto_inverse(ctx: &Context, ct: &ContactTransformation) -> Result<ContactTransformation> {
    let unsupported = |reason: String| Error::Inversion {
        reason,
        expression: format!("({}, {}, {})", ct.t, ct.x, ct.u),
    };
    if !ct.is_point() {
        return Err(unsupported(
            "contact transformations need an explicit inverse block".into(),
        ));
    }
    let mut eqs: Vec<Expr> = vec![
        &Expr::target(Var::T) - &ct.t,
        &Expr::target(Var::X) - &ct.x,
        &Expr::target(Var::U(0)) - &ct.u,
    ];
    let mut unknowns = vec![Var::T, Var::X, Var::U(0)];
    let mut solved: Vec<(Var, Expr)> = Vec::new();
    while !unknowns.is_empty() {
        let pick = eqs.iter().enumerate().find_map(|(i, e)| {
            let deps: Vec<Var> = unknowns.iter().copied().filter(|v| e.depends_on(*v)).collect();
            (deps.len() == 1).then(|| (i, deps[0]))
        });
        let Some((i, v)) = pick else {
            return Err(unsupported("the equations are not triangular".into()));
        };
        let e = eqs.remove(i);
        let sol = solve_for(ctx, &e, v)?;
        for other in eqs.iter_mut() {
            *other = other.subs1(v, &sol)?;
        }
        for (_, s) in solved.iter_mut() {
            *s = s.subs1(v, &sol)?;
        }
        unknowns.retain(|w| *w != v);
        solved.push((v, sol));
    }
    let plain = |v: Var| -> Result<Expr> {
        let e = &solved.iter().find(|(w, _)| *w == v).expect("all solved").1;
        e.substitute(&|a| match a {
            Atom::Target(w) => Some(Expr::var(*w)),
            _ => None,
        })
    };
    let inv = validate_contact(ctx, &plain(Var::T)?, &plain(Var::X)?, &plain(Var::U(0))?)?;
    check_round_trip(ctx, ct, &inv)?;
    Ok(inv)
}

/// The transformed equation `u~_t~ = F~` in tilde coordinates, where
/// `F~ = ((U_u - X_u V) F + U_t - X_t V) / T_t`.
pub fn transform_equation(
    ctx: &Context,
    eq: &EvolutionEquation,
    ct: &ContactTransformation,
) -> Result<EvolutionEquation> {
    let mixed = ct.mixed_rhs(ctx, eq)?;
    let rhs = ct.to_tilde(ctx, &mixed).map_err(|err| match err {
        Error::Inversion { reason, .. } => Error::Inversion {
            reason,
            expression: mixed.to_string(),
        },
        other => other,
    })?;
    let n = rhs.max_jet_index().unwrap_or(0);
    if n < 2 || rhs.partial(ctx, Var::U(n))?.is_zero() {
        return Err(Error::Internal(format!(
            "transformed right-hand side {rhs} is not an evolution equation of order at least 2"
        )));
    }
    EvolutionEquation::new(ctx, rhs)
}

/// `rho~ = rho / D_x X`, `sigma~ = sigma / T_t + (D_t X / D_x X) rho / T_t`, in tilde
/// coordinates, attached to the transformed equation.
pub fn pushforward_cv(ctx: &Context, cv: &ConservedVector, ct: &ContactTransformation) -> Result<ConservedVector> {
    let eq = transform_equation(ctx, &cv.equation, ct)?;
    let tt = ct.t.partial(ctx, Var::T)?;
    let rho = cv.rho.div(ct.dx_x())?;
    let dtx = total_dt(ctx, &ct.x, &cv.equation)?;
    let sigma = &cv.sigma.div(&tt)? + &(&dtx * &rho).div(&tt)?;
    let rho = ct.to_tilde(ctx, &rho)?;
    let sigma = ct.to_tilde(ctx, &sigma)?;
    Ok(ConservedVector::new(rho, sigma, eq))
}

/// Checks `Phi_x + U X_x = rho - u1 rho_{u1}`, `Phi_u + U X_u = rho_{u1}`,
/// `Phi_{u1} + U X_{u1} = 0` together with the rank condition on `(X, U)`.
pub fn check_unit_char_systems(ctx: &Context, rho: &Expr, x: &Expr, u: &Expr, phi: &Expr) -> Result<bool> {
    if rho.max_jet_index().is_some_and(|k| k > 1) {
        return Ok(false);
    }
    let p = |e: &Expr, v| e.partial(ctx, v);
    let rp = p(rho, Var::U(1))?;
    let lhs_rhs = [
        (
            &p(phi, Var::X)? + &(u * &p(x, Var::X)?),
            rho - &(&Expr::u(1) * &rp),
        ),
        (&p(phi, Var::U(0))? + &(u * &p(x, Var::U(0))?), rp),
        (&p(phi, Var::U(1))? + &(u * &p(x, Var::U(1))?), Expr::zero()),
    ];
    for (l, r) in &lhs_rhs {
        if !equals(ctx, l, r).equal {
            return Ok(false);
        }
    }
    Ok(minors(ctx, x, u)?.iter().any(|m| !m.is_zero()))
}

/// The point transformation built from two zero-order conservation laws:
/// `X = rho2_u / rho1_u` and `U` solving `X_x U_u - X_u U_x = rho1_u`, with `T = t`.
pub fn two_cl_point_transform(
    ctx: &Context,
    rho1: &Expr,
    rho2: &Expr,
    user_u: Option<&Expr>,
) -> Result<PointTransformation> {
    for r in [rho1, rho2] {
        if r.has_jet_vars() && r.max_jet_index() != Some(0) {
            return Err(Error::Precondition(format!("density {r} is not of order 0")));
        }
    }
    let r1u = rho1.partial(ctx, Var::U(0))?;
    let lambda = rho2.partial(ctx, Var::U(0))?.div(&r1u)?;
    let lx = lambda.partial(ctx, Var::X)?;
    let lu = lambda.partial(ctx, Var::U(0))?;
    if lx.is_zero() && lu.is_zero() {
        return Err(Error::Degenerate(format!(
            "rho2_u / rho1_u = {lambda} depends on neither x nor u"
        )));
    }
    let solves = |u: &Expr| -> Result<bool> {
        let lhs = &(&lx * &u.partial(ctx, Var::U(0))?) - &(&lu * &u.partial(ctx, Var::X)?);
        Ok(equals(ctx, &lhs, &r1u).equal)
    };
    let u = if let Some(u) = user_u {
        if !solves(u)? {
            return Err(Error::Precondition(format!(
                "U = {u} does not satisfy X_x U_u - X_u U_x = {r1u}"
            )));
        }
        u.clone()
    } else {
        let mut found = None;
        if !lx.is_zero() {
            if let Ok(c) = integrate(ctx, &r1u.div(&lx)?, Var::U(0)) {
                if solves(&c)? {
                    found = Some(c);
                }
            }
        }
        if found.is_none() && !lu.is_zero() {
            if let Ok(c) = integrate(ctx, &r1u.div(&lu)?, Var::X) {
                let c = c.neg();
                if solves(&c)? {
                    found = Some(c);
                }
            }
        }
        found.ok_or(Error::URequired)?
    };
    PointTransformation::new(ctx, &Expr::t(), &lambda, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conslaw::{characteristic, verify};
    use crate::expr::parse_with;

    fn e(ctx: &Context, s: &str) -> Expr {
        parse_with(ctx, s).unwrap()
    }

    fn ct(ctx: &Context, t: &str, x: &str, u: &str) -> ContactTransformation {
        validate_contact(ctx, &e(ctx, t), &e(ctx, x), &e(ctx, u)).unwrap()
    }

    #[test]
    fn validation() {
        let ctx = Context::new();
        let id = ct(&ctx, "t", "x", "u");
        assert!(id.v.same_as(&Expr::u(1)));
        let h = ct(&ctx, "t", "u", "x");
        assert!(h.v.same_as(&e(&ctx, "1/u1")));
        assert!(h.is_point());
        assert!(matches!(
            validate_contact(&ctx, &Expr::one(), &Expr::x(), &Expr::u(0)),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            validate_contact(&ctx, &Expr::t(), &Expr::x(), &e(&ctx, "u1")),
            Err(Error::ContactViolated(_))
        ));
        let s = ct(&ctx, "t", "u1", "2*x/u1^2 - 2*u/u1^3");
        assert_eq!(s.branch, VBranch::DerivativeRatio);
        assert!(s.v.same_as(&e(&ctx, "-4*x/u1^3 + 6*u/u1^4")));
        let hd = ct(&ctx, "t", "u1^2/u", "x - 2*u/u1");
        assert!(hd.v.same_as(&e(&ctx, "u^2/u1^3")));
    }

    #[test]
    fn prolongation() {
        let ctx = Context::new();
        let id = ct(&ctx, "t", "x", "u");
        assert!(id.prolong(&ctx, 2).unwrap().same_as(&Expr::u(2)));
        let h = ct(&ctx, "t", "u", "x");
        assert!(h.prolong(&ctx, 2).unwrap().same_as(&e(&ctx, "-u2/u1^3")));
        assert!(h
            .prolong(&ctx, 3)
            .unwrap()
            .same_as(&e(&ctx, "(3*u2^2 - u1*u3)/u1^5")));
    }

    #[test]
    fn automatic_inverses() {
        let ctx = Context::new();
        let k = ct(&ctx, "t", "x + t*u", "u");
        let inv = k.inverse(&ctx).unwrap();
        assert!(inv.x.same_as(&e(&ctx, "x - t*u")));
        let p = ct(&ctx, "t", "-2/u", "x/2");
        let inv = p.inverse(&ctx).unwrap();
        assert!(inv.x.same_as(&e(&ctx, "2*u")));
        assert!(inv.u.same_as(&e(&ctx, "-2/x")));
        let c = ct(&ctx, "t", "u1", "2*x/u1^2 - 2*u/u1^3");
        assert!(matches!(c.inverse(&ctx), Err(Error::Inversion { .. })));
    }

    #[test]
    fn hodograph_of_kdv() {
        let ctx = Context::new();
        let eq = EvolutionEquation::new(&ctx, e(&ctx, "u3 + u*u1")).unwrap();
        let h = ct(&ctx, "t", "u", "x");
        let out = transform_equation(&ctx, &eq, &h).unwrap();
        let want = crate::jet::total_dx_n(&ctx, &e(&ctx, "-1/(2*u1^2) - x^3/6"), 2).unwrap();
        assert!(out.rhs().equals(&ctx, &want));
        let cv = ConservedVector::from_density(&ctx, &eq, Expr::u(0)).unwrap();
        let pushed = pushforward_cv(&ctx, &cv, &h).unwrap();
        assert!(verify(&ctx, &pushed).unwrap());
        assert!(characteristic(&ctx, &pushed).unwrap().same_as(&Expr::int(-1)));
    }

    #[test]
    fn round_trip() {
        let ctx = Context::new();
        let eq = EvolutionEquation::new(&ctx, e(&ctx, "u3 + u*u1")).unwrap();
        let k = ct(&ctx, "t", "x + t*u", "u");
        let there = transform_equation(&ctx, &eq, &k).unwrap();
        let back = transform_equation(&ctx, &there, &k.inverted(&ctx).unwrap()).unwrap();
        assert!(back.rhs().equals(&ctx, eq.rhs()));
    }

    #[test]
    fn unit_characteristic_systems() {
        let ctx = Context::new();
        let c = |r: &str, x: &str, u: &str, p: &str| {
            check_unit_char_systems(&ctx, &e(&ctx, r), &e(&ctx, x), &e(&ctx, u), &e(&ctx, p)).unwrap()
        };
        assert!(c("u", "x", "u", "0"));
        assert!(c("u^3 + x*u", "x", "u^3 + x*u", "0"));
        assert!(c("u1^2/u", "u1^2/u", "x - 2*u/u1", "-x*u1^2/u + 4*u1"));
        assert!(c("1/u1", "u1", "2*x/u1^2 - 2*u/u1^3", "2*x/u1 - u/u1^2"));
        assert!(!c("u1^2/u", "u1^2/u", "u - 2*u/u1", "-x*u1^2/u + 4*u1"));
    }

    #[test]
    fn two_law_transforms() {
        let ctx = Context::new();
        let p = two_cl_point_transform(&ctx, &Expr::u(0), &e(&ctx, "u^2/2"), None).unwrap();
        assert!(p.x.same_as(&Expr::u(0)));
        assert!(p.u.same_as(&e(&ctx, "-x")));
        let p = two_cl_point_transform(&ctx, &Expr::u(0), &e(&ctx, "x*u + t*u^2/2"), None).unwrap();
        assert!(p.x.same_as(&e(&ctx, "x + t*u")));
        assert!(p.u.same_as(&Expr::u(0)));
        let p = two_cl_point_transform(&ctx, &Expr::u(0), &e(&ctx, "x*u"), None).unwrap();
        assert!(p.x.same_as(&Expr::x()) && p.u.same_as(&Expr::u(0)));
        assert!(matches!(
            two_cl_point_transform(&ctx, &Expr::u(0), &e(&ctx, "2*u"), None),
            Err(Error::Degenerate(_))
        ));
    }
}
