//! Conserved vectors `(rho, sigma)` with `D_t rho + D_x sigma = 0` on solutions:
//! verification, characteristics, triviality, order reduction and flux recovery.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{equals, Context, Expr, Var, Verdict};
use crate::integrate::integrate;
use crate::jet::{frechet, total_dt, total_dx, variational, EvolutionEquation};

/// A density/flux pair for an evolution equation.
#[derive(Clone, Debug)]
pub struct ConservedVector {
    pub rho: Expr,
    pub sigma: Expr,
    pub equation: EvolutionEquation,
    verified: OnceLock<bool>,
}

impl ConservedVector {
    pub fn new(rho: Expr, sigma: Expr, equation: EvolutionEquation) -> ConservedVector {
        ConservedVector {
            rho,
            sigma,
            equation,
            verified: OnceLock::new(),
        }
    }

    /// Density with the flux recovered by [`flux_from_density`].
    pub fn from_density(ctx: &Context, eq: &EvolutionEquation, rho: Expr) -> Result<ConservedVector> {
        let sigma = flux_from_density(ctx, eq, &rho)?;
        Ok(ConservedVector::new(rho, sigma, eq.clone()))
    }

    /// Cached result of [`verify`].
    pub fn is_verified(&self, ctx: &Context) -> Result<bool> {
        if let Some(v) = self.verified.get() {
            return Ok(*v);
        }
        let v = verify(ctx, self)?;
        let _ = self.verified.set(v);
        Ok(v)
    }
}

/// `D_t rho + D_x sigma`, which vanishes exactly for conserved vectors.
pub fn divergence(ctx: &Context, cv: &ConservedVector) -> Result<Expr> {
    Ok(&total_dt(ctx, &cv.rho, &cv.equation)? + &total_dx(ctx, &cv.sigma)?)
}

/// Verdict on `D_t rho + D_x sigma = 0`, carrying the canonical residual.
pub fn verify_verdict(ctx: &Context, cv: &ConservedVector) -> Result<Verdict> {
    let d = divergence(ctx, cv)?;
    Ok(equals(ctx, &d, &Expr::zero()))
}

pub fn verify(ctx: &Context, cv: &ConservedVector) -> Result<bool> {
    Ok(verify_verdict(ctx, cv)?.equal)
}

/// `rho` lies in the image of `D_x`, tested by `delta rho / delta u = 0`.
pub fn is_trivial_density(ctx: &Context, rho: &Expr) -> Result<bool> {
    Ok(variational(ctx, rho)?.is_zero())
}

/// The characteristic `delta rho / delta u`.
pub fn characteristic(ctx: &Context, cv: &ConservedVector) -> Result<Expr> {
    variational(ctx, &cv.rho)
}

/// Residual `gamma_t + gamma_* F + F_*^dagger gamma` of the cosymmetry condition.
pub fn cosymmetry_residual(ctx: &Context, eq: &EvolutionEquation, gamma: &Expr) -> Result<Expr> {
    let dt = total_dt(ctx, gamma, eq)?;
    let adj = frechet(ctx, eq.rhs())?.adjoint(ctx)?;
    Ok(&dt + &adj.apply(ctx, gamma)?)
}

pub fn is_cosymmetry(ctx: &Context, eq: &EvolutionEquation, gamma: &Expr) -> Result<bool> {
    Ok(cosymmetry_residual(ctx, eq, gamma)?.is_zero())
}

/// A cosymmetry whose Fréchet derivative is formally self-adjoint.
pub fn is_characteristic(ctx: &Context, eq: &EvolutionEquation, gamma: &Expr) -> Result<bool> {
    if !frechet(ctx, gamma)?.is_self_adjoint(ctx)? {
        return Ok(false);
    }
    is_cosymmetry(ctx, eq, gamma)
}

/// One step of order reduction: with `k = ord rho` and `rho` affine in `u_k`,
/// `Phi = int rho_{u_k} du_{k-1}` and the result is `(rho - D_x Phi, sigma + D_t Phi)`.
pub fn reduce_once(ctx: &Context, cv: &ConservedVector) -> Result<ConservedVector> {
    let k = match cv.rho.max_jet_index() {
        Some(k) if k > 0 => k,
        _ => {
            return Err(Error::Precondition(format!(
                "density {} has order 0 and cannot be reduced",
                cv.rho
            )))
        }
    };
    let Some((_, coef)) = cv.rho.affine_in(ctx, k)? else {
        return Err(Error::Irreducible { order: k });
    };
    let phi = integrate(ctx, &coef, Var::U(k - 1))?;
    let rho = &cv.rho - &total_dx(ctx, &phi)?;
    let sigma = &cv.sigma + &total_dt(ctx, &phi, &cv.equation)?;
    Ok(ConservedVector::new(rho, sigma, cv.equation.clone()))
}

/// A conservation law in reduced form.
#[derive(Clone, Debug)]
pub struct ConservationLawRecord {
    pub representative: ConservedVector,
    pub characteristic: Expr,
    pub density_order: usize,
    /// The density reduced to zero, so the law is trivial.
    pub trivial: bool,
    /// Reduction steps performed.
    pub steps: usize,
}

/// Reduces while the density is affine in its top derivative, then records the
/// density order. For even-order equations the order is checked against `n / 2`.
pub fn minimal_density(ctx: &Context, cv: &ConservedVector) -> Result<ConservationLawRecord> {
    if !cv.is_verified(ctx)? {
        return Err(Error::Precondition(format!(
            "({}, {}) is not a conserved vector of {}",
            cv.rho, cv.sigma, cv.equation
        )));
    }
    let mut cur = cv.clone();
    let mut steps = 0;
    while cur.rho.max_jet_index().is_some_and(|k| k > 0) {
        match reduce_once(ctx, &cur) {
            Ok(next) => {
                cur = next;
                steps += 1;
            }
            Err(Error::Irreducible { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let trivial = cur.rho.is_zero() || is_trivial_density(ctx, &cur.rho)?;
    let density_order = if trivial { 0 } else { cur.rho.order() };
    let n = cv.equation.order();
    if !trivial && n % 2 == 0 && density_order > n / 2 {
        return Err(Error::Internal(format!(
            "density order {density_order} exceeds n/2 = {} for the even-order equation {}",
            n / 2,
            cv.equation
        )));
    }
    let characteristic = variational(ctx, &cur.rho)?;
    let _ = cur.verified.set(true);
    Ok(ConservationLawRecord {
        representative: cur,
        characteristic,
        density_order,
        trivial,
        steps,
    })
}

/// Solves `D_x zeta = g` for `g` in the image of `D_x`.
pub fn invert_dx(ctx: &Context, g: &Expr) -> Result<Expr> {
    if !variational(ctx, g)?.is_zero() {
        return Err(Error::Precondition(format!(
            "{g} is not a total x-derivative (its variational derivative is nonzero)"
        )));
    }
    let mut zeta = Expr::zero();
    let mut rem = g.clone();
    while let Some(m) = rem.max_jet_index() {
        if m == 0 {
            return Err(Error::Internal(format!(
                "order-zero remainder {rem} left while inverting D_x"
            )));
        }
        let Some((_, coef)) = rem.affine_in(ctx, m)? else {
            return Err(Error::Internal(format!("remainder {rem} is not affine in u{m}")));
        };
        let phi = integrate(ctx, &coef, Var::U(m - 1))?;
        rem = &rem - &total_dx(ctx, &phi)?;
        zeta = &zeta + &phi;
    }
    if !rem.is_zero() {
        zeta = &zeta + &integrate(ctx, &rem, Var::X)?;
    }
    Ok(zeta)
}

/// `sigma = -D_x^{-1}(D_t rho)`, with the x-integration constant zero.
pub fn flux_from_density(ctx: &Context, eq: &EvolutionEquation, rho: &Expr) -> Result<Expr> {
    let g = total_dt(ctx, rho, eq)?;
    if !variational(ctx, &g)?.is_zero() {
        return Err(Error::NotADensity);
    }
    Ok(invert_dx(ctx, &g)?.neg())
}

/// Two conserved vectors define the same law when their densities differ by a
/// trivial density.
pub fn same_law(ctx: &Context, a: &Expr, b: &Expr) -> Result<bool> {
    is_trivial_density(ctx, &(a - b))
}

/// Shape of the right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    /// `F = F3 u_n + F2 u_{n-1}^2 + F1 u_{n-1} + F0` with `F_i` of lower order.
    pub quasi_linear: bool,
    /// `G` with `F = D_x G`, if any.
    pub conservative: Option<String>,
    /// `H` with `F = D_x^2 H`, if any.
    pub doubly_conservative: Option<String>,
    pub notes: Vec<String>,
}

pub struct Structure {
    pub quasi_linear: bool,
    pub g: Option<Expr>,
    pub h: Option<Expr>,
    pub notes: Vec<String>,
}

impl Structure {
    pub fn report(&self) -> StructureReport {
        StructureReport {
            quasi_linear: self.quasi_linear,
            conservative: self.g.as_ref().map(Expr::to_string),
            doubly_conservative: self.h.as_ref().map(Expr::to_string),
            notes: self.notes.clone(),
        }
    }
}

pub fn structure_check(ctx: &Context, eq: &EvolutionEquation) -> Result<Structure> {
    let f = eq.rhs();
    let n = eq.order();
    let un = Var::U(n);
    let um = Var::U(n - 1);
    let fn_ = f.partial(ctx, un)?;
    let quasi_linear = fn_.partial(ctx, un)?.is_zero()
        && f.partial(ctx, um)?.partial(ctx, um)?.partial(ctx, um)?.is_zero()
        && fn_.partial(ctx, um)?.is_zero();
    let mut notes = Vec::new();
    let mut g = None;
    let mut h = None;
    if variational(ctx, f)?.is_zero() {
        match invert_dx(ctx, f) {
            Ok(gg) => {
                if variational(ctx, &gg)?.is_zero() {
                    match invert_dx(ctx, &gg) {
                        Ok(hh) => h = Some(hh),
                        Err(e) => notes.push(format!("F is in the image of D_x^2 but H was not found: {e}")),
                    }
                }
                g = Some(gg);
            }
            Err(e) => notes.push(format!("F is in the image of D_x but G was not found: {e}")),
        }
    }
    Ok(Structure {
        quasi_linear,
        g,
        h,
        notes,
    })
}

/// Serializable summary of a conserved vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub density: String,
    pub flux: String,
    pub verified: bool,
    pub method: String,
    pub characteristic: String,
    pub density_order: Option<usize>,
    pub trivial: bool,
    pub notes: Vec<String>,
}

/// Verifies a conserved vector and summarises it, reducing it when it verifies.
pub fn law_report(ctx: &Context, cv: &ConservedVector) -> Result<(LawReport, Verdict)> {
    let verdict = verify_verdict(ctx, cv)?;
    let _ = cv.verified.set(verdict.equal);
    let mut notes = Vec::new();
    if let Some(d) = &verdict.diagnostic {
        notes.push(d.clone());
    }
    let characteristic = characteristic(ctx, cv)?;
    let trivial = is_trivial_density(ctx, &cv.rho)?;
    let mut density_order = None;
    if verdict.equal {
        match minimal_density(ctx, cv) {
            Ok(rec) => {
                density_order = Some(rec.density_order);
                if rec.steps > 0 && !rec.trivial {
                    notes.push(format!("reduced density: {}", rec.representative.rho));
                }
            }
            Err(e) => notes.push(format!("reduction failed: {e}")),
        }
    }
    Ok((
        LawReport {
            density: cv.rho.to_string(),
            flux: cv.sigma.to_string(),
            verified: verdict.equal,
            method: verdict.method.to_string(),
            characteristic: characteristic.to_string(),
            density_order,
            trivial,
            notes,
        },
        verdict,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with;

    fn e(ctx: &Context, s: &str) -> Expr {
        parse_with(ctx, s).unwrap()
    }

    fn eq(ctx: &Context, s: &str) -> EvolutionEquation {
        EvolutionEquation::new(ctx, e(ctx, s)).unwrap()
    }

    #[test]
    fn verify_examples() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        let cv = ConservedVector::new(e(&ctx, "u"), e(&ctx, "-(u2 + u^2/2)"), kdv.clone());
        assert!(verify(&ctx, &cv).unwrap());
        let bad = ConservedVector::new(e(&ctx, "u"), Expr::zero(), kdv);
        assert!(!verify(&ctx, &bad).unwrap());
        let hd = eq(&ctx, "u^3*u3");
        let cv = ConservedVector::from_density(&ctx, &hd, e(&ctx, "u^-2")).unwrap();
        assert!(verify(&ctx, &cv).unwrap());
    }

    #[test]
    fn triviality() {
        let mut ctx = Context::new();
        ctx.symbols.declare_function("h", &["t"]).unwrap();
        let d = total_dx(&ctx, &e(&ctx, "u1*u2")).unwrap();
        assert!(is_trivial_density(&ctx, &d).unwrap());
        assert!(!is_trivial_density(&ctx, &e(&ctx, "u^2/2")).unwrap());
        assert!(is_trivial_density(&ctx, &e(&ctx, "h(t)")).unwrap());
    }

    #[test]
    fn characteristics() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        let c = |s: &str| {
            let cv = ConservedVector::new(e(&ctx, s), Expr::zero(), kdv.clone());
            characteristic(&ctx, &cv).unwrap()
        };
        assert!(c("u").is_one());
        assert!(c("x*u + t*u^2/2").same_as(&e(&ctx, "x + t*u")));
        assert!(c("-u1^2/2 + u^3/6").same_as(&e(&ctx, "u2 + u^2/2")));
    }

    #[test]
    fn cosymmetries() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        assert!(is_cosymmetry(&ctx, &kdv, &Expr::one()).unwrap());
        assert!(is_cosymmetry(&ctx, &kdv, &e(&ctx, "x + t*u")).unwrap());
        assert!(!is_cosymmetry(&ctx, &kdv, &e(&ctx, "u1")).unwrap());
        assert!(is_characteristic(&ctx, &kdv, &e(&ctx, "u2 + u^2/2")).unwrap());
        assert!(!is_characteristic(&ctx, &kdv, &e(&ctx, "u1")).unwrap());
        let hd = eq(&ctx, "u^3*u3");
        assert!(is_characteristic(&ctx, &hd, &e(&ctx, "-2*x*u^-3")).unwrap());
        assert!(!is_characteristic(&ctx, &hd, &e(&ctx, "x*u^-2")).unwrap());
    }

    #[test]
    fn reduction() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        let cv = ConservedVector::from_density(&ctx, &kdv, e(&ctx, "u*u2 + u^3/3")).unwrap();
        let r = reduce_once(&ctx, &cv).unwrap();
        assert!(r.rho.same_as(&e(&ctx, "-u1^2 + u^3/3")));
        assert!(verify(&ctx, &r).unwrap());
        assert!(is_trivial_density(&ctx, &(&cv.rho - &r.rho)).unwrap());
        let pure = ConservedVector::from_density(&ctx, &kdv, e(&ctx, "u2")).unwrap();
        assert!(reduce_once(&ctx, &pure).unwrap().rho.is_zero());
        let sq = ConservedVector::new(e(&ctx, "u1^2"), Expr::zero(), kdv);
        assert!(matches!(reduce_once(&ctx, &sq), Err(Error::Irreducible { order: 1 })));
    }

    #[test]
    fn minimal_densities() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        let rho = &e(&ctx, "u") + &total_dx(&ctx, &e(&ctx, "u1^2")).unwrap();
        let cv = ConservedVector::from_density(&ctx, &kdv, rho).unwrap();
        let rec = minimal_density(&ctx, &cv).unwrap();
        assert_eq!(rec.density_order, 0);
        assert!(rec.representative.rho.same_as(&e(&ctx, "u")));
        let hd = eq(&ctx, "u^3*u3");
        for (s, k) in [("u1^2/u", 1), ("x*u^-2", 0)] {
            let cv = ConservedVector::from_density(&ctx, &hd, e(&ctx, s)).unwrap();
            assert_eq!(minimal_density(&ctx, &cv).unwrap().density_order, k);
        }
        let bad = ConservedVector::new(e(&ctx, "u"), Expr::zero(), hd);
        assert!(minimal_density(&ctx, &bad).is_err());
    }

    #[test]
    fn inverse_total_derivative() {
        let ctx = Context::new();
        assert!(invert_dx(&ctx, &e(&ctx, "2*u1*u2")).unwrap().same_as(&e(&ctx, "u1^2")));
        assert!(invert_dx(&ctx, &e(&ctx, "u3 + u*u1"))
            .unwrap()
            .same_as(&e(&ctx, "u2 + u^2/2")));
        assert!(matches!(
            invert_dx(&ctx, &e(&ctx, "u^2")),
            Err(Error::Precondition(_))
        ));
        assert!(invert_dx(&ctx, &e(&ctx, "exp(x)*u + exp(x)*u1"))
            .unwrap()
            .same_as(&e(&ctx, "exp(x)*u")));
        assert!(matches!(
            invert_dx(&ctx, &e(&ctx, "exp(x^2)")),
            Err(Error::NoClosedForm { .. })
        ));
    }

    #[test]
    fn fluxes() {
        let ctx = Context::new();
        let kdv = eq(&ctx, "u3 + u*u1");
        let s = flux_from_density(&ctx, &kdv, &e(&ctx, "u^2/2")).unwrap();
        assert!(s.same_as(&e(&ctx, "-(u*u2 - u1^2/2 + u^3/3)")));
        let hd = eq(&ctx, "u^3*u3");
        let cv = ConservedVector::from_density(&ctx, &hd, e(&ctx, "u^-1")).unwrap();
        assert!(verify(&ctx, &cv).unwrap());
        let cv = ConservedVector::from_density(&ctx, &kdv, e(&ctx, "u1")).unwrap();
        assert!(verify(&ctx, &cv).unwrap());
        assert!(matches!(
            flux_from_density(&ctx, &kdv, &e(&ctx, "u^3")),
            Err(Error::NotADensity)
        ));
    }

    #[test]
    fn structure() {
        let ctx = Context::new();
        let s = structure_check(&ctx, &eq(&ctx, "u3 + u*u1")).unwrap();
        assert!(s.quasi_linear);
        assert!(s.g.unwrap().same_as(&e(&ctx, "u2 + u^2/2")));
        assert!(s.h.is_none());
        let f = crate::jet::total_dx_n(&ctx, &e(&ctx, "u^(-1/2)"), 2).unwrap();
        let s = structure_check(&ctx, &EvolutionEquation::new(&ctx, f).unwrap()).unwrap();
        assert!(s.h.unwrap().same_as(&e(&ctx, "u^(-1/2)")));
        let s = structure_check(&ctx, &eq(&ctx, "u^3*u3")).unwrap();
        assert!(s.g.is_none());
    }
}
