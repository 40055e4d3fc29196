//! Linear evolution equations `u_t = A u` with `A = sum A^i(t,x) D_x^i`: adjoint
//! equations, linear and quadratic conservation laws, and cosymmetry determining systems.

use rayon::prelude::*;
use serde::Serialize;

use crate::conslaw::{cosymmetry_residual, ConservedVector};
use crate::error::{Error, Result};
use crate::expr::{Atom, Coeff, Context, Expr, Var};
use crate::jet::{DiffOp, EvolutionEquation};
use crate::linalg::linear_relations;

/// An operator `sum Gamma^k(t,x) D_x^k`.
pub type GammaOperator = DiffOp;

/// A linear operator of order at least two with `(t, x)`-dependent coefficients.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    op: DiffOp,
}

impl LinearOperator {
    pub fn new(op: DiffOp) -> Result<LinearOperator> {
        if !op.has_tx_coefficients() {
            return Err(Error::Precondition(format!(
                "coefficients of {op} must depend on (t, x) only"
            )));
        }
        if op.is_zero() || op.order() < 2 {
            return Err(Error::Precondition(format!("{op} must have order at least 2")));
        }
        Ok(LinearOperator { op })
    }

    pub fn op(&self) -> &DiffOp {
        &self.op
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn coeff(&self, i: usize) -> Expr {
        self.op.coeff(i)
    }

    /// The equation `u_t = A u`.
    pub fn equation(&self, ctx: &Context) -> Result<EvolutionEquation> {
        EvolutionEquation::new(ctx, self.op.apply(ctx, &Expr::u(0))?)
    }
}

impl std::fmt::Display for LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.op.fmt(f)
    }
}

/// `(A, F(t,x,0))` when `F` is affine in every `u_j` with `(t, x)` coefficients.
pub fn linear_part(ctx: &Context, eq: &EvolutionEquation) -> Result<Option<(LinearOperator, Expr)>> {
    let f = eq.rhs();
    let mut coeffs = Vec::with_capacity(eq.order() + 1);
    for j in 0..=eq.order() {
        let c = f.partial(ctx, Var::U(j))?;
        if c.has_jet_vars() {
            return Ok(None);
        }
        coeffs.push(c);
    }
    let lin = DiffOp::new(coeffs.clone());
    let rest = f - &lin.apply(ctx, &Expr::u(0))?;
    if rest.has_jet_vars() {
        return Ok(None);
    }
    Ok(Some((LinearOperator::new(lin)?, rest)))
}

/// The operator of a homogeneous linear equation; `None` otherwise.
pub fn as_linear(ctx: &Context, eq: &EvolutionEquation) -> Result<Option<LinearOperator>> {
    Ok(linear_part(ctx, eq)?.and_then(|(op, rest)| rest.is_zero().then_some(op)))
}

pub fn formal_adjoint(ctx: &Context, op: &LinearOperator) -> Result<LinearOperator> {
    LinearOperator::new(op.op.adjoint(ctx)?)
}

/// `v_t + A^dagger v = 0`.
pub fn is_adjoint_solution(ctx: &Context, op: &LinearOperator, v: &Expr) -> Result<bool> {
    if v.has_jet_vars() {
        return Ok(false);
    }
    let r = &v.partial(ctx, Var::T)? + &op.op.adjoint(ctx)?.apply(ctx, v)?;
    Ok(crate::expr::equals(ctx, &r, &Expr::zero()).equal)
}

/// `sigma = sum sigma^i u_i` with `sigma^{n-1} = -v A^n` and
/// `sigma^{i-1} = -v A^i - sigma^i_x`, for any `v(t, x)`. Then
/// `D_t(v u) + D_x sigma = (v_t + A^dagger v) u`.
pub fn flux_recursion(ctx: &Context, op: &LinearOperator, v: &Expr) -> Result<Expr> {
    let n = op.order();
    let mut sig = vec![Expr::zero(); n];
    sig[n - 1] = (v * &op.coeff(n)).neg();
    for i in (1..n).rev() {
        sig[i - 1] = &(v * &op.coeff(i)).neg() - &sig[i].partial(ctx, Var::X)?;
    }
    Ok(sig.iter().enumerate().map(|(i, s)| s * &Expr::u(i)).sum())
}

/// `rho = v u` with the flux of [`flux_recursion`], for adjoint solutions `v`.
pub fn linear_flux(ctx: &Context, op: &LinearOperator, v: &Expr) -> Result<ConservedVector> {
    if !is_adjoint_solution(ctx, op, v)? {
        return Err(Error::Precondition(format!(
            "{v} does not solve the adjoint equation v_t + A^dagger v = 0"
        )));
    }
    let sigma = flux_recursion(ctx, op, v)?;
    Ok(ConservedVector::new(v * &Expr::u(0), sigma, op.equation(ctx)?))
}

/// The cosymmetry condition for `gamma = sum_{k<=r} g^k u_k + v`, split by jet variables.
#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub r: usize,
    /// Unknown function names `g0, ..., gr, v`.
    pub unknowns: Vec<String>,
    /// `(label, residual)`: the coefficient of `u_m` (label `u_m`) or the jet-free part (label `1`).
    pub equations: Vec<(String, Expr)>,
    residual: Expr,
}

impl DeterminingSystem {
    /// The residual that must vanish identically for the coefficient of `label`.
    pub fn equation(&self, label: &str) -> Option<&Expr> {
        self.equations.iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }

    /// The total residual before splitting.
    pub fn residual(&self) -> &Expr {
        &self.residual
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeterminingReport {
    pub r: usize,
    pub unknowns: Vec<String>,
    pub equations: Vec<(String, String)>,
}

impl DeterminingSystem {
    pub fn report(&self) -> DeterminingReport {
        DeterminingReport {
            r: self.r,
            unknowns: self.unknowns.clone(),
            equations: self
                .equations
                .iter()
                .map(|(l, e)| (l.clone(), format!("{e} = 0")))
                .collect(),
        }
    }
}

fn unknown_names(r: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..=r).map(|k| format!("g{k}")).collect();
    names.push("v".into());
    names
}

pub fn determining_system(ctx: &Context, op: &LinearOperator, r: usize) -> Result<DeterminingSystem> {
    let names = unknown_names(r);
    let mut gamma = Expr::unknown(&names[r + 1]);
    for k in 0..=r {
        gamma = &gamma + &(&Expr::unknown(&names[k]) * &Expr::u(k));
    }
    let eq = op.equation(ctx)?;
    let residual = cosymmetry_residual(ctx, &eq, &gamma)?;
    let top = residual.max_jet_index().unwrap_or(0);
    let mut equations = Vec::new();
    for m in (0..=top).rev() {
        let c = residual.partial(ctx, Var::U(m))?;
        if c.has_jet_vars() {
            return Err(Error::Internal(format!("residual is not affine in u{m}")));
        }
        if !c.is_zero() {
            equations.push((format!("u{m}"), c));
        }
    }
    let free = residual.substitute(&|a| match a {
        Atom::Var(Var::U(_)) => Some(Expr::zero()),
        _ => None,
    })?;
    if !free.is_zero() {
        equations.push(("1".into(), free));
    }
    Ok(DeterminingSystem {
        r,
        unknowns: names,
        equations,
        residual,
    })
}

/// A solution `gamma = Gamma u + v` of the determining system.
#[derive(Clone, Debug)]
pub struct DeterminingSolution {
    pub gamma: GammaOperator,
    pub v: Expr,
}

impl DeterminingSolution {
    pub fn is_jet_free(&self) -> bool {
        self.gamma.is_zero()
    }

    pub fn cosymmetry(&self, ctx: &Context) -> Result<Expr> {
        Ok(&self.gamma.apply(ctx, &Expr::u(0))? + &self.v)
    }
}

/// Monomials `t^a x^b` with `a + b <= degree`.
pub fn tx_monomials(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in 0..=degree as u32 {
        for a in 0..=d {
            out.push((a, d - a));
        }
    }
    out
}

fn tx_monomial(a: u32, b: u32) -> Expr {
    &Expr::t().pow_int(a as i64).expect("nonnegative power") * &Expr::x().pow_int(b as i64).expect("nonnegative power")
}

/// `d^dt/dt^dt d^dx/dx^dx (t^a x^b)`.
fn tx_derivative(a: u32, b: u32, dt: u32, dx: u32) -> Expr {
    if dt > a || dx > b {
        return Expr::zero();
    }
    let falling = |n: u32, k: u32| (0..k).fold(1i64, |acc, i| acc * (n - i) as i64);
    tx_monomial(a - dt, b - dx).scale(&Coeff::from_integer((falling(a, dt) * falling(b, dx)).into()))
}

/// Basis of the solutions whose unknowns are polynomials in `(t, x)` of degree at
/// most `degree`, found by exact linear algebra on monomial coefficients.
pub fn solve_determining(
    ctx: &Context,
    op: &LinearOperator,
    r: usize,
    degree: usize,
) -> Result<Vec<DeterminingSolution>> {
    let sys = determining_system(ctx, op, r)?;
    let monos = tx_monomials(degree);
    let slots: Vec<(usize, (u32, u32))> = (0..sys.unknowns.len())
        .flat_map(|f| monos.iter().map(move |m| (f, *m)))
        .collect();
    let residual = sys.residual();
    let contributions: Vec<Expr> = slots
        .par_iter()
        .map(|(f, (a, b))| {
            let name = &sys.unknowns[*f];
            residual.substitute(&|atom| match atom {
                Atom::Unknown { name: n, dt, dx } => Some(if n == name {
                    tx_derivative(*a, *b, *dt, *dx)
                } else {
                    Expr::zero()
                }),
                _ => None,
            })
        })
        .collect::<Result<_>>()?;
    let kernel = linear_relations(&contributions)?;
    let mut out = Vec::with_capacity(kernel.len());
    for c in kernel {
        let mut fns = vec![Expr::zero(); sys.unknowns.len()];
        for ((f, (a, b)), ci) in slots.iter().zip(&c) {
            if !num_traits::Zero::is_zero(ci) {
                fns[*f] = &fns[*f] + &tx_monomial(*a, *b).scale(ci);
            }
        }
        let v = fns.pop().expect("v slot");
        out.push(DeterminingSolution {
            gamma: DiffOp::new(fns),
            v,
        });
    }
    Ok(out)
}

/// `Gamma_t + Gamma A + A^dagger Gamma = 0`.
pub fn gamma_residual(ctx: &Context, op: &LinearOperator, g: &GammaOperator) -> Result<DiffOp> {
    let adj = op.op.adjoint(ctx)?;
    Ok(g.partial_t(ctx)?
        .add(&g.compose(ctx, &op.op)?)
        .add(&adj.compose(ctx, g)?))
}

pub fn check_gamma(ctx: &Context, op: &LinearOperator, g: &GammaOperator) -> Result<bool> {
    Ok(gamma_residual(ctx, op, g)?.is_zero())
}

/// `(Gamma + Gamma^dagger) / 2`.
pub fn self_adjoint_part(ctx: &Context, g: &GammaOperator) -> Result<GammaOperator> {
    Ok(g.add(&g.adjoint(ctx)?).scale(&Expr::frac(1, 2)))
}

/// `rho = u Gamma u / 2` with its flux.
pub fn quadratic_cv(ctx: &Context, op: &LinearOperator, g: &GammaOperator) -> Result<ConservedVector> {
    if !g.has_tx_coefficients() {
        return Err(Error::Precondition(format!(
            "coefficients of {g} must depend on (t, x) only"
        )));
    }
    if !check_gamma(ctx, op, g)? {
        return Err(Error::Precondition(format!(
            "Gamma = {g} violates Gamma_t + Gamma A + A^dagger Gamma = 0"
        )));
    }
    if !g.is_self_adjoint(ctx)? {
        return Err(Error::Precondition(format!(
            "Gamma = {g} is not formally self-adjoint; use its self-adjoint part"
        )));
    }
    let eq = op.equation(ctx)?;
    let rho = (&Expr::u(0) * &g.apply(ctx, &Expr::u(0))?).scale(&Coeff::new(1.into(), 2.into()));
    ConservedVector::from_density(ctx, &eq, rho)
}

/// `D_x^m Upsilon^l D_x^m` with `Upsilon = x + 3t D_x^2`.
pub fn upsilon_gamma(ctx: &Context, l: usize, m: usize) -> Result<GammaOperator> {
    let size = 2 * l + 2 * m;
    if size > ctx.nmax {
        return Err(Error::JetOverflow {
            index: size,
            max: ctx.nmax,
        });
    }
    let ups = DiffOp::new(vec![Expr::x(), Expr::zero(), Expr::t().scale(&Coeff::from_integer(3.into()))]);
    let dm = DiffOp::dx_pow(m);
    dm.compose(ctx, &ups.pow(ctx, l)?)?.compose(ctx, &dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conslaw::{is_characteristic, minimal_density, verify};
    use crate::expr::parse_with;
    use crate::jet::parse_operator;

    fn e(ctx: &Context, s: &str) -> Expr {
        parse_with(ctx, s).unwrap()
    }

    fn lop(ctx: &Context, s: &str) -> LinearOperator {
        LinearOperator::new(parse_operator(ctx, s).unwrap()).unwrap()
    }

    #[test]
    fn linear_extraction() {
        let ctx = Context::new();
        let eq = |s: &str| EvolutionEquation::new(&ctx, e(&ctx, s)).unwrap();
        let op = as_linear(&ctx, &eq("u3")).unwrap().unwrap();
        assert!(op.op().same_as(&DiffOp::dx_pow(3)));
        let op = as_linear(&ctx, &eq("u3 + x*u")).unwrap().unwrap();
        assert!(op.coeff(0).same_as(&Expr::x()) && op.coeff(3).is_one());
        assert!(as_linear(&ctx, &eq("u3 + u*u1")).unwrap().is_none());
        assert!(as_linear(&ctx, &eq("u3 + x")).unwrap().is_none());
        assert!(linear_part(&ctx, &eq("u3 + x")).unwrap().unwrap().1.same_as(&Expr::x()));
    }

    #[test]
    fn adjoints() {
        let ctx = Context::new();
        let a = formal_adjoint(&ctx, &lop(&ctx, "Dx^3")).unwrap();
        assert!(a.op().same_as(&DiffOp::dx_pow(3).neg()));
        let a = formal_adjoint(&ctx, &lop(&ctx, "Dx^3 + x")).unwrap();
        assert!(a.op().same_as(&parse_operator(&ctx, "-Dx^3 + x").unwrap()));
        let a = formal_adjoint(&ctx, &lop(&ctx, "Dx^2")).unwrap();
        assert!(a.op().same_as(&DiffOp::dx_pow(2)));
    }

    #[test]
    fn adjoint_solutions() {
        let ctx = Context::new();
        let d3 = lop(&ctx, "Dx^3");
        assert!(is_adjoint_solution(&ctx, &d3, &Expr::x()).unwrap());
        assert!(!is_adjoint_solution(&ctx, &d3, &e(&ctx, "x^3 + 36*t")).unwrap());
        assert!(is_adjoint_solution(&ctx, &d3, &e(&ctx, "x^3 + 6*t")).unwrap());
        let d2 = lop(&ctx, "Dx^2");
        assert!(!is_adjoint_solution(&ctx, &d2, &e(&ctx, "exp(-t)*sin(x)")).unwrap());
        assert!(is_adjoint_solution(&ctx, &d2, &e(&ctx, "exp(t)*sin(x)")).unwrap());
    }

    #[test]
    fn fluxes() {
        let ctx = Context::new();
        let d3 = lop(&ctx, "Dx^3");
        let cv = linear_flux(&ctx, &d3, &Expr::one()).unwrap();
        assert!(cv.sigma.same_as(&e(&ctx, "-u2")));
        let cv = linear_flux(&ctx, &d3, &Expr::x()).unwrap();
        assert!(cv.sigma.same_as(&e(&ctx, "-x*u2 + u1")));
        assert!(verify(&ctx, &cv).unwrap());
        assert!(linear_flux(&ctx, &d3, &e(&ctx, "x^3")).is_err());
    }

    #[test]
    fn gamma_operators() {
        let ctx = Context::new();
        let d3 = lop(&ctx, "Dx^3");
        let ups = upsilon_gamma(&ctx, 1, 0).unwrap();
        assert!(ups.same_as(&parse_operator(&ctx, "x + 3*t*Dx^2").unwrap()));
        assert!(upsilon_gamma(&ctx, 0, 0).unwrap().same_as(&DiffOp::identity()));
        assert!(upsilon_gamma(&ctx, 1, 1)
            .unwrap()
            .same_as(&parse_operator(&ctx, "x*Dx^2 + Dx + 3*t*Dx^4").unwrap()));
        assert!(check_gamma(&ctx, &d3, &DiffOp::identity()).unwrap());
        assert!(check_gamma(&ctx, &d3, &ups).unwrap());
        assert!(!check_gamma(&ctx, &lop(&ctx, "Dx^3 + x"), &DiffOp::identity()).unwrap());
        assert!(self_adjoint_part(&ctx, &DiffOp::dx_pow(1)).unwrap().is_zero());
        assert!(self_adjoint_part(&ctx, &ups).unwrap().same_as(&ups));
        let g = parse_operator(&ctx, "Dx^2 + Dx").unwrap();
        assert!(self_adjoint_part(&ctx, &g).unwrap().same_as(&DiffOp::dx_pow(2)));
    }

    #[test]
    fn quadratic_laws() {
        let ctx = Context::new();
        let d3 = lop(&ctx, "Dx^3");
        let cv = quadratic_cv(&ctx, &d3, &DiffOp::identity()).unwrap();
        assert!(cv.rho.same_as(&e(&ctx, "u^2/2")));
        assert!(verify(&ctx, &cv).unwrap());
        let g = upsilon_gamma(&ctx, 1, 1).unwrap();
        let cv = quadratic_cv(&ctx, &d3, &g).unwrap();
        assert_eq!(minimal_density(&ctx, &cv).unwrap().density_order, 2);
        let eq = d3.equation(&ctx).unwrap();
        assert!(is_characteristic(&ctx, &eq, &g.apply(&ctx, &Expr::u(0)).unwrap()).unwrap());
        assert!(quadratic_cv(&ctx, &d3, &DiffOp::dx_pow(1)).is_err());
    }

    #[test]
    fn determining_systems() {
        let ctx = Context::new();
        let op = lop(&ctx, "Dx^3 + x");
        let sys = determining_system(&ctx, &op, 4).unwrap();
        // coefficient of u_{i+2}: 3 g^i_x - (i+3) g^{i+3} - g^{i+2}_t + g^{i+2}_xxx - 2x g^{i+2} + 3 g^{i+1}_xx
        // appears with a common factor
        let i = 1;
        let g = |k: usize, dt: u32, dx: u32| Expr::unknown_derivative(&format!("g{k}"), dt, dx);
        let want = &(&(&(&(&g(i, 0, 1).scale(&Coeff::from_integer(3.into()))
            - &g(i + 3, 0, 0).scale(&Coeff::from_integer(((i + 3) as i64).into())))
            - &g(i + 2, 1, 0))
            + &g(i + 2, 0, 3))
            - &(&Expr::x() * &g(i + 2, 0, 0)).scale(&Coeff::from_integer(2.into())))
            + &g(i + 1, 0, 2).scale(&Coeff::from_integer(3.into()));
        let c = sys.equation(&format!("u{}", i + 2)).unwrap();
        let ratio = c.div(&want).unwrap();
        assert!(ratio.as_constant().is_some(), "{c}");
        let heat = lop(&ctx, "Dx^2");
        let sys = determining_system(&ctx, &heat, 2).unwrap();
        assert!(sys.equation("u4").unwrap().same_as(&g(2, 0, 0).scale(&Coeff::from_integer(2.into()))));
    }

    #[test]
    fn determining_solutions() {
        let ctx = Context::new();
        let d3 = lop(&ctx, "Dx^3");
        let sols = solve_determining(&ctx, &d3, 2, 1).unwrap();
        let ups = upsilon_gamma(&ctx, 1, 0).unwrap();
        let gammas: Vec<Expr> = sols.iter().map(|s| s.cosymmetry(&ctx).unwrap()).collect();
        let mut with_ups = gammas.clone();
        with_ups.push(ups.apply(&ctx, &Expr::u(0)).unwrap());
        assert_eq!(
            crate::linalg::expr_rank(&with_ups).unwrap(),
            crate::linalg::expr_rank(&gammas).unwrap()
        );
        let sols = solve_determining(&ctx, &d3, 0, 0).unwrap();
        assert!(sols.iter().any(|s| s.gamma.same_as(&DiffOp::identity())));
        let sols = solve_determining(&ctx, &lop(&ctx, "Dx^2"), 2, 2).unwrap();
        assert!(sols.iter().all(DeterminingSolution::is_jet_free));
    }
}
