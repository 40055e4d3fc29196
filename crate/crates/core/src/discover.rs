//! Conservation laws and cosymmetries within a finite ansatz, by exact linear algebra.

use rayon::prelude::*;
use serde::Serialize;

use crate::conslaw::{
    cosymmetry_residual, is_characteristic, minimal_density, ConservationLawRecord, ConservedVector,
};
use crate::error::{Error, Result};
use crate::expr::{Coeff, Context, Expr};
use crate::jet::{total_dt, variational, EvolutionEquation};
use crate::linalg::{linear_relations, Echelon, SparseRow};

pub const DEFAULT_BASIS_CAP: usize = 2000;

/// Parameters of the automatic candidate basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisSpec {
    pub max_order: usize,
    /// Total degree in `u_0, ..., u_max_order`.
    pub jet_degree: usize,
    /// Total degree in `t, x`.
    pub tx_degree: usize,
    /// Keep terms with no jet variables.
    pub include_jet_free: bool,
    /// Drop terms affine in their top derivative `u_k`, `k >= 1`; these are
    /// equivalent modulo `Im D_x` to terms of lower order in the same family.
    pub gauge: bool,
    pub cap: usize,
}

impl BasisSpec {
    pub fn new(max_order: usize, jet_degree: usize, tx_degree: usize) -> BasisSpec {
        BasisSpec {
            max_order,
            jet_degree,
            tx_degree,
            include_jet_free: false,
            gauge: false,
            cap: DEFAULT_BASIS_CAP,
        }
    }
}

/// Exponent vectors of length `n` with sum at most `d`.
fn exponent_vectors(n: usize, d: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=d {
        for mut rest in exponent_vectors(n - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn generate_basis(spec: &BasisSpec) -> Result<Vec<Expr>> {
    let mut jets = exponent_vectors(spec.max_order + 1, spec.jet_degree);
    jets.sort_by_key(|v| (v.iter().sum::<usize>(), v.iter().rposition(|e| *e > 0)));
    let mut tx = exponent_vectors(2, spec.tx_degree);
    tx.sort_by_key(|v| (v[0] + v[1], v[0]));
    let mut out = Vec::new();
    for jv in &jets {
        let degree: usize = jv.iter().sum();
        if degree == 0 && !spec.include_jet_free {
            continue;
        }
        if spec.gauge {
            if let Some(top) = jv.iter().rposition(|e| *e > 0) {
                if top >= 1 && jv[top] == 1 {
                    continue;
                }
            }
        }
        let mut jet = Expr::one();
        for (j, e) in jv.iter().enumerate() {
            if *e > 0 {
                jet = &jet * &Expr::u(j).pow_int(*e as i64)?;
            }
        }
        for t in &tx {
            let m = &(&Expr::t().pow_int(t[0] as i64)? * &Expr::x().pow_int(t[1] as i64)?) * &jet;
            out.push(m);
            if out.len() > spec.cap {
                return Err(Error::Precondition(format!(
                    "candidate basis exceeds the cap of {} terms",
                    spec.cap
                )));
            }
        }
    }
    Ok(out)
}

/// Outcome of a conservation-law search.
#[derive(Clone, Debug)]
pub struct Discovery {
    pub basis_size: usize,
    /// Dimension of the space of conserved densities in the ansatz, trivial ones included.
    pub kernel_dimension: usize,
    /// One reduced record per independent conservation law.
    pub laws: Vec<ConservationLawRecord>,
    pub rejected: Vec<String>,
}

impl Discovery {
    pub fn dimension(&self) -> usize {
        self.laws.len()
    }
}

fn combine(basis: &[Expr], c: &[Coeff]) -> Expr {
    basis
        .iter()
        .zip(c)
        .filter(|(_, ci)| !num_traits::Zero::is_zero(*ci))
        .map(|(b, ci)| b.scale(ci))
        .sum()
}

fn split_rejected<F>(basis: &[Expr], f: F) -> (Vec<Expr>, Vec<Expr>, Vec<String>)
where
    F: Fn(&Expr) -> Result<Expr> + Sync,
{
    let images: Vec<Result<Expr>> = basis.par_iter().map(&f).collect();
    let mut kept = Vec::new();
    let mut kept_images = Vec::new();
    let mut rejected = Vec::new();
    for (b, img) in basis.iter().zip(images) {
        match img {
            Ok(e) if crate::expr::in_decidable_fragment(&e) => {
                kept.push(b.clone());
                kept_images.push(e);
            }
            Ok(_) => rejected.push(format!("{b}: image leaves the decidable fragment")),
            Err(err) => rejected.push(format!("{b}: {err}")),
        }
    }
    (kept, kept_images, rejected)
}

/// Indices of a maximal linearly independent subfamily, in order.
fn independent_subset(exprs: &[Expr]) -> Result<Vec<usize>> {
    let polys = crate::linalg::common_numerators(exprs)?;
    let mut index = std::collections::BTreeMap::new();
    for p in &polys {
        for (m, _) in p.terms() {
            let n = index.len();
            index.entry(m.clone()).or_insert(n);
        }
    }
    let mut ech = Echelon::new(index.len());
    let mut out = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        let row: SparseRow = p.terms().map(|(m, c)| (index[m], c.clone())).collect();
        if ech.push(row) {
            out.push(i);
        }
    }
    Ok(out)
}

/// Densities `sum c_i b_i` with `delta(D_t rho) / delta u = 0`, returned as a
/// basis modulo trivial densities, each reduced to minimal order.
pub fn find_conservation_laws(ctx: &Context, eq: &EvolutionEquation, basis: &[Expr]) -> Result<Discovery> {
    let (kept, images, rejected) = split_rejected(basis, |b| variational(ctx, &total_dt(ctx, b, eq)?));
    let kernel = linear_relations(&images)?;
    let densities: Vec<Expr> = kernel.iter().map(|c| combine(&kept, c)).collect();
    let chars: Vec<Expr> = densities
        .par_iter()
        .map(|d| variational(ctx, d))
        .collect::<Result<_>>()?;
    // independence modulo Im D_x is independence of characteristics
    let mut order: Vec<usize> = (0..densities.len()).filter(|i| !chars[*i].is_zero()).collect();
    order.sort_by_key(|i| (densities[*i].order(), densities[*i].size()));
    let sorted: Vec<Expr> = order.iter().map(|i| chars[*i].clone()).collect();
    let chosen: Vec<usize> = independent_subset(&sorted)?.into_iter().map(|k| order[k]).collect();
    let laws = chosen
        .par_iter()
        .map(|i| {
            let cv = ConservedVector::from_density(ctx, eq, densities[*i].clone())?;
            minimal_density(ctx, &cv)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Discovery {
        basis_size: basis.len(),
        kernel_dimension: kernel.len(),
        laws,
        rejected,
    })
}

#[derive(Clone, Debug)]
pub struct CosymmetryRecord {
    pub gamma: Expr,
    pub is_characteristic: bool,
}

/// Cosymmetries `sum c_i b_i` within the ansatz.
pub fn cosymmetry_scan(ctx: &Context, eq: &EvolutionEquation, basis: &[Expr]) -> Result<(Vec<CosymmetryRecord>, Vec<String>)> {
    let (kept, images, rejected) = split_rejected(basis, |b| cosymmetry_residual(ctx, eq, b));
    let kernel = linear_relations(&images)?;
    let out = kernel
        .par_iter()
        .map(|c| {
            let gamma = combine(&kept, c);
            let is_characteristic = is_characteristic(ctx, eq, &gamma)?;
            Ok(CosymmetryRecord {
                gamma,
                is_characteristic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, rejected))
}

/// Rank of a family of densities modulo `Im D_x`.
pub fn rank_modulo_trivial(ctx: &Context, densities: &[Expr]) -> Result<usize> {
    let chars: Vec<Expr> = densities.iter().map(|d| variational(ctx, d)).collect::<Result<_>>()?;
    crate::linalg::expr_rank(&chars)
}

/// True when every density of `targets` lies in the span of `found` modulo `Im D_x`.
pub fn spans(ctx: &Context, found: &[Expr], targets: &[Expr]) -> Result<bool> {
    let r = rank_modulo_trivial(ctx, found)?;
    let mut all = found.to_vec();
    all.extend_from_slice(targets);
    Ok(rank_modulo_trivial(ctx, &all)? == r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conslaw::{is_trivial_density, verify};
    use crate::expr::parse_with;

    fn e(ctx: &Context, s: &str) -> Expr {
        parse_with(ctx, s).unwrap()
    }

    fn es(ctx: &Context, v: &[&str]) -> Vec<Expr> {
        v.iter().map(|s| e(ctx, s)).collect()
    }

    fn contains(basis: &[Expr], e: &Expr) -> bool {
        basis.iter().any(|b| b.same_as(e))
    }

    #[test]
    fn bases() {
        let ctx = Context::new();
        let b = generate_basis(&BasisSpec::new(1, 3, 1)).unwrap();
        for s in ["u", "u^2", "u^3", "u1^2", "x*u", "t*u^2"] {
            assert!(contains(&b, &e(&ctx, s)), "{s}");
        }
        let b = generate_basis(&BasisSpec::new(0, 1, 0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].same_as(&Expr::u(0)));
        let b = generate_basis(&BasisSpec::new(2, 2, 1)).unwrap();
        for s in ["u*u2", "u1^2", "x*u^2", "t*u*u2"] {
            assert!(contains(&b, &e(&ctx, s)), "{s}");
        }
        let mut g = BasisSpec::new(2, 2, 1);
        g.gauge = true;
        let b = generate_basis(&g).unwrap();
        assert!(!contains(&b, &e(&ctx, "u*u2")) && contains(&b, &e(&ctx, "u1^2")));
        let mut big = BasisSpec::new(6, 6, 6);
        big.cap = 100;
        assert!(generate_basis(&big).is_err());
    }

    #[test]
    fn kdv_laws() {
        let ctx = Context::new();
        let eq = EvolutionEquation::new(&ctx, e(&ctx, "u3 + u*u1")).unwrap();
        let basis = generate_basis(&BasisSpec::new(1, 3, 1)).unwrap();
        let d = find_conservation_laws(&ctx, &eq, &basis).unwrap();
        assert_eq!(d.dimension(), 4);
        let found: Vec<Expr> = d.laws.iter().map(|l| l.representative.rho.clone()).collect();
        let golden = es(&ctx, &["u", "u^2/2", "x*u + t*u^2/2", "-u1^2/2 + u^3/6"]);
        assert!(spans(&ctx, &found, &golden).unwrap());
        for l in &d.laws {
            assert!(verify(&ctx, &l.representative).unwrap());
            assert!(!is_trivial_density(&ctx, &l.representative.rho).unwrap());
        }
    }

    #[test]
    fn harry_dym_laws() {
        let ctx = Context::new();
        let eq = EvolutionEquation::new(&ctx, e(&ctx, "u^3*u3")).unwrap();
        let basis = es(&ctx, &["u^-2", "x*u^-2", "x^2*u^-2", "u^-1", "u1^2*u^-1", "u", "u^2", "x*u"]);
        let d = find_conservation_laws(&ctx, &eq, &basis).unwrap();
        assert_eq!(d.dimension(), 5);
        let mut orders: Vec<usize> = d.laws.iter().map(|l| l.density_order).collect();
        orders.sort();
        assert_eq!(orders, vec![0, 0, 0, 0, 1]);
    }

    #[test]
    fn schwarzian_has_no_zero_order_laws() {
        let ctx = Context::new();
        let eq = EvolutionEquation::new(&ctx, e(&ctx, "u3 - 3/2*u2^2/u1")).unwrap();
        let basis = generate_basis(&BasisSpec::new(0, 4, 2)).unwrap();
        assert_eq!(find_conservation_laws(&ctx, &eq, &basis).unwrap().dimension(), 0);
        let d = find_conservation_laws(&ctx, &eq, &es(&ctx, &["1/u1", "u/u1", "u^2/u1"])).unwrap();
        assert_eq!(d.dimension(), 3);
    }

    #[test]
    fn cosymmetries() {
        let ctx = Context::new();
        let kdv = EvolutionEquation::new(&ctx, e(&ctx, "u3 + u*u1")).unwrap();
        let mut spec = BasisSpec::new(2, 2, 1);
        spec.include_jet_free = true;
        let basis = generate_basis(&spec).unwrap();
        let (found, _) = cosymmetry_scan(&ctx, &kdv, &basis).unwrap();
        let gammas: Vec<Expr> = found.iter().map(|c| c.gamma.clone()).collect();
        let golden = es(&ctx, &["1", "u", "u2 + u^2/2", "x + t*u"]);
        let r = crate::linalg::expr_rank(&gammas).unwrap();
        let mut all = gammas.clone();
        all.extend(golden);
        assert_eq!(crate::linalg::expr_rank(&all).unwrap(), r);
        assert!(found.iter().all(|c| c.is_characteristic));
        let heat = EvolutionEquation::new(&ctx, e(&ctx, "u2")).unwrap();
        let mut spec = BasisSpec::new(2, 1, 2);
        spec.include_jet_free = true;
        let (found, _) = cosymmetry_scan(&ctx, &heat, &generate_basis(&spec).unwrap()).unwrap();
        assert!(!found.is_empty());
        assert!(found.iter().all(|c| !c.gamma.has_jet_vars()));
        let s = EvolutionEquation::new(&ctx, e(&ctx, "u3 - 3/2*u2^2/u1")).unwrap();
        let chars: Vec<Expr> = ["1/u1", "u/u1", "u^2/u1"]
            .iter()
            .map(|r| variational(&ctx, &e(&ctx, r)).unwrap())
            .collect();
        let (found, _) = cosymmetry_scan(&ctx, &s, &chars).unwrap();
        assert_eq!(found.len(), 3);
    }
}
