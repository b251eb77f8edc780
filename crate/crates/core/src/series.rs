//! Truncated power series over `Z/p^N`.
//!
//! Two flavours share a context (prime, precision, variable count, total
//! degree cap `D`):
//!
//! * [`MagnusSeries`] — noncommutative series in `T_1..T_k`, the target of the
//!   multiplicative embedding `gamma_i -> 1 + T_i` of a free group. Monomials
//!   are sequences of variable indices. With `k = 1` the algebra is
//!   commutative and is the usual one-variable Iwasawa-algebra model.
//! * [`CommSeries`] — commutative series in `Y_1..Y_m`, the coefficient ring
//!   of deformation-ring presentations. Monomials are exponent vectors,
//!   ordered graded-lexicographically so iteration and rendering are
//!   deterministic.
//!
//! All products are truncated to total degree `<= D`; coefficients of degree
//! `> D` are unknowable at this truncation and are never materialized.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::freegroup::FreeWord;
use crate::padic::{PadicCtx, PadicInt};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("constant term {0} is not a unit")]
    NonUnitConstant(u128),
    #[error("operation requires constant term 1, found {0}")]
    ConstantTermNotOne(u128),
    #[error("substitution target must have zero constant term, found {0}")]
    SubstNonzeroConstant(u128),
    #[error("series is not univariate: monomial {0} uses a variable other than the first")]
    NotUnivariate(String),
    #[error("variable index {index} out of range (have {count})")]
    VarOutOfRange { index: usize, count: usize },
}

/// Shared truncation parameters: base ring, variable count, degree cap.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeriesCtx {
    padic: PadicCtx,
    vars: usize,
    cap: usize,
}

impl fmt::Debug for SeriesCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}[{} vars, deg <= {}]",
            self.padic, self.vars, self.cap
        )
    }
}

impl SeriesCtx {
    pub fn new(padic: PadicCtx, vars: usize, cap: usize) -> Self {
        SeriesCtx { padic, vars, cap }
    }

    pub fn padic(&self) -> PadicCtx {
        self.padic
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn with_cap(&self, cap: usize) -> Self {
        SeriesCtx { cap, ..*self }
    }
}

fn check_sctx(a: &SeriesCtx, b: &SeriesCtx) {
    assert_eq!(
        a, b,
        "mixed series contexts: {:?} vs {:?} (prime/precision/vars/cap must agree)",
        a, b
    );
}

/// Noncommutative monomial: a sequence of variable indices. Ordered by
/// degree, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NcMono(pub Vec<u8>);

impl Ord for NcMono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for NcMono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl NcMono {
    fn render(&self, vars: usize) -> String {
        let name = |i: u8| {
            if vars == 1 {
                "T".to_string()
            } else {
                format!("T_{}", i + 1)
            }
        };
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let v = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == v {
                run += 1;
            }
            if run == 1 {
                parts.push(name(v));
            } else {
                parts.push(format!("{}^{}", name(v), run));
            }
            i += run;
        }
        parts.join("*")
    }
}

/// Commutative monomial: exponent vector of fixed length. Graded order,
/// ties broken so that earlier variables sort first (`Y_1^2 < Y_1*Y_2 < Y_2^2`).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CommMono(pub Vec<u16>);

impl CommMono {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    fn render(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    format!("Y_{}", i + 1)
                } else {
                    format!("Y_{}^{}", i + 1, e)
                }
            })
            .collect();
        parts.join("*")
    }
}

impl Ord for CommMono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for CommMono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn render_terms<'a, I>(terms: I, is_constant_mono: impl Fn(&str) -> bool) -> String
where
    I: Iterator<Item = (String, &'a PadicInt)>,
{
    let mut out = String::new();
    let mut first = true;
    for (mono, coeff) in terms {
        let s = coeff.signed_lift();
        let neg = s < 0;
        let a = s.unsigned_abs();
        let body = if is_constant_mono(&mono) {
            format!("{}", a)
        } else if a == 1 {
            mono
        } else {
            format!("{}*{}", a, mono)
        };
        if first {
            if neg {
                out.push('-');
            }
            out.push_str(&body);
            first = false;
        } else {
            out.push_str(if neg { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    if first {
        out.push('0');
    }
    out
}

macro_rules! impl_linear_ops {
    ($ty:ident, $mono:ident) => {
        impl $ty {
            pub fn zero(ctx: SeriesCtx) -> Self {
                $ty {
                    ctx,
                    coeffs: BTreeMap::new(),
                }
            }

            pub fn constant(ctx: SeriesCtx, c: PadicInt) -> Self {
                let mut s = Self::zero(ctx);
                s.add_coeff($mono(Vec::new()).normal(ctx.vars), c);
                s
            }

            pub fn one(ctx: SeriesCtx) -> Self {
                Self::constant(ctx, ctx.padic.one())
            }

            pub fn ctx(&self) -> SeriesCtx {
                self.ctx
            }

            pub fn is_zero(&self) -> bool {
                self.coeffs.is_empty()
            }

            pub fn coeff(&self, m: &$mono) -> PadicInt {
                self.coeffs
                    .get(m)
                    .copied()
                    .unwrap_or_else(|| self.ctx.padic.zero())
            }

            pub fn constant_term(&self) -> PadicInt {
                self.coeff(&$mono(Vec::new()).normal(self.ctx.vars))
            }

            pub fn terms(&self) -> impl Iterator<Item = (&$mono, &PadicInt)> {
                self.coeffs.iter()
            }

            fn add_coeff(&mut self, m: $mono, c: PadicInt) {
                if c.is_zero() || m.degree() > self.ctx.cap {
                    return;
                }
                use std::collections::btree_map::Entry;
                match self.coeffs.entry(m) {
                    Entry::Vacant(v) => {
                        v.insert(c);
                    }
                    Entry::Occupied(mut o) => {
                        let s = *o.get() + c;
                        if s.is_zero() {
                            o.remove();
                        } else {
                            o.insert(s);
                        }
                    }
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                check_sctx(&self.ctx, &other.ctx);
                let mut out = self.clone();
                for (m, c) in &other.coeffs {
                    out.add_coeff(m.clone(), *c);
                }
                out
            }

            pub fn neg(&self) -> Self {
                $ty {
                    ctx: self.ctx,
                    coeffs: self.coeffs.iter().map(|(m, c)| (m.clone(), -*c)).collect(),
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.add(&other.neg())
            }

            pub fn scale(&self, c: PadicInt) -> Self {
                let mut out = Self::zero(self.ctx);
                for (m, a) in &self.coeffs {
                    out.add_coeff(m.clone(), *a * c);
                }
                out
            }

            pub fn mul(&self, other: &Self) -> Self {
                check_sctx(&self.ctx, &other.ctx);
                let mut out = Self::zero(self.ctx);
                for (m, a) in &self.coeffs {
                    for (n, b) in &other.coeffs {
                        if m.degree() + n.degree() > self.ctx.cap {
                            continue;
                        }
                        out.add_coeff(m.join(n), *a * *b);
                    }
                }
                out
            }

            pub fn pow_u(&self, e: u64) -> Self {
                let mut acc = Self::one(self.ctx);
                let mut base = self.clone();
                let mut e = e;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = acc.mul(&base);
                    }
                    e >>= 1;
                    if e > 0 {
                        base = base.mul(&base);
                    }
                }
                acc
            }

            /// Inverse of a series whose constant term is a unit, by the
            /// geometric-series recursion on the degree filtration.
            pub fn unit_inv(&self) -> Result<Self, SeriesError> {
                let c = self.constant_term();
                if !c.is_unit() {
                    return Err(SeriesError::NonUnitConstant(c.residue()));
                }
                let cinv = c.inv().expect("unit constant term");
                // self = c(1 - n) with n of positive valuation in the
                // degree filtration; inverse = (sum n^i) c^{-1}
                let n = Self::one(self.ctx).sub(&self.scale(cinv));
                let mut acc = Self::one(self.ctx);
                let mut pw = Self::one(self.ctx);
                for _ in 1..=self.ctx.cap {
                    pw = pw.mul(&n);
                    if pw.is_zero() {
                        break;
                    }
                    acc = acc.add(&pw);
                }
                Ok(acc.scale(cinv))
            }

            /// `u^a` for p-adic `a`, where `u` has constant term exactly 1:
            /// the binomial series `sum_j C(a, j) (u - 1)^j`.
            pub fn pow_padic(&self, a: PadicInt) -> Result<Self, SeriesError> {
                let c = self.constant_term();
                if !c.is_one() {
                    return Err(SeriesError::ConstantTermNotOne(c.residue()));
                }
                let h = self.sub(&Self::one(self.ctx));
                let mut acc = Self::one(self.ctx);
                let mut pw = Self::one(self.ctx);
                for j in 1..=self.ctx.cap as u64 {
                    pw = pw.mul(&h);
                    if pw.is_zero() {
                        break;
                    }
                    acc = acc.add(&pw.scale(a.binom(j)));
                }
                Ok(acc)
            }

            /// Copy truncated to a smaller degree cap.
            pub fn truncated(&self, cap: usize) -> Self {
                let mut out = Self::zero(self.ctx.with_cap(cap));
                for (m, c) in &self.coeffs {
                    out.add_coeff(m.clone(), *c);
                }
                out
            }

            pub fn max_degree(&self) -> usize {
                self.coeffs.keys().map(|m| m.degree()).max().unwrap_or(0)
            }
        }
    };
}

impl NcMono {
    fn degree(&self) -> usize {
        self.0.len()
    }

    fn join(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        NcMono(v)
    }

    fn normal(self, _vars: usize) -> Self {
        self
    }
}

impl CommMono {
    fn join(&self, other: &Self) -> Self {
        CommMono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn normal(self, vars: usize) -> Self {
        if self.0.len() == vars {
            self
        } else {
            CommMono(vec![0; vars])
        }
    }
}

/// Noncommutative truncated series in `T_1..T_k`.
#[derive(Clone, PartialEq, Eq)]
pub struct MagnusSeries {
    ctx: SeriesCtx,
    coeffs: BTreeMap<NcMono, PadicInt>,
}

impl_linear_ops!(MagnusSeries, NcMono);

impl fmt::Debug for MagnusSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl MagnusSeries {
    /// The variable `T_i` (0-based index).
    pub fn var(ctx: SeriesCtx, i: usize) -> Result<Self, SeriesError> {
        if i >= ctx.vars {
            return Err(SeriesError::VarOutOfRange {
                index: i,
                count: ctx.vars,
            });
        }
        let mut s = Self::zero(ctx);
        s.add_coeff(NcMono(vec![i as u8]), ctx.padic.one());
        Ok(s)
    }

    /// Checks that only the first variable occurs; on success reinterprets
    /// the series in a one-variable context (same prime/precision/cap).
    pub fn require_univariate(&self) -> Result<MagnusSeries, SeriesError> {
        let uni = SeriesCtx::new(self.ctx.padic, 1, self.ctx.cap);
        let mut out = MagnusSeries::zero(uni);
        for (m, c) in &self.coeffs {
            if m.0.iter().any(|&v| v != 0) {
                return Err(SeriesError::NotUnivariate(m.render(self.ctx.vars)));
            }
            out.add_coeff(m.clone(), *c);
        }
        Ok(out)
    }

    /// For a univariate series `a + b_1 T + ... + b_D T^D`, the pair
    /// `(a, [b_1..b_D])`.
    pub fn coeff_expansion(&self) -> Result<(PadicInt, Vec<PadicInt>), SeriesError> {
        let f = self.require_univariate()?;
        let a = f.constant_term();
        let b = (1..=f.ctx.cap)
            .map(|j| f.coeff(&NcMono(vec![0; j])))
            .collect();
        Ok((a, b))
    }

    pub fn render(&self) -> String {
        render_terms(
            self.coeffs
                .iter()
                .map(|(m, c)| (m.render(self.ctx.vars), c)),
            |s| s.is_empty(),
        )
    }
}

/// Multiplicative embedding of a free-group word into the Magnus algebra:
/// the generator with index `i` maps to `1 + T_i`, inverses to geometric
/// series. A homomorphism to the unit group, exact at every truncation.
pub fn gamma_embed(ctx: SeriesCtx, w: &FreeWord) -> Result<MagnusSeries, SeriesError> {
    let mut acc = MagnusSeries::one(ctx);
    for &(g, e) in w.syllables() {
        let base = MagnusSeries::one(ctx).add(&MagnusSeries::var(ctx, g.0 as usize)?);
        let factor = if e >= 0 {
            base.pow_u(e as u64)
        } else {
            base.unit_inv()
                .expect("1 + T_i is a unit")
                .pow_u(e.unsigned_abs())
        };
        acc = acc.mul(&factor);
    }
    Ok(acc)
}

/// Commutative truncated series in `Y_1..Y_m`.
#[derive(Clone, PartialEq, Eq)]
pub struct CommSeries {
    ctx: SeriesCtx,
    coeffs: BTreeMap<CommMono, PadicInt>,
}

impl_linear_ops!(CommSeries, CommMono);

impl fmt::Debug for CommSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl CommSeries {
    /// The variable `Y_{i+1}` (0-based index).
    pub fn var(ctx: SeriesCtx, i: usize) -> Result<Self, SeriesError> {
        if i >= ctx.vars {
            return Err(SeriesError::VarOutOfRange {
                index: i,
                count: ctx.vars,
            });
        }
        let mut exps = vec![0u16; ctx.vars];
        exps[i] = 1;
        let mut s = Self::zero(ctx);
        s.add_coeff(CommMono(exps), ctx.padic.one());
        Ok(s)
    }

    /// `1 + Y_{i+1}`.
    pub fn one_plus_var(ctx: SeriesCtx, i: usize) -> Result<Self, SeriesError> {
        Ok(Self::one(ctx).add(&Self::var(ctx, i)?))
    }

    /// True when every monomial (of a nonzero series) is divisible by
    /// `Y_{i+1}`. The zero series counts as divisible.
    pub fn divisible_by_var(&self, i: usize) -> bool {
        self.coeffs.keys().all(|m| m.0[i] > 0)
    }

    /// Substitute `Y_{src+1} -> c * Y_{dst+1}` (used for tie constraints).
    pub fn subst_var_multiple(&self, src: usize, c: PadicInt, dst: usize) -> Self {
        let mut out = Self::zero(self.ctx);
        for (m, a) in &self.coeffs {
            let e = m.0[src];
            let mut exps = m.0.clone();
            exps[src] = 0;
            exps[dst] += e;
            out.add_coeff(CommMono(exps), *a * c.pow(e as u64));
        }
        out
    }

    pub fn render(&self) -> String {
        render_terms(self.coeffs.iter().map(|(m, c)| (m.render(), c)), |s| {
            s.is_empty()
        })
    }
}

/// Substitute a zero-constant-term series `w` for the variable of a
/// univariate Magnus series: `f(T) -> f(w)`.
pub fn subst_t(f: &MagnusSeries, w: &CommSeries) -> Result<CommSeries, SeriesError> {
    let f = f.require_univariate()?;
    assert_eq!(
        f.ctx.padic, w.ctx.padic,
        "substitution across different base rings"
    );
    assert_eq!(
        f.ctx.cap, w.ctx.cap,
        "substitution across different degree caps"
    );
    if !w.constant_term().is_zero() {
        return Err(SeriesError::SubstNonzeroConstant(
            w.constant_term().residue(),
        ));
    }
    let mut acc = CommSeries::constant(w.ctx, f.constant_term());
    let mut pw = CommSeries::one(w.ctx);
    for j in 1..=f.ctx.cap {
        pw = pw.mul(w);
        if pw.is_zero() {
            break;
        }
        acc = acc.add(&pw.scale(f.coeff(&NcMono(vec![0; j]))));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::{FreeWord, Gen};
    use crate::padic::PadicCtx;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn p5n3(vars: usize, cap: usize) -> SeriesCtx {
        SeriesCtx::new(PadicCtx::new(5, 3).unwrap(), vars, cap)
    }

    #[test]
    fn magnus_is_noncommutative_with_two_vars() {
        let ctx = p5n3(2, 4);
        let t1 = MagnusSeries::var(ctx, 0).unwrap();
        let t2 = MagnusSeries::var(ctx, 1).unwrap();
        assert_ne!(t1.mul(&t2), t2.mul(&t1));
    }

    #[test]
    fn univariate_magnus_commutes() {
        let ctx = p5n3(1, 6);
        let t = MagnusSeries::var(ctx, 0).unwrap();
        let a = MagnusSeries::one(ctx).add(&t).pow_u(3);
        let b = MagnusSeries::one(ctx).sub(&t.mul(&t));
        assert_eq!(a.mul(&b), b.mul(&a));
    }

    #[test]
    fn products_truncate_at_the_degree_cap() {
        let ctx = p5n3(1, 3);
        let t = MagnusSeries::var(ctx, 0).unwrap();
        let u = MagnusSeries::one(ctx).add(&t);
        let p = u.pow_u(5);
        assert_eq!(p.max_degree(), 3);
        assert_eq!(p.render(), "1 + 5*T + 10*T^2 + 10*T^3");
    }

    #[test]
    fn unit_inv_geometric_series() {
        let ctx = p5n3(1, 4);
        let u = MagnusSeries::one(ctx).add(&MagnusSeries::var(ctx, 0).unwrap());
        let inv = u.unit_inv().unwrap();
        assert_eq!(inv.render(), "1 - T + T^2 - T^3 + T^4");
        assert_eq!(u.mul(&inv), MagnusSeries::one(ctx));
        assert_eq!(inv.mul(&u), MagnusSeries::one(ctx));
        // constant series fall back to plain p-adic inversion
        let two = MagnusSeries::constant(ctx, ctx.padic().elt(2));
        assert_eq!(two.unit_inv().unwrap().constant_term().residue(), 63);
        let five = MagnusSeries::constant(ctx, ctx.padic().elt(5));
        assert!(matches!(
            five.unit_inv(),
            Err(SeriesError::NonUnitConstant(5))
        ));
    }

    #[test]
    fn pow_padic_with_integer_exponent_is_the_integer_power() {
        let ctx = p5n3(1, 5);
        let u = MagnusSeries::one(ctx).add(&MagnusSeries::var(ctx, 0).unwrap());
        let a = ctx.padic().elt(3);
        let p = u.pow_padic(a).unwrap();
        assert_eq!(p.render(), "1 + 3*T + 3*T^2 + T^3");
        assert_eq!(p, u.pow_u(3));
        let t = MagnusSeries::var(ctx, 0).unwrap();
        assert!(matches!(
            t.pow_padic(a),
            Err(SeriesError::ConstantTermNotOne(0))
        ));
    }

    #[test]
    fn gamma_embed_of_a_power() {
        let ctx = p5n3(1, 2);
        let w = FreeWord::gen_pow(Gen(0), 5);
        let s = gamma_embed(ctx, &w).unwrap();
        assert_eq!(s.render(), "1 + 5*T + 10*T^2");
    }

    #[test]
    fn gamma_embed_of_an_inverse() {
        let ctx = p5n3(1, 3);
        let w = FreeWord::gen_pow(Gen(0), -1);
        let s = gamma_embed(ctx, &w).unwrap();
        assert_eq!(s.render(), "1 - T + T^2 - T^3");
        let back = gamma_embed(ctx, &w.inv()).unwrap();
        assert_eq!(s.mul(&back), MagnusSeries::one(ctx));
    }

    #[test]
    fn coeff_expansion_examples() {
        let ctx = p5n3(1, 4);
        let t = MagnusSeries::var(ctx, 0).unwrap();
        let f = MagnusSeries::constant(ctx, ctx.padic().elt(5)).sub(&t);
        let (a, b) = f.coeff_expansion().unwrap();
        assert_eq!(a.residue(), 5);
        assert_eq!(b[0].signed_lift(), -1);
        assert!(b[1..].iter().all(|c| c.is_zero()));

        let u = MagnusSeries::one(ctx).add(&t).pow_u(3);
        let (a, b) = u.coeff_expansion().unwrap();
        assert_eq!(a.residue(), 1);
        let got: Vec<i128> = b.iter().map(|c| c.signed_lift()).collect();
        assert_eq!(got, vec![3, 3, 1, 0]);
    }

    #[test]
    fn require_univariate_names_the_offender() {
        let ctx = p5n3(2, 3);
        let t1 = MagnusSeries::var(ctx, 0).unwrap();
        let t2 = MagnusSeries::var(ctx, 1).unwrap();
        assert!(t1.require_univariate().is_ok());
        let bad = t1.mul(&t2);
        assert_eq!(
            bad.require_univariate(),
            Err(SeriesError::NotUnivariate("T_1*T_2".to_string()))
        );
    }

    #[test]
    fn subst_example() {
        // f = 5 - T into W = (1+Y_1)/(1+Y_2) - 1, degree 2
        let mctx = p5n3(1, 2);
        let cctx = p5n3(2, 2);
        let t = MagnusSeries::var(mctx, 0).unwrap();
        let f = MagnusSeries::constant(mctx, mctx.padic().elt(5)).sub(&t);
        let w = CommSeries::one_plus_var(cctx, 0)
            .unwrap()
            .mul(
                &CommSeries::one_plus_var(cctx, 1)
                    .unwrap()
                    .unit_inv()
                    .unwrap(),
            )
            .sub(&CommSeries::one(cctx));
        let g = subst_t(&f, &w).unwrap();
        assert_eq!(g.render(), "5 - Y_1 + Y_2 + Y_1*Y_2 - Y_2^2");
    }

    #[test]
    fn subst_rejects_nonzero_constant() {
        let mctx = p5n3(1, 2);
        let cctx = p5n3(1, 2);
        let f = MagnusSeries::var(mctx, 0).unwrap();
        let w = CommSeries::one(cctx);
        assert!(matches!(
            subst_t(&f, &w),
            Err(SeriesError::SubstNonzeroConstant(1))
        ));
    }

    #[test]
    fn comm_mono_ordering_is_graded_then_first_variable_first() {
        let ctx = p5n3(2, 3);
        let y1 = CommSeries::var(ctx, 0).unwrap();
        let y2 = CommSeries::var(ctx, 1).unwrap();
        let s = CommSeries::one(ctx)
            .add(&y2)
            .add(&y1.mul(&y1))
            .add(&y1.mul(&y2))
            .add(&y2.mul(&y2))
            .add(&y1);
        assert_eq!(s.render(), "1 + Y_1 + Y_2 + Y_1^2 + Y_1*Y_2 + Y_2^2");
    }

    #[test]
    fn tie_substitution() {
        let ctx = p5n3(4, 3);
        let y2 = CommSeries::var(ctx, 1).unwrap();
        let y4 = CommSeries::var(ctx, 3).unwrap();
        let f = y2.mul(&y2).add(&y4);
        // Y_2 -> 3*Y_4
        let g = f.subst_var_multiple(1, ctx.padic().elt(3), 3);
        assert_eq!(g.render(), "Y_4 + 9*Y_4^2");
        // killing a variable outright
        let h = f.subst_var_multiple(1, ctx.padic().zero(), 3);
        assert_eq!(h.render(), "Y_4");
    }

    #[test]
    fn divisibility_by_a_variable() {
        let ctx = p5n3(3, 4);
        let y3 = CommSeries::var(ctx, 2).unwrap();
        let y1 = CommSeries::var(ctx, 0).unwrap();
        let f = y3.mul(&y1.add(&CommSeries::one(ctx)));
        assert!(f.divisible_by_var(2));
        assert!(!f.divisible_by_var(0));
        assert!(CommSeries::zero(ctx).divisible_by_var(2));
    }

    #[test]
    fn truncation_coherence_of_core_ops() {
        // computing at a higher cap and truncating equals computing low
        let hi = p5n3(2, 8);
        let lo = p5n3(2, 5);
        let a = ctx_elt(hi, 7);
        let w_hi = CommSeries::one_plus_var(hi, 0)
            .unwrap()
            .mul(&CommSeries::one_plus_var(hi, 1).unwrap().unit_inv().unwrap());
        let w_lo = CommSeries::one_plus_var(lo, 0)
            .unwrap()
            .mul(&CommSeries::one_plus_var(lo, 1).unwrap().unit_inv().unwrap());
        assert_eq!(
            w_hi.pow_padic(a).unwrap().truncated(5),
            w_lo.pow_padic(ctx_elt(lo, 7)).unwrap()
        );
    }

    fn ctx_elt(c: SeriesCtx, n: i128) -> PadicInt {
        c.padic().elt(n)
    }

    #[test]
    fn binomial_homomorphism_against_exact_integer_oracle() {
        // (1+T)^a (1+T)^b = (1+T)^(a+b) with the exponent sum taken before
        // reduction; the right-hand side is computed by an exact big-integer
        // binomial oracle.
        let ctx = p5n3(1, 8);
        let u = MagnusSeries::one(ctx).add(&MagnusSeries::var(ctx, 0).unwrap());
        let modulus = BigInt::from(125);
        for (ra, rb) in [(3u128, 7u128), (97, 31), (124, 124), (60, 65)] {
            let lhs = u
                .pow_padic(ctx.padic().elt(ra as i128))
                .unwrap()
                .mul(&u.pow_padic(ctx.padic().elt(rb as i128)).unwrap());
            // oracle: coefficient of T^j is C(ra+rb, j) computed exactly
            let s = BigInt::from(ra + rb);
            for j in 0..=8usize {
                let mut num = BigInt::from(1);
                let mut den = BigInt::from(1);
                for t in 0..j {
                    num *= &s - BigInt::from(t);
                    den *= BigInt::from(t + 1);
                }
                let want = ((num / den) % &modulus + &modulus) % &modulus;
                let got = BigInt::from(lhs.coeff(&NcMono(vec![0; j])).residue());
                assert_eq!(got, want, "a={ra} b={rb} j={j}");
            }
        }
    }

    fn arb_comm(ctx: SeriesCtx) -> impl Strategy<Value = CommSeries> {
        proptest::collection::vec(
            (proptest::collection::vec(0u16..3, ctx.vars()), 0i128..125),
            0..6,
        )
        .prop_map(move |terms| {
            let mut s = CommSeries::zero(ctx);
            for (exps, c) in terms {
                s.add_coeff(CommMono(exps), ctx.padic().elt(c));
            }
            s
        })
    }

    fn arb_magnus(ctx: SeriesCtx) -> impl Strategy<Value = MagnusSeries> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u8..ctx.vars() as u8, 0..4),
                0i128..125,
            ),
            0..6,
        )
        .prop_map(move |terms| {
            let mut s = MagnusSeries::zero(ctx);
            for (seq, c) in terms {
                s.add_coeff(NcMono(seq), ctx.padic().elt(c));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn comm_ring_axioms(a in arb_comm(p5n3(2, 4)), b in arb_comm(p5n3(2, 4)), c in arb_comm(p5n3(2, 4))) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn magnus_ring_axioms(a in arb_magnus(p5n3(2, 4)), b in arb_magnus(p5n3(2, 4)), c in arb_magnus(p5n3(2, 4))) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(b.add(&c).mul(&a), b.mul(&a).add(&c.mul(&a)));
        }

        #[test]
        fn unit_inv_is_two_sided(a in arb_magnus(p5n3(2, 4))) {
            let one = MagnusSeries::one(p5n3(2, 4)).add(&a);
            if one.constant_term().is_unit() {
                let inv = one.unit_inv().unwrap();
                prop_assert_eq!(one.mul(&inv), MagnusSeries::one(p5n3(2, 4)));
                prop_assert_eq!(inv.mul(&one), MagnusSeries::one(p5n3(2, 4)));
            }
        }

        #[test]
        fn gamma_embed_is_a_homomorphism(
            s1 in proptest::collection::vec((0u32..2, -2i64..=2), 0..5),
            s2 in proptest::collection::vec((0u32..2, -2i64..=2), 0..5),
        ) {
            let ctx = p5n3(2, 4);
            let w1 = FreeWord::from_syllables(s1.into_iter().map(|(g, e)| (Gen(g), e)).collect());
            let w2 = FreeWord::from_syllables(s2.into_iter().map(|(g, e)| (Gen(g), e)).collect());
            let lhs = gamma_embed(ctx, &w1.mul(&w2)).unwrap();
            let rhs = gamma_embed(ctx, &w1).unwrap().mul(&gamma_embed(ctx, &w2).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn subst_is_multiplicative(
            f in arb_magnus(SeriesCtx::new(PadicCtx::new(5, 3).unwrap(), 1, 4)),
            g in arb_magnus(SeriesCtx::new(PadicCtx::new(5, 3).unwrap(), 1, 4)),
        ) {
            let cctx = p5n3(2, 4);
            let w = CommSeries::var(cctx, 0).unwrap()
                .add(&CommSeries::var(cctx, 1).unwrap().scale(cctx.padic().elt(2)));
            let lhs = subst_t(&f.mul(&g), &w).unwrap();
            let rhs = subst_t(&f, &w).unwrap().mul(&subst_t(&g, &w).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }
}
