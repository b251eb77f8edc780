//! Freely reduced words and group-ring elements.
//!
//! A [`FreeWord`] is a word in a free group, stored as a list of syllables
//! `(generator, nonzero exponent)` with no adjacent syllables sharing a
//! generator. Every constructor and operation maintains this reduced form,
//! so structural equality is equality in the free group. A [`GroupRingElt`]
//! is a finite `Z/p^N`-linear combination of reduced words.

use std::collections::BTreeMap;
use std::fmt;

use crate::padic::{PadicCtx, PadicInt};

/// Generator of a free group, identified by its index in an alphabet.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Gen(pub u32);

/// A freely reduced word: syllables `(gen, exp)` with `exp != 0` and no two
/// consecutive syllables on the same generator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FreeWord {
    syl: Vec<(Gen, i64)>,
}

impl fmt::Debug for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|i| format!("s{}", i + 1)))
    }
}

impl FreeWord {
    pub fn empty() -> Self {
        FreeWord::default()
    }

    pub fn gen(g: Gen) -> Self {
        FreeWord { syl: vec![(g, 1)] }
    }

    pub fn gen_pow(g: Gen, e: i64) -> Self {
        if e == 0 {
            FreeWord::empty()
        } else {
            FreeWord { syl: vec![(g, e)] }
        }
    }

    /// Build from arbitrary syllables, reducing as we go.
    pub fn from_syllables(syllables: Vec<(Gen, i64)>) -> Self {
        let mut w = FreeWord::empty();
        for (g, e) in syllables {
            w.push_syllable(g, e);
        }
        w
    }

    fn push_syllable(&mut self, g: Gen, e: i64) {
        if e == 0 {
            return;
        }
        match self.syl.last_mut() {
            Some((h, f)) if *h == g => {
                *f += e;
                if *f == 0 {
                    self.syl.pop();
                }
            }
            _ => self.syl.push((g, e)),
        }
    }

    pub fn syllables(&self) -> &[(Gen, i64)] {
        &self.syl
    }

    pub fn is_empty(&self) -> bool {
        self.syl.is_empty()
    }

    /// Word length: the sum of absolute exponents.
    pub fn len(&self) -> u64 {
        self.syl.iter().map(|(_, e)| e.unsigned_abs()).sum()
    }

    pub fn max_gen_index(&self) -> Option<u32> {
        self.syl.iter().map(|(g, _)| g.0).max()
    }

    pub fn mul(&self, other: &FreeWord) -> FreeWord {
        let mut w = self.clone();
        for &(g, e) in &other.syl {
            w.push_syllable(g, e);
        }
        w
    }

    pub fn inv(&self) -> FreeWord {
        FreeWord {
            syl: self.syl.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    pub fn pow(&self, e: i64) -> FreeWord {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut w = FreeWord::empty();
        for _ in 0..e.unsigned_abs() {
            w = w.mul(&base);
        }
        w
    }

    /// Commutator `[u, v] = u v u^-1 v^-1`.
    ///
    /// Convention note: this left-conjugated form is the one under which the
    /// closed-form derivative rules for commutator relations hold; see the
    /// `fox` module tests.
    pub fn commutator(u: &FreeWord, v: &FreeWord) -> FreeWord {
        u.mul(v).mul(&u.inv()).mul(&v.inv())
    }

    /// Render with a caller-supplied generator naming, e.g. `s1^2 * s3^-1`.
    pub fn render(&self, name: impl Fn(u32) -> String) -> String {
        if self.syl.is_empty() {
            return "1".to_string();
        }
        self.syl
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    name(g.0)
                } else {
                    format!("{}^{}", name(g.0), e)
                }
            })
            .collect::<Vec<_>>()
            .join(" * ")
    }
}

/// Finite `Z/p^N`-linear combination of reduced words.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupRingElt {
    ctx: PadicCtx,
    terms: BTreeMap<FreeWord, PadicInt>,
}

impl GroupRingElt {
    pub fn zero(ctx: PadicCtx) -> Self {
        GroupRingElt {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: PadicCtx) -> Self {
        GroupRingElt::from_word(ctx, FreeWord::empty())
    }

    pub fn from_word(ctx: PadicCtx, w: FreeWord) -> Self {
        GroupRingElt::term(ctx, w, ctx.one())
    }

    pub fn term(ctx: PadicCtx, w: FreeWord, c: PadicInt) -> Self {
        let mut e = GroupRingElt::zero(ctx);
        e.add_term(w, c);
        e
    }

    pub fn ctx(&self) -> PadicCtx {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FreeWord, &PadicInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &FreeWord) -> PadicInt {
        self.terms
            .get(w)
            .copied()
            .unwrap_or_else(|| self.ctx.zero())
    }

    fn add_term(&mut self, w: FreeWord, c: PadicInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(w);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    o.insert(s);
                }
            }
        }
    }

    pub fn add(&self, other: &GroupRingElt) -> GroupRingElt {
        assert_eq!(self.ctx, other.ctx, "mixed p-adic contexts in group ring");
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &GroupRingElt) -> GroupRingElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GroupRingElt {
        GroupRingElt {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -*c)).collect(),
        }
    }

    pub fn scale(&self, c: PadicInt) -> GroupRingElt {
        let mut out = GroupRingElt::zero(self.ctx);
        for (w, a) in &self.terms {
            out.add_term(w.clone(), *a * c);
        }
        out
    }

    /// Left-multiply every term by a word.
    pub fn mul_word_left(&self, w: &FreeWord) -> GroupRingElt {
        let mut out = GroupRingElt::zero(self.ctx);
        for (u, c) in &self.terms {
            out.add_term(w.mul(u), *c);
        }
        out
    }

    pub fn mul(&self, other: &GroupRingElt) -> GroupRingElt {
        assert_eq!(self.ctx, other.ctx, "mixed p-adic contexts in group ring");
        let mut out = GroupRingElt::zero(self.ctx);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.mul(v), *a * *b);
            }
        }
        out
    }
}
