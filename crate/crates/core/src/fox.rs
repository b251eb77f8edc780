//! Free differential calculus and the projection to Iwasawa series.
//!
//! For a free group `F` on generators `s_1..s_n`, the Fox derivative
//! `d/ds_i : Z_p[F] -> Z_p[F]` is the unique additive map with
//! `d(s_j)/ds_i = delta_ij` and the twisted product rule
//! `d(uv) = du + u dv`. Syllables have closed forms
//!
//! ```text
//! d(s^e)/ds = 1 + s + ... + s^(e-1)          for e > 0
//! d(s^e)/ds = -(s^-1 + s^-2 + ... + s^e)     for e < 0
//! ```
//!
//! and a word is folded right to left over its syllables.
//!
//! A [`Projection`] sends each free generator either to 1 or to a word in
//! the generators of a second free group (the `gamma` directions); pushing a
//! group-ring element through it and then through the Magnus embedding
//! `gamma_i -> 1 + T_i` lands in truncated series, where the relation
//! matrices of deformation theory live.

use std::collections::HashMap;

use thiserror::Error;

use crate::freegroup::{FreeWord, Gen, GroupRingElt};
use crate::padic::PadicCtx;
use crate::series::{gamma_embed, MagnusSeries, SeriesCtx, SeriesError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoxError {
    #[error("generator index {index} has no assigned projection image (have {count})")]
    GenOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("row for generator {gen} is outside the retained block but its entry at relation {rel} projects to {found}, not 0")]
    DroppedRowNonzero {
        gen: String,
        rel: String,
        found: String,
    },
    #[error("cannot keep {want} rows of a {have}-row matrix")]
    RowCountMismatch { have: usize, want: usize },
}

/// Derivative of the single syllable `s^e` with respect to `s`.
fn syllable_derivative(ctx: PadicCtx, s: Gen, e: i64) -> GroupRingElt {
    let mut acc = GroupRingElt::zero(ctx);
    let one = ctx.one();
    if e > 0 {
        for k in 0..e {
            acc = acc.add(&GroupRingElt::term(ctx, FreeWord::gen_pow(s, k), one));
        }
    } else {
        for k in 1..=(-e) {
            acc = acc.sub(&GroupRingElt::term(ctx, FreeWord::gen_pow(s, -k), one));
        }
    }
    acc
}

/// Fox derivative with memoization across calls; derivatives of the same
/// relation with respect to many generators share nothing directly, but the
/// relation words of arithmetic presentations repeat across columns, so a
/// word-level cache pays for itself.
pub struct FoxCalc {
    ctx: PadicCtx,
    cache: HashMap<(FreeWord, Gen), GroupRingElt>,
}

impl FoxCalc {
    pub fn new(ctx: PadicCtx) -> Self {
        FoxCalc {
            ctx,
            cache: HashMap::new(),
        }
    }

    pub fn ctx(&self) -> PadicCtx {
        self.ctx
    }

    pub fn derivative(&mut self, w: &FreeWord, s: Gen) -> GroupRingElt {
        let key = (w.clone(), s);
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let syl = w.syllables();
        let mut acc = GroupRingElt::zero(self.ctx);
        // fold d(uv) = du + u dv from the right
        for &(g, e) in syl.iter().rev() {
            let head = if g == s {
                syllable_derivative(self.ctx, s, e)
            } else {
                GroupRingElt::zero(self.ctx)
            };
            acc = head.add(&acc.mul_word_left(&FreeWord::gen_pow(g, e)));
        }
        self.cache.insert(key, acc.clone());
        acc
    }
}

/// One-shot Fox derivative without a cache.
pub fn fox_derivative(ctx: PadicCtx, w: &FreeWord, s: Gen) -> GroupRingElt {
    FoxCalc::new(ctx).derivative(w, s)
}

/// Image of one free generator under the projection that kills the inertia
/// block and keeps the `gamma` block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiImage {
    /// Generator maps to the identity.
    Trivial,
    /// Generator maps to this word in the `gamma` generators (indices into
    /// a separate alphabet, generator `i` embedding as `1 + T_(i+1)`).
    Gamma(FreeWord),
}

/// Generator-indexed projection `F -> Gamma` followed by the Magnus
/// embedding of the target.
#[derive(Clone, Debug)]
pub struct Projection {
    images: Vec<PiImage>,
}

impl Projection {
    pub fn new(images: Vec<PiImage>) -> Self {
        Projection { images }
    }

    pub fn images(&self) -> &[PiImage] {
        &self.images
    }

    /// The image word of `w` in the `gamma` alphabet.
    pub fn apply_word(&self, w: &FreeWord) -> Result<FreeWord, FoxError> {
        let mut acc = FreeWord::empty();
        for &(g, e) in w.syllables() {
            let image = self
                .images
                .get(g.0 as usize)
                .ok_or(FoxError::GenOutOfRange {
                    index: g.0 as usize,
                    count: self.images.len(),
                })?;
            match image {
                PiImage::Trivial => {}
                PiImage::Gamma(im) => acc = acc.mul(&im.pow(e)),
            }
        }
        Ok(acc)
    }

    /// Push a group-ring element through the projection and the Magnus
    /// embedding: `sum c_w [w]  ->  sum c_w (image of w as a unit series)`.
    pub fn project(&self, elt: &GroupRingElt, sctx: SeriesCtx) -> Result<MagnusSeries, FoxError> {
        let mut acc = MagnusSeries::zero(sctx);
        for (w, c) in elt.terms() {
            let im = self.apply_word(w)?;
            acc = acc.add(&gamma_embed(sctx, &im)?.scale(*c));
        }
        Ok(acc)
    }
}

/// The projected relation matrix: rows indexed by group generators, columns
/// by relations, entry `(i, j)` the series `pi(d r_j / d s_i)`.
#[derive(Clone, Debug)]
pub struct FoxMatrix {
    pub gen_names: Vec<String>,
    pub rel_names: Vec<String>,
    /// `entries[i][j]` for generator `i`, relation `j`.
    pub entries: Vec<Vec<MagnusSeries>>,
}

impl FoxMatrix {
    pub fn rows(&self) -> usize {
        self.gen_names.len()
    }

    pub fn cols(&self) -> usize {
        self.rel_names.len()
    }

    /// Keep only the first `keep` generator rows, insisting that every
    /// dropped row is identically zero (the `gamma`-direction rows of a
    /// well-formed arithmetic presentation project away).
    pub fn restrict_rows(&self, keep: usize) -> Result<FoxMatrix, FoxError> {
        if keep > self.rows() {
            return Err(FoxError::RowCountMismatch {
                have: self.rows(),
                want: keep,
            });
        }
        for i in keep..self.rows() {
            for j in 0..self.cols() {
                if !self.entries[i][j].is_zero() {
                    return Err(FoxError::DroppedRowNonzero {
                        gen: self.gen_names[i].clone(),
                        rel: self.rel_names[j].clone(),
                        found: self.entries[i][j].render(),
                    });
                }
            }
        }
        Ok(FoxMatrix {
            gen_names: self.gen_names[..keep].to_vec(),
            rel_names: self.rel_names.clone(),
            entries: self.entries[..keep].to_vec(),
        })
    }
}

/// Differentiate every relation by every generator and project.
pub fn fox_matrix(
    gen_names: Vec<String>,
    rel_names: Vec<String>,
    relations: &[FreeWord],
    proj: &Projection,
    sctx: SeriesCtx,
) -> Result<FoxMatrix, FoxError> {
    assert_eq!(rel_names.len(), relations.len());
    let mut calc = FoxCalc::new(sctx.padic());
    let mut entries = Vec::with_capacity(gen_names.len());
    for i in 0..gen_names.len() {
        let mut row = Vec::with_capacity(relations.len());
        for r in relations {
            let d = calc.derivative(r, Gen(i as u32));
            row.push(proj.project(&d, sctx)?);
        }
        entries.push(row);
    }
    Ok(FoxMatrix {
        gen_names,
        rel_names,
        entries,
    })
}
