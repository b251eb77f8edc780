//! Independent verification of a computed ring presentation.
//!
//! The deformation pipeline produces ideal generators through projected
//! derivatives; this module re-derives the same information the slow way —
//! multiplying out 2x2 matrices over the truncated series ring — and checks
//! the two agree. [`check_relations`] evaluates every relation word on the
//! universal matrices and confirms each entry of `image - Id` lies in the
//! emitted ideal; [`check_action_lemma`] verifies the closed-form
//! commutator formulas that justify the pipeline's corner bookkeeping.
//!
//! Ideal membership is decided at the working truncation `(p^N, degree D)`
//! by an exact linear solve over `Z/p^N` — a necessary condition for true
//! membership, not a certificate. The solver uses elimination with global
//! pivot selection by minimal p-valuation, which stays exact over the
//! non-field ring `Z/p^N`.

use thiserror::Error;

use crate::deform::MatAssignment;
use crate::freegroup::FreeWord;
use crate::padic::{PadicCtx, PadicError};
use crate::presentation::Presentation;
use crate::series::{CommMono, CommSeries, SeriesCtx, SeriesError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("word references generator index {index}, but only {count} matrices are assigned")]
    UnassignedGenerator { index: u32, count: usize },
}

/// A 2x2 matrix with truncated-series entries.
#[derive(Clone, Debug, PartialEq)]
pub struct MatRep {
    entries: [[CommSeries; 2]; 2],
}

impl MatRep {
    pub fn new(entries: [[CommSeries; 2]; 2]) -> MatRep {
        let ctx = entries[0][0].ctx();
        for row in &entries {
            for e in row {
                assert!(e.ctx() == ctx, "matrix entries from different series rings");
            }
        }
        MatRep { entries }
    }

    pub fn identity(ctx: SeriesCtx) -> MatRep {
        let one = CommSeries::one(ctx);
        let zero = CommSeries::zero(ctx);
        MatRep::new([[one.clone(), zero.clone()], [zero, one]])
    }

    pub fn ctx(&self) -> SeriesCtx {
        self.entries[0][0].ctx()
    }

    pub fn entry(&self, i: usize, j: usize) -> &CommSeries {
        &self.entries[i][j]
    }

    pub fn mul(&self, other: &MatRep) -> MatRep {
        let e = |i: usize, j: usize| -> CommSeries {
            self.entries[i][0]
                .mul(&other.entries[0][j])
                .add(&self.entries[i][1].mul(&other.entries[1][j]))
        };
        MatRep::new([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn det(&self) -> CommSeries {
        self.entries[0][0]
            .mul(&self.entries[1][1])
            .sub(&self.entries[0][1].mul(&self.entries[1][0]))
    }

    /// Inverse via the adjugate; requires the determinant's constant term
    /// to be a unit.
    pub fn inv(&self) -> Result<MatRep, SeriesError> {
        let det_inv = self.det().unit_inv()?;
        let adj = [
            [self.entries[1][1].clone(), self.entries[0][1].neg()],
            [self.entries[1][0].neg(), self.entries[0][0].clone()],
        ];
        Ok(MatRep::new(adj.map(|row| row.map(|e| e.mul(&det_inv)))))
    }

    pub fn pow_i(&self, e: i64) -> Result<MatRep, SeriesError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = MatRep::identity(self.ctx());
        let mut sq = base;
        let mut n = e.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&sq);
            }
            n >>= 1;
            if n > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    pub fn sub(&self, other: &MatRep) -> MatRep {
        MatRep::new([
            [
                self.entries[0][0].sub(&other.entries[0][0]),
                self.entries[0][1].sub(&other.entries[0][1]),
            ],
            [
                self.entries[1][0].sub(&other.entries[1][0]),
                self.entries[1][1].sub(&other.entries[1][1]),
            ],
        ])
    }

    pub fn is_identity(&self) -> bool {
        *self == MatRep::identity(self.ctx())
    }

    pub fn map_entries(&self, mut f: impl FnMut(&CommSeries) -> CommSeries) -> MatRep {
        MatRep::new([
            [f(&self.entries[0][0]), f(&self.entries[0][1])],
            [f(&self.entries[1][0]), f(&self.entries[1][1])],
        ])
    }
}

/// Multiply out a word, syllable by syllable, over an assignment.
pub fn evaluate_word(w: &FreeWord, asg: &MatAssignment) -> Result<MatRep, VerifyError> {
    let mut acc = MatRep::identity(asg.sctx);
    for &(g, e) in w.syllables() {
        let m = asg
            .mats
            .get(g.0 as usize)
            .ok_or(VerifyError::UnassignedGenerator {
                index: g.0,
                count: asg.mats.len(),
            })?;
        acc = acc.mul(&m.pow_i(e)?);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Closed-form commutator checks
// ---------------------------------------------------------------------------

/// The three commutator shapes with closed forms: a diagonal matrix acting
/// on an upper-unipotent one, a lower-unipotent acting on an
/// upper-unipotent, and a scalar acting on anything.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionCase {
    DiagonalOnUpper,
    LowerOnUpper,
    ScalarCentral,
}

#[derive(Clone, Debug)]
pub struct ActionReport {
    pub case: ActionCase,
    pub pass: bool,
    pub detail: String,
}

fn commutator_mat(s: &MatRep, x: &MatRep) -> Result<MatRep, SeriesError> {
    Ok(s.mul(x).mul(&s.inv()?).mul(&x.inv()?))
}

/// Evaluate `s x s^-1 x^-1` on generic symbolic matrices and compare with
/// the closed form, coefficientwise up to `(p^N, D)`.
pub fn check_action_lemma(
    case: ActionCase,
    padic: PadicCtx,
    deg: usize,
) -> Result<ActionReport, SeriesError> {
    match case {
        ActionCase::DiagonalOnUpper => {
            // s = diag(1+Y_1, 1+Y_2), x = [[1, Y_3], [0, 1]]:
            // the commutator multiplies the corner by (1+Y_1)/(1+Y_2)
            let ctx = SeriesCtx::new(padic, 3, deg);
            let one = CommSeries::one(ctx);
            let zero = CommSeries::zero(ctx);
            let y1 = CommSeries::one_plus_var(ctx, 0)?;
            let y2 = CommSeries::one_plus_var(ctx, 1)?;
            let u = CommSeries::var(ctx, 2)?;
            let s = MatRep::new([[y1.clone(), zero.clone()], [zero.clone(), y2.clone()]]);
            let x = MatRep::new([[one.clone(), u.clone()], [zero.clone(), one.clone()]]);
            let got = commutator_mat(&s, &x)?;
            let ratio = y1.mul(&y2.unit_inv()?).sub(&one);
            let expect = MatRep::new([[one.clone(), ratio.mul(&u)], [zero, one]]);
            let pass = got == expect;
            Ok(ActionReport {
                case,
                pass,
                detail: if pass {
                    "diagonal conjugation scales the corner by the diagonal ratio".into()
                } else {
                    format!("mismatch: corner is {}", got.entry(0, 1).render())
                },
            })
        }
        ActionCase::LowerOnUpper => {
            // s = [[1, 0], [Y, 1]], x = [[1, U], [0, 1]]:
            // [s, x] = [[1 - YU, YU^2], [-Y^2 U, Y^2 U^2 + YU + 1]], det 1
            let ctx = SeriesCtx::new(padic, 2, deg);
            let one = CommSeries::one(ctx);
            let zero = CommSeries::zero(ctx);
            let y = CommSeries::var(ctx, 0)?;
            let u = CommSeries::var(ctx, 1)?;
            let s = MatRep::new([[one.clone(), zero.clone()], [y.clone(), one.clone()]]);
            let x = MatRep::new([[one.clone(), u.clone()], [zero.clone(), one.clone()]]);
            let got = commutator_mat(&s, &x)?;
            let yu = y.mul(&u);
            let expect = MatRep::new([
                [one.sub(&yu), yu.mul(&u)],
                [y.mul(&yu).neg(), yu.mul(&yu).add(&yu).add(&one)],
            ]);
            let det = got.det();
            let pass = got == expect && det == one;
            Ok(ActionReport {
                case,
                pass,
                detail: if pass {
                    "lower-by-upper commutator matches its closed form with determinant exactly 1"
                        .into()
                } else {
                    format!("mismatch: determinant is {}", det.render())
                },
            })
        }
        ActionCase::ScalarCentral => {
            // s = diag(1+Y_1, 1+Y_1) commutes with everything
            let ctx = SeriesCtx::new(padic, 2, deg);
            let one = CommSeries::one(ctx);
            let zero = CommSeries::zero(ctx);
            let f = CommSeries::one_plus_var(ctx, 0)?;
            let s = MatRep::new([[f.clone(), zero.clone()], [zero.clone(), f.clone()]]);
            let x = MatRep::new([[one.clone(), CommSeries::var(ctx, 1)?], [zero, one]]);
            let got = commutator_mat(&s, &x)?;
            let pass = got.is_identity();
            Ok(ActionReport {
                case,
                pass,
                detail: if pass {
                    "scalar commutators are the identity".into()
                } else {
                    "scalar commutator is not the identity".into()
                },
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Ideal membership at truncation
// ---------------------------------------------------------------------------

fn all_monomials(vars: usize, cap: usize) -> Vec<CommMono> {
    fn rec(i: usize, rem: usize, cur: &mut Vec<u16>, out: &mut Vec<CommMono>) {
        if i == cur.len() {
            out.push(CommMono(cur.clone()));
            return;
        }
        for e in 0..=rem {
            cur[i] = e as u16;
            rec(i + 1, rem - e, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, cap, &mut vec![0u16; vars], &mut out);
    out
}

fn valuation_of(mut x: u128, p: u64, prec: u32) -> u32 {
    if x == 0 {
        return prec;
    }
    let p = p as u128;
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

fn inv_mod(a: u128, m: u128) -> u128 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inverse of a non-unit");
    t.rem_euclid(m as i128) as u128
}

/// Decide whether `f = sum h_j g_j` has a solution with series `h_j`,
/// modulo `(p^N, degree D)`. This is membership at truncation: a necessary
/// condition for membership in the untruncated ideal.
///
/// The coefficientwise linear system (rows: monomials of degree <= D,
/// columns: coefficients of the unknown `h_j`) is solved over `Z/p^N` by
/// elimination; each pivot is the globally minimal-valuation entry of the
/// active submatrix, so dividing the remaining rows by it is exact.
pub fn ideal_member(f: &CommSeries, gens: &[CommSeries]) -> bool {
    if f.is_zero() {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    let ctx = f.ctx();
    for g in gens {
        assert!(g.ctx() == ctx, "generators from a different series ring");
    }
    let padic = ctx.padic();
    let modulus = padic.modulus();
    let p = padic.prime();
    let prec = padic.precision();

    let monos = all_monomials(ctx.vars(), ctx.cap());
    let index: std::collections::BTreeMap<&CommMono, usize> =
        monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let n_rows = monos.len();
    let n_cols = gens.len() * n_rows;

    // rows[r][0..n_cols] is the coefficient matrix, rows[r][n_cols] the rhs
    let mut rows = vec![vec![0u128; n_cols + 1]; n_rows];
    for (j, g) in gens.iter().enumerate() {
        for (mi, m) in monos.iter().enumerate() {
            let col = j * n_rows + mi;
            for (gm, c) in g.terms() {
                let prod: Vec<u16> = m.0.iter().zip(&gm.0).map(|(a, b)| a + b).collect();
                let deg: usize = prod.iter().map(|&e| e as usize).sum();
                if deg > ctx.cap() {
                    continue;
                }
                let target = CommMono(prod);
                let row = index[&target];
                rows[row][col] = (rows[row][col] + c.residue()) % modulus;
            }
        }
    }
    for (m, c) in f.terms() {
        rows[index[m]][n_cols] = c.residue();
    }

    let mut row_active = vec![true; n_rows];
    let mut col_used = vec![false; n_cols];
    let mut pivots: Vec<(usize, u32)> = Vec::new(); // (row, pivot valuation)

    loop {
        // globally minimal-valuation pivot over the active submatrix
        let mut best: Option<(usize, usize, u32)> = None;
        'scan: for r in 0..n_rows {
            if !row_active[r] {
                continue;
            }
            for c in 0..n_cols {
                if col_used[c] || rows[r][c] == 0 {
                    continue;
                }
                let v = valuation_of(rows[r][c], p, prec);
                if best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((r, c, v));
                    if v == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((pr, pc, pv)) = best else { break };

        // scale the pivot row so the pivot becomes exactly p^pv
        let unit = rows[pr][pc] / (p as u128).pow(pv);
        let unit_inv = inv_mod(unit, modulus);
        for x in rows[pr].iter_mut() {
            *x = *x * unit_inv % modulus;
        }
        let pivot = (p as u128).pow(pv);

        // eliminate the pivot column from every other row; entries there
        // have valuation >= pv, so the division is exact
        let pivot_row = rows[pr].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pr || row[pc] == 0 {
                continue;
            }
            let m = row[pc] / pivot;
            for (x, &e) in row.iter_mut().zip(&pivot_row) {
                let sub = m * e % modulus;
                *x = (*x + modulus - sub) % modulus;
            }
        }
        row_active[pr] = false;
        col_used[pc] = true;
        pivots.push((pr, pv));
    }

    // pivot rows are solvable iff the rhs has at least the pivot's
    // valuation (free unknowns are set to 0); untouched rows must be 0 = 0
    for &(r, v) in &pivots {
        if valuation_of(rows[r][n_cols], p, prec) < v {
            return false;
        }
    }
    for r in 0..n_rows {
        if row_active[r] && rows[r][n_cols] != 0 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Relation checking
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryOutcome {
    /// The entry is zero: nothing to check.
    Zero,
    /// The entry equals an emitted ideal generator on the nose (possibly
    /// negated) — sharper than membership.
    ExactMatch { generator: String, negated: bool },
    /// The entry lies in the ideal at truncation.
    Member,
    /// The entry is not in the ideal at truncation.
    Fail { residue: String },
}

#[derive(Clone, Debug)]
pub struct EntryCheck {
    pub relation: String,
    pub row: usize,
    pub col: usize,
    pub outcome: EntryOutcome,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub entries: Vec<EntryCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| !matches!(e.outcome, EntryOutcome::Fail { .. }))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let loc = format!(
                "relation `{}` entry ({},{})",
                e.relation,
                e.row + 1,
                e.col + 1
            );
            match &e.outcome {
                EntryOutcome::Zero => out.push_str(&format!("{loc}: zero\n")),
                EntryOutcome::ExactMatch { generator, negated } => out.push_str(&format!(
                    "{loc}: exactly {}the generator [{generator}]\n",
                    if *negated { "minus " } else { "" }
                )),
                EntryOutcome::Member => {
                    out.push_str(&format!("{loc}: member of the ideal at truncation\n"))
                }
                EntryOutcome::Fail { residue } => out.push_str(&format!(
                    "{loc}: NOT in the ideal at truncation; residue {residue}\n"
                )),
            }
        }
        out.push_str(if self.passed() {
            "verification passed\n"
        } else {
            "verification FAILED\n"
        });
        out
    }
}

fn short_render(s: &CommSeries) -> String {
    let full = s.render();
    match full.char_indices().nth(160) {
        Some((i, _)) => format!("{} ...", &full[..i]),
        None => full,
    }
}

/// Evaluate every relation word on the universal matrices and check that
/// each entry of `image - Id` belongs to the emitted ideal. Entries that
/// coincide with an emitted generator are reported as exact matches.
pub fn check_relations(
    pres: &Presentation,
    rp: &crate::deform::RingPresentation,
    asg: &MatAssignment,
) -> Result<VerifyReport, VerifyError> {
    let gens: Vec<CommSeries> = rp.ideal.iter().map(|g| g.series.clone()).collect();
    let id = MatRep::identity(asg.sctx);
    let mut report = VerifyReport::default();
    for rel in pres.relations() {
        let diff = evaluate_word(&rel.word, asg)?.sub(&id);
        for row in 0..2 {
            for col in 0..2 {
                let e = diff.entry(row, col);
                let outcome = if e.is_zero() {
                    EntryOutcome::Zero
                } else if let Some(g) = rp
                    .ideal
                    .iter()
                    .find(|g| g.series == *e || g.series.neg() == *e)
                {
                    EntryOutcome::ExactMatch {
                        generator: format!("{}, family {}", g.relation, g.family),
                        negated: g.series.neg() == *e,
                    }
                } else if ideal_member(e, &gens) {
                    EntryOutcome::Member
                } else {
                    EntryOutcome::Fail {
                        residue: short_render(e),
                    }
                };
                report.entries.push(EntryCheck {
                    relation: rel.name.clone(),
                    row,
                    col,
                    outcome,
                });
            }
        }
    }
    Ok(report)
}
