//! Construction of the relation ideal and the deformation-ring presentation.
//!
//! Starting from a validated [`Presentation`], the pipeline is:
//!
//! 1. differentiate every relation by every generator and project the
//!    result into the Magnus algebra of the `Gamma` coordinates
//!    ([`crate::fox::fox_matrix`]);
//! 2. restrict to the inertia-block rows — the dropped `Gamma` rows must be
//!    identically zero, which holds exactly when the group is a semidirect
//!    product over its free `Gamma` quotient;
//! 3. reinterpret each retained entry as a univariate series in the first
//!    `Gamma` coordinate (for several coordinates, the others must not
//!    appear: they act trivially on all image shapes);
//! 4. convert each relation column into ideal generators in
//!    `Z_p[[Y_1..Y_d']]`: family A from the scalar rows, family B from the
//!    unipotent and pinned rows.
//!
//! The number of columns equals the relation count of the group
//! presentation: the inertia module is presented by exactly that matrix, so
//! each relation contributes (at most) one generator per family.
//!
//! Family A for column `j` is `prod_i (1 + Y_i)^{a_i^j} - 1` over the
//! scalar rows `i`, with `a_i^j` the constant coefficient of the matrix
//! entry. Family B substitutes the diagonal-ratio series
//! `W = (1+Y_top)/(1+Y_bot) - 1` for the series variable: the pinned row
//! contributes `M[pinned][j](W)` and each upper-unipotent row contributes
//! `M[i][j](W) * Y_i`. A column supported only on lower-unipotent rows is
//! mirrored through the transposed corner: those rows contribute
//! `M[i][j](Wbar) * Y_i` with `Wbar = (1+Y_bot)/(1+Y_top) - 1`. A column
//! that mixes the two corners has no single-entry normal form and is
//! rejected.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::fox::{fox_matrix, FoxError, FoxMatrix, PiImage, Projection};
use crate::freegroup::FreeWord;
use crate::padic::{PadicCtx, PadicError};
use crate::presentation::{Block, ImageShape, Presentation, RowKind, VarRole, VariableTable};
use crate::series::{subst_t, CommSeries, MagnusSeries, SeriesCtx, SeriesError};
use crate::verify::MatRep;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("presentation fails validation: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Fox(#[from] FoxError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("relation `{relation}`, row `{gen}`: entry involves {monomial}, but only the first Gamma coordinate may act on the inertia block")]
    NotUnivariate {
        relation: String,
        gen: String,
        monomial: String,
    },
    #[error("relation `{relation}` is carried by both corners: upper-triangular rows {upper:?} and lower rows {lower:?}; no single matrix entry represents it")]
    MixedColumn {
        relation: String,
        upper: Vec<String>,
        lower: Vec<String>,
    },
    #[error("relation `{relation}` has a nonzero entry at `{gen}`, whose image is diagonal; diagonal inertia generators must not support relations")]
    DiagonalRow { relation: String, gen: String },
    #[error("ideal generator from relation `{relation}` (family {family}) has unit constant term {constant}; the fixed residual representation is not a solution of this presentation")]
    InconsistentInput {
        relation: String,
        family: Family,
        constant: i128,
    },
    #[error("{0}")]
    BadInput(String),
}

/// Which construction produced an ideal generator: `A` collects the scalar
/// rows of a relation column, `B` the unipotent and pinned rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    A,
    B,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::A => write!(f, "A"),
            Family::B => write!(f, "B"),
        }
    }
}

/// One generator of the relation ideal, tagged with its origin.
#[derive(Clone, Debug)]
pub struct IdealGen {
    pub relation: String,
    pub family: Family,
    pub series: CommSeries,
}

/// The ring presentation `Z_p[[Y_1..Y_d']] / I`, with the variable table
/// and the provenance of every ideal generator.
#[derive(Clone, Debug)]
pub struct RingPresentation {
    pub p: u64,
    pub prec: u32,
    pub deg: usize,
    pub sctx: SeriesCtx,
    pub table: VariableTable,
    pub ideal: Vec<IdealGen>,
    pub warnings: Vec<String>,
}

impl RingPresentation {
    pub fn d_prime(&self) -> usize {
        self.table.d_prime()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "ring presentation (p = {}, precision N = {}, degree cap D = {})\n",
            self.p, self.prec, self.deg
        ));
        let vars = (1..=self.d_prime())
            .map(|i| format!("Y_{i}"))
            .collect::<Vec<_>>()
            .join(", ");
        let quotient = if self.ideal.is_empty() { "" } else { " / I" };
        if vars.is_empty() {
            out.push_str(&format!("R = Z_{}{}\n", self.p, quotient));
        } else {
            out.push_str(&format!("R = Z_{}[[{}]]{}\n", self.p, vars, quotient));
        }
        for v in &self.table.vars {
            out.push_str(&format!("  {} from `{}` ({})\n", v.name, v.source, v.role));
        }
        if self.ideal.is_empty() {
            out.push_str("I = (0)\n");
        } else {
            out.push_str("I = (\n");
            for g in &self.ideal {
                out.push_str(&format!(
                    "  [{}, family {}] {}\n",
                    g.relation,
                    g.family,
                    g.series.render()
                ));
            }
            out.push_str(")\n");
        }
        for w in &self.warnings {
            out.push_str(&format!("note: {w}\n"));
        }
        out
    }
}

/// The diagonal-ratio series `(1+Y_top)/(1+Y_bot) - 1`.
fn ratio_series(sctx: SeriesCtx, top: usize, bot: usize) -> Result<CommSeries, SeriesError> {
    let num = CommSeries::one_plus_var(sctx, top)?;
    let den = CommSeries::one_plus_var(sctx, bot)?;
    Ok(num.mul(&den.unit_inv()?).sub(&CommSeries::one(sctx)))
}

/// The projected relation matrix of a validated presentation: rows indexed
/// by generators, columns by relations, restricted to the `Xinf` rows
/// (the dropped rows must project to zero).
pub fn projected_matrix(pres: &Presentation) -> Result<FoxMatrix, DeformError> {
    let violations = pres.validate();
    if !violations.is_empty() {
        return Err(DeformError::Invalid(violations));
    }
    let counts = pres.counts();
    let padic = PadicCtx::new(pres.p(), pres.prec())?;
    let magnus_ctx = SeriesCtx::new(padic, counts.k, pres.deg());

    let images: Vec<PiImage> = pres
        .gens()
        .iter()
        .map(|g| match g.block {
            Block::Xinf => PiImage::Trivial,
            Block::Gamma => PiImage::Gamma(g.pi.clone()),
        })
        .collect();
    let proj = Projection::new(images);
    let gen_names: Vec<String> = pres.gens().iter().map(|g| g.name.clone()).collect();
    let rel_names: Vec<String> = pres.relations().iter().map(|r| r.name.clone()).collect();
    let words: Vec<FreeWord> = pres.relations().iter().map(|r| r.word.clone()).collect();
    let matrix = fox_matrix(gen_names, rel_names, &words, &proj, magnus_ctx)?;
    Ok(matrix.restrict_rows(counts.n)?)
}

/// Compute the relation ideal and the ring presentation.
pub fn ring_presentation(pres: &Presentation) -> Result<RingPresentation, DeformError> {
    let matrix = projected_matrix(pres)?;
    let counts = pres.counts();
    let padic = PadicCtx::new(pres.p(), pres.prec())?;

    let table = pres.allocate_variables();
    let rows = pres.xinf_rows(&table);
    let sctx = SeriesCtx::new(padic, table.d_prime(), pres.deg());

    // univariate view of every retained entry
    let mut uni: Vec<Vec<MagnusSeries>> = Vec::with_capacity(counts.n);
    for (i, row) in matrix.entries.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, entry) in row.iter().enumerate() {
            let u = entry.require_univariate().map_err(|e| match e {
                SeriesError::NotUnivariate(m) => DeformError::NotUnivariate {
                    relation: matrix.rel_names[j].clone(),
                    gen: matrix.gen_names[i].clone(),
                    monomial: m,
                },
                other => DeformError::Series(other),
            })?;
            out.push(u);
        }
        uni.push(out);
    }

    let (top, bot) = table
        .diag_pair
        .expect("validated presentations have one diagonal Gamma generator");
    let w = ratio_series(sctx, top, bot)?;
    let wbar = ratio_series(sctx, bot, top)?;

    let mut ideal: Vec<IdealGen> = Vec::new();
    for (j, rel) in pres.relations().iter().enumerate() {
        let mut scalar_rows: Vec<(usize, usize)> = Vec::new();
        let mut upper_rows: Vec<(usize, usize)> = Vec::new();
        let mut lower_rows: Vec<(usize, usize)> = Vec::new();
        let mut pinned_row: Option<usize> = None;
        for (i, kind) in rows.iter().enumerate() {
            match kind {
                RowKind::Scalar { var } => scalar_rows.push((i, *var)),
                RowKind::Upper { var } => upper_rows.push((i, *var)),
                RowKind::Lower { var } => lower_rows.push((i, *var)),
                RowKind::Pinned => pinned_row = Some(i),
                RowKind::Diagonal { .. } => {
                    if !uni[i][j].is_zero() {
                        return Err(DeformError::DiagonalRow {
                            relation: rel.name.clone(),
                            gen: matrix.gen_names[i].clone(),
                        });
                    }
                }
                RowKind::Identity => {}
            }
        }
        let nonzero_names = |rows: &[(usize, usize)]| -> Vec<String> {
            rows.iter()
                .filter(|(i, _)| !uni[*i][j].is_zero())
                .map(|(i, _)| matrix.gen_names[*i].clone())
                .collect()
        };
        let lower_support = nonzero_names(&lower_rows);
        let mut upper_support = nonzero_names(&scalar_rows);
        upper_support.extend(nonzero_names(&upper_rows));
        if let Some(i) = pinned_row {
            if !uni[i][j].is_zero() {
                upper_support.push(matrix.gen_names[i].clone());
            }
        }
        if !lower_support.is_empty() && !upper_support.is_empty() {
            return Err(DeformError::MixedColumn {
                relation: rel.name.clone(),
                upper: upper_support,
                lower: lower_support,
            });
        }

        let mut fam_a = CommSeries::one(sctx);
        for &(i, var) in &scalar_rows {
            let a = uni[i][j].constant_term();
            fam_a = fam_a.mul(&CommSeries::one_plus_var(sctx, var)?.pow_padic(a)?);
        }
        ideal.push(IdealGen {
            relation: rel.name.clone(),
            family: Family::A,
            series: fam_a.sub(&CommSeries::one(sctx)),
        });

        let mut fam_b = CommSeries::zero(sctx);
        if lower_support.is_empty() {
            if let Some(i) = pinned_row {
                fam_b = fam_b.add(&subst_t(&uni[i][j], &w)?);
            }
            for &(i, var) in &upper_rows {
                fam_b = fam_b.add(&subst_t(&uni[i][j], &w)?.mul(&CommSeries::var(sctx, var)?));
            }
        } else {
            for &(i, var) in &lower_rows {
                fam_b = fam_b.add(&subst_t(&uni[i][j], &wbar)?.mul(&CommSeries::var(sctx, var)?));
            }
        }
        ideal.push(IdealGen {
            relation: rel.name.clone(),
            family: Family::B,
            series: fam_b,
        });
    }

    for t in pres.ties() {
        let c = padic.elt(t.coeff as i128);
        for g in &mut ideal {
            g.series = g.series.subst_var_multiple(t.lhs, c, t.rhs);
        }
    }

    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for g in ideal {
        if g.series.is_zero() {
            warnings.push(format!(
                "relation `{}` contributes no family-{} generator (zero series dropped)",
                g.relation, g.family
            ));
            continue;
        }
        let c0 = g.series.constant_term();
        if !c0.is_zero() && c0.valuation() == 0 {
            return Err(DeformError::InconsistentInput {
                relation: g.relation,
                family: g.family,
                constant: c0.signed_lift(),
            });
        }
        kept.push(g);
    }

    Ok(RingPresentation {
        p: pres.p(),
        prec: pres.prec(),
        deg: pres.deg(),
        sctx,
        table,
        ideal: kept,
        warnings,
    })
}

/// The universal matrix images of all generators, with ties substituted.
#[derive(Clone, Debug)]
pub struct MatAssignment {
    pub sctx: SeriesCtx,
    pub names: Vec<String>,
    /// Aligned with the presentation's generator order.
    pub mats: Vec<MatRep>,
}

impl MatAssignment {
    pub fn get(&self, name: &str) -> Option<&MatRep> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.mats[i])
    }
}

/// Assign every generator its universal image: scalar rows scale both
/// diagonal entries by `1+Y_i`, unipotent rows put `Y_i` in a corner, the
/// pinned generator gets corner entry 1, diagonal generators get their
/// variable pair, invisible generators the identity.
pub fn universal_matrices(pres: &Presentation, rp: &RingPresentation) -> MatAssignment {
    let sctx = rp.sctx;
    let one = CommSeries::one(sctx);
    let zero = CommSeries::zero(sctx);
    let var = |i: usize| CommSeries::var(sctx, i).expect("allocated variable in range");
    let one_plus =
        |i: usize| CommSeries::one_plus_var(sctx, i).expect("allocated variable in range");
    let mut mats = Vec::with_capacity(pres.gens().len());
    for (i, g) in pres.gens().iter().enumerate() {
        let vs = &rp.table.by_gen[i];
        let m = match g.shape {
            ImageShape::Scalar => MatRep::new([
                [one_plus(vs[0]), zero.clone()],
                [zero.clone(), one_plus(vs[0])],
            ]),
            ImageShape::Diagonal => MatRep::new([
                [one_plus(vs[0]), zero.clone()],
                [zero.clone(), one_plus(vs[1])],
            ]),
            ImageShape::UpperUnipotent => {
                MatRep::new([[one.clone(), var(vs[0])], [zero.clone(), one.clone()]])
            }
            ImageShape::UpperUnipotentPinned => {
                MatRep::new([[one.clone(), one.clone()], [zero.clone(), one.clone()]])
            }
            ImageShape::LowerUnipotent => {
                MatRep::new([[one.clone(), zero.clone()], [var(vs[0]), one.clone()]])
            }
            ImageShape::Identity => MatRep::identity(sctx),
        };
        mats.push(m);
    }
    let padic = sctx.padic();
    for t in pres.ties() {
        let c = padic.elt(t.coeff as i128);
        for m in &mut mats {
            *m = m.map_entries(|s| s.subst_var_multiple(t.lhs, c, t.rhs));
        }
    }
    MatAssignment {
        sctx,
        names: pres.gens().iter().map(|g| g.name.clone()).collect(),
        mats,
    }
}

/// How the variables of a source presentation map onto those of a quotient
/// presentation whose generators are a subset (by name).
#[derive(Clone, Debug, Serialize)]
pub struct SurjectionReport {
    /// Pairs `(source variable, quotient variable)` for matched variables.
    pub var_map: Vec<(String, String)>,
    /// Source variables with no partner: coordinates of the kernel.
    pub kernel_vars: Vec<String>,
    /// Lower bound for the Krull dimension of the source ring mod p,
    /// namely `d' - #ideal generators` of the quotient ring (when the
    /// quotient pipeline runs to completion).
    pub dim_bound: Option<usize>,
}

impl SurjectionReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("variable surjection:\n");
        for (a, b) in &self.var_map {
            out.push_str(&format!("  {a} -> {b}\n"));
        }
        if self.kernel_vars.is_empty() {
            out.push_str("kernel variables: none\n");
        } else {
            out.push_str(&format!(
                "kernel variables: {{{}}}\n",
                self.kernel_vars.join(", ")
            ));
        }
        match self.dim_bound {
            Some(b) => out.push_str(&format!(
                "Krull dimension of the source ring mod p is at least {b}\n"
            )),
            None => out.push_str("no dimension bound (quotient pipeline did not run)\n"),
        }
        out
    }
}

/// Match variables of `gs` onto variables of `g` by generator name and
/// variable role. `g`'s generators must all exist in `gs`; a `g` variable
/// with no `gs` partner (a shape promotion) is an error, while `gs`
/// variables with no `g` partner are reported as kernel coordinates.
pub fn compare_surjection(
    gs: &Presentation,
    g: &Presentation,
) -> Result<SurjectionReport, DeformError> {
    for gen in g.gens() {
        if gs.gen_index(&gen.name).is_none() {
            return Err(DeformError::BadInput(format!(
                "quotient generator `{}` does not appear in the source presentation",
                gen.name
            )));
        }
    }
    let gs_table = gs.allocate_variables();
    let g_table = g.allocate_variables();
    let key = |v: &crate::presentation::VarInfo| (v.source.clone(), v.role);
    let g_by_key: BTreeMap<(String, VarRole), String> = g_table
        .vars
        .iter()
        .map(|v| (key(v), v.name.clone()))
        .collect();
    let gs_keys: std::collections::BTreeSet<(String, VarRole)> =
        gs_table.vars.iter().map(key).collect();
    for v in &g_table.vars {
        if !gs_keys.contains(&key(v)) {
            return Err(DeformError::BadInput(format!(
                "quotient variable {} (from `{}`) has no source partner; the quotient image cannot be larger",
                v.name, v.source
            )));
        }
    }
    let mut var_map = Vec::new();
    let mut kernel_vars = Vec::new();
    for v in &gs_table.vars {
        match g_by_key.get(&key(v)) {
            Some(name) => var_map.push((v.name.clone(), name.clone())),
            None => kernel_vars.push(v.name.clone()),
        }
    }
    let dim_bound = ring_presentation(g)
        .ok()
        .map(|rp| rp.d_prime().saturating_sub(rp.ideal.len()));
    Ok(SurjectionReport {
        var_map,
        kernel_vars,
        dim_bound,
    })
}

// ---------------------------------------------------------------------------
// JSON output
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RingVarJson<'a> {
    name: &'a str,
    source_generator: &'a str,
    role: VarRole,
}

#[derive(Serialize)]
struct RingIdealJson<'a> {
    relation: &'a str,
    family: String,
    series: String,
}

#[derive(Serialize)]
struct RingJson<'a> {
    p: u64,
    prec: u32,
    deg: usize,
    d_prime: usize,
    variables: Vec<RingVarJson<'a>>,
    ideal: Vec<RingIdealJson<'a>>,
    warnings: &'a [String],
}

pub fn ring_presentation_to_json(rp: &RingPresentation) -> String {
    let doc = RingJson {
        p: rp.p,
        prec: rp.prec,
        deg: rp.deg,
        d_prime: rp.d_prime(),
        variables: rp
            .table
            .vars
            .iter()
            .map(|v| RingVarJson {
                name: &v.name,
                source_generator: &v.source,
                role: v.role,
            })
            .collect(),
        ideal: rp
            .ideal
            .iter()
            .map(|g| RingIdealJson {
                relation: &g.relation,
                family: g.family.to_string(),
                series: g.series.render(),
            })
            .collect(),
        warnings: &rp.warnings,
    };
    serde_json::to_string_pretty(&doc).expect("ring presentation serializes")
}
