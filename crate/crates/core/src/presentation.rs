//! Annotated pro-p presentations of Galois-type groups.
//!
//! A [`Presentation`] records a finitely presented pro-p group together with
//! the arithmetic annotations the deformation pipeline needs: a prime and
//! working precision, the two diagonal characters of the residual
//! representation, and per-generator metadata — which block the generator
//! sits in (the inertia-side block `Xinf`, or the `Gamma` block mapping onto
//! the free abelian quotient), its character under the prime-to-p group `A`,
//! and flags for the pinned generator and for commutation with it. From the
//! character data each generator's universal image shape is classified, and
//! from the shapes the deformation variables `Y_1..Y_d'` are allocated.
//!
//! The module also houses the line-oriented text format (parser and
//! renderer), a JSON mirror of every field, and two builders that synthesize
//! standard presentations: tame/wild local-relation presentations and the
//! augmentation by extra free ramified generators.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freegroup::{FreeWord, Gen};
use crate::padic::is_odd_prime;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresentationError {
    #[error("line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("characters chi1 = omega^{chi1} and chi2 = omega^{chi2} coincide up to sign (mod {modulus}); the residual image is not genuinely triangular")]
    NotBorel { chi1: u32, chi2: u32, modulus: u32 },
    #[error("duplicate generator name `{0}`")]
    DuplicateGen(String),
    #[error("duplicate relation name `{0}`")]
    DuplicateRel(String),
    #[error("{0}")]
    BadInput(String),
    #[error("presentation JSON: {0}")]
    Json(String),
}

/// A character of the prime-to-p quotient `A`, stored as a canonical
/// exponent of the order-(p-1) cyclic character `omega`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Character {
    exp: u32,
    modulus: u32,
}

impl Character {
    /// `omega^exp` with the exponent reduced mod p - 1.
    pub fn omega(exp: i64, p: u64) -> Character {
        let m = (p - 1) as i64;
        Character {
            exp: exp.rem_euclid(m) as u32,
            modulus: m as u32,
        }
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_trivial(&self) -> bool {
        self.exp == 0
    }

    /// Odd characters send complex conjugation to -1: `omega^m` is odd
    /// exactly when `m` is.
    pub fn is_odd(&self) -> bool {
        self.exp % 2 == 1
    }

    pub fn mul(&self, other: &Character) -> Character {
        assert_eq!(
            self.modulus, other.modulus,
            "characters of different groups"
        );
        Character {
            exp: (self.exp + other.exp) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn inv(&self) -> Character {
        Character {
            exp: (self.modulus - self.exp) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "trivial")
        } else {
            write!(f, "omega^{}", self.exp)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Block {
    Xinf,
    Gamma,
}

/// Shape of a generator's image under the universal deformation, derived
/// from its character; the variable count is what the shape contributes to
/// the presentation ring.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ImageShape {
    Scalar,
    Diagonal,
    UpperUnipotent,
    UpperUnipotentPinned,
    LowerUnipotent,
    Identity,
}

impl ImageShape {
    pub fn var_count(&self) -> usize {
        match self {
            ImageShape::Scalar => 1,
            ImageShape::Diagonal => 2,
            ImageShape::UpperUnipotent => 1,
            ImageShape::UpperUnipotentPinned => 0,
            ImageShape::LowerUnipotent => 1,
            ImageShape::Identity => 0,
        }
    }

    fn dsl_name(&self) -> &'static str {
        match self {
            ImageShape::Scalar => "Scalar",
            ImageShape::Diagonal => "Diagonal",
            ImageShape::UpperUnipotent => "UpperUnipotent",
            ImageShape::UpperUnipotentPinned => "UpperUnipotentPinned",
            ImageShape::LowerUnipotent => "LowerUnipotent",
            ImageShape::Identity => "Identity",
        }
    }
}

/// Decide the image shape of a generator from its character.
///
/// Without the commutation flag: trivial character gives the generic
/// diagonal torus direction; an odd character matching `chi1*chi2^-1`
/// (resp. its inverse) gives the upper (resp. lower) unipotent direction;
/// anything else acts invisibly. A generator known to commute with the
/// pinned one is squeezed further: only the upper-unipotent direction and
/// the scalar center survive the commutation constraint.
pub fn classify_image(
    chi: &Character,
    commutes_with_pinned: bool,
    chi1: &Character,
    chi2: &Character,
) -> Result<ImageShape, PresentationError> {
    let ratio = chi1.mul(&chi2.inv());
    if ratio.is_trivial() || ratio.exp * 2 == ratio.modulus {
        return Err(PresentationError::NotBorel {
            chi1: chi1.exp,
            chi2: chi2.exp,
            modulus: chi1.modulus,
        });
    }
    let shape = if commutes_with_pinned {
        if *chi == ratio {
            ImageShape::UpperUnipotent
        } else if chi.is_trivial() {
            ImageShape::Scalar
        } else {
            ImageShape::Identity
        }
    } else if chi.is_trivial() {
        ImageShape::Diagonal
    } else if chi.is_odd() && *chi == ratio {
        ImageShape::UpperUnipotent
    } else if chi.is_odd() && *chi == ratio.inv() {
        ImageShape::LowerUnipotent
    } else {
        ImageShape::Identity
    };
    Ok(shape)
}

/// A generator before shape classification and reordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawGen {
    pub name: String,
    pub block: Block,
    pub chi_exp: i64,
    pub pinned: bool,
    pub commutes_pinned: bool,
    /// Image in the free group on the abstract `gamma` coordinates; empty
    /// for `Xinf` generators.
    pub pi: FreeWord,
}

/// A fully classified generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenMeta {
    pub name: String,
    pub block: Block,
    pub chi: Character,
    pub pinned: bool,
    pub commutes_pinned: bool,
    pub pi: FreeWord,
    pub shape: ImageShape,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub word: FreeWord,
}

/// A linear constraint `Y_(lhs+1) = coeff * Y_(rhs+1)` between deformation
/// variables, supplied by the user when the `A`-action on wild generators
/// identifies variables the presentation itself cannot see.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tie {
    pub lhs: usize,
    pub coeff: i64,
    pub rhs: usize,
}

/// Shape-derived summary counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Total generators.
    pub d: usize,
    /// Generators in the `Xinf` block.
    pub n: usize,
    /// Generators in the `Gamma` block.
    pub k: usize,
    /// Scalar-shaped `Xinf` generators (their variables come first).
    pub u_xinf: usize,
    /// Scalar plus upper-unipotent `Xinf` generators.
    pub v_xinf: usize,
    /// Diagonal-shaped `Gamma` generators.
    pub u_gamma: usize,
    /// `Gamma` generators with upper-triangular image (diagonal, scalar or
    /// upper-unipotent).
    pub v_gamma: usize,
    /// `Gamma` generators with any nontrivial image.
    pub w_gamma: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarRole {
    Scalar,
    Upper,
    Lower,
    DiagTop,
    DiagBottom,
}

impl fmt::Display for VarRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarRole::Scalar => "scalar",
            VarRole::Upper => "upper corner",
            VarRole::Lower => "lower corner",
            VarRole::DiagTop => "diagonal top",
            VarRole::DiagBottom => "diagonal bottom",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    /// `Y_1`, `Y_2`, ...
    pub name: String,
    /// Name of the generator the variable belongs to.
    pub source: String,
    pub role: VarRole,
}

/// The allocation of deformation variables to generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableTable {
    pub vars: Vec<VarInfo>,
    /// Variable indices per generator, aligned with the presentation's
    /// generator order.
    pub by_gen: Vec<Vec<usize>>,
    /// The (top, bottom) pair of the distinguished diagonal `Gamma`
    /// generator, when there is one.
    pub diag_pair: Option<(usize, usize)>,
}

impl VariableTable {
    pub fn d_prime(&self) -> usize {
        self.vars.len()
    }
}

/// How an `Xinf` row of the relation matrix enters the ideal formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Scalar { var: usize },
    Upper { var: usize },
    Lower { var: usize },
    Diagonal { top: usize, bottom: usize },
    Pinned,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    p: u64,
    prec: u32,
    deg: usize,
    chi1: Character,
    chi2: Character,
    gens: Vec<GenMeta>,
    relations: Vec<Relation>,
    ties: Vec<Tie>,
}

fn shape_class(g: &GenMeta) -> u8 {
    if g.pinned {
        return 5;
    }
    match (g.block, g.shape) {
        (Block::Xinf, ImageShape::Scalar) => 0,
        (Block::Xinf, ImageShape::Diagonal) => 1,
        (Block::Xinf, ImageShape::UpperUnipotent) => 2,
        (Block::Xinf, ImageShape::LowerUnipotent) => 3,
        (Block::Xinf, _) => 4,
        (Block::Gamma, ImageShape::Diagonal) => 0,
        (Block::Gamma, ImageShape::Scalar) => 1,
        (Block::Gamma, ImageShape::UpperUnipotent) => 2,
        (Block::Gamma, ImageShape::LowerUnipotent) => 3,
        (Block::Gamma, _) => 4,
    }
}

fn block_class(b: Block) -> u8 {
    match b {
        Block::Xinf => 0,
        Block::Gamma => 1,
    }
}

impl Presentation {
    /// Classify, normalize the generator order, and reindex relations.
    ///
    /// The stable order is: the whole `Xinf` block (scalar, diagonal, upper,
    /// lower, invisible, pinned last), then the `Gamma` block (diagonal,
    /// scalar, upper, lower, invisible). Relation words arrive indexed by
    /// declaration order and are rewritten to the normalized order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: u64,
        prec: u32,
        deg: usize,
        chi1_exp: i64,
        chi2_exp: i64,
        gens: Vec<RawGen>,
        relations: Vec<(String, FreeWord)>,
        ties: Vec<Tie>,
    ) -> Result<Presentation, PresentationError> {
        if !is_odd_prime(p) {
            return Err(PresentationError::BadInput(format!(
                "p = {p} is not an odd prime"
            )));
        }
        let chi1 = Character::omega(chi1_exp, p);
        let chi2 = Character::omega(chi2_exp, p);
        let mut seen = BTreeMap::new();
        for (i, g) in gens.iter().enumerate() {
            if seen.insert(g.name.clone(), i).is_some() {
                return Err(PresentationError::DuplicateGen(g.name.clone()));
            }
        }
        let mut rel_seen = BTreeMap::new();
        for (name, _) in &relations {
            if rel_seen.insert(name.clone(), ()).is_some() {
                return Err(PresentationError::DuplicateRel(name.clone()));
            }
        }

        let mut metas: Vec<(usize, GenMeta)> = Vec::with_capacity(gens.len());
        for (i, g) in gens.into_iter().enumerate() {
            let chi = Character::omega(g.chi_exp, p);
            let shape = if g.pinned {
                ImageShape::UpperUnipotentPinned
            } else {
                classify_image(&chi, g.commutes_pinned, &chi1, &chi2)?
            };
            metas.push((
                i,
                GenMeta {
                    name: g.name,
                    block: g.block,
                    chi,
                    pinned: g.pinned,
                    commutes_pinned: g.commutes_pinned,
                    pi: g.pi,
                    shape,
                },
            ));
        }
        metas.sort_by_key(|(_, g)| (block_class(g.block), shape_class(g)));
        let mut new_index = vec![0u32; metas.len()];
        for (pos, (old, _)) in metas.iter().enumerate() {
            new_index[*old] = pos as u32;
        }
        let gens: Vec<GenMeta> = metas.into_iter().map(|(_, g)| g).collect();
        let relations = relations
            .into_iter()
            .map(|(name, w)| Relation {
                name,
                word: FreeWord::from_syllables(
                    w.syllables()
                        .iter()
                        .map(|&(g, e)| (Gen(new_index[g.0 as usize]), e))
                        .collect(),
                ),
            })
            .collect();

        Ok(Presentation {
            p,
            prec,
            deg,
            chi1,
            chi2,
            gens,
            relations,
            ties,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn with_params(&self, prec: u32, deg: usize) -> Presentation {
        Presentation {
            prec,
            deg,
            ..self.clone()
        }
    }

    pub fn chi1(&self) -> Character {
        self.chi1
    }

    pub fn chi2(&self) -> Character {
        self.chi2
    }

    pub fn gens(&self) -> &[GenMeta] {
        &self.gens
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn ties(&self) -> &[Tie] {
        &self.ties
    }

    pub fn gen_index(&self, name: &str) -> Option<Gen> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .map(|i| Gen(i as u32))
    }

    pub fn counts(&self) -> Counts {
        let n = self.gens.iter().filter(|g| g.block == Block::Xinf).count();
        let k = self.gens.len() - n;
        let in_block = |b: Block, s: ImageShape| {
            self.gens
                .iter()
                .filter(|g| g.block == b && g.shape == s)
                .count()
        };
        let u_xinf = in_block(Block::Xinf, ImageShape::Scalar);
        let v_xinf = u_xinf + in_block(Block::Xinf, ImageShape::UpperUnipotent);
        let u_gamma = in_block(Block::Gamma, ImageShape::Diagonal);
        let v_gamma = u_gamma
            + in_block(Block::Gamma, ImageShape::Scalar)
            + in_block(Block::Gamma, ImageShape::UpperUnipotent);
        let w_gamma = v_gamma + in_block(Block::Gamma, ImageShape::LowerUnipotent);
        Counts {
            d: self.gens.len(),
            n,
            k,
            u_xinf,
            v_xinf,
            u_gamma,
            v_gamma,
            w_gamma,
        }
    }

    /// Assign `Y_1..Y_d'` to the variable-bearing generators. Scalar and
    /// upper-unipotent inertia variables come first (in that order), then
    /// the diagonal pairs, then the remaining `Gamma` variables, and
    /// lower-unipotent inertia variables last — so that a presentation with
    /// one diagonal `Gamma` generator puts its pair right after the
    /// upper-triangular inertia variables.
    pub fn allocate_variables(&self) -> VariableTable {
        let mut vars = Vec::new();
        let mut by_gen: Vec<Vec<usize>> = vec![Vec::new(); self.gens.len()];
        let mut diag_pair = None;
        let steps: [(Block, ImageShape); 8] = [
            (Block::Xinf, ImageShape::Scalar),
            (Block::Xinf, ImageShape::UpperUnipotent),
            (Block::Xinf, ImageShape::Diagonal),
            (Block::Gamma, ImageShape::Diagonal),
            (Block::Gamma, ImageShape::Scalar),
            (Block::Gamma, ImageShape::UpperUnipotent),
            (Block::Gamma, ImageShape::LowerUnipotent),
            (Block::Xinf, ImageShape::LowerUnipotent),
        ];
        for (block, shape) in steps {
            for (i, g) in self.gens.iter().enumerate() {
                if g.block != block || g.shape != shape || g.pinned {
                    continue;
                }
                let roles: &[VarRole] = match shape {
                    ImageShape::Scalar => &[VarRole::Scalar],
                    ImageShape::UpperUnipotent => &[VarRole::Upper],
                    ImageShape::LowerUnipotent => &[VarRole::Lower],
                    ImageShape::Diagonal => &[VarRole::DiagTop, VarRole::DiagBottom],
                    _ => &[],
                };
                for role in roles {
                    let idx = vars.len();
                    vars.push(VarInfo {
                        name: format!("Y_{}", idx + 1),
                        source: g.name.clone(),
                        role: *role,
                    });
                    by_gen[i].push(idx);
                }
                if block == Block::Gamma && shape == ImageShape::Diagonal && diag_pair.is_none() {
                    diag_pair = Some((by_gen[i][0], by_gen[i][1]));
                }
            }
        }
        VariableTable {
            vars,
            by_gen,
            diag_pair,
        }
    }

    /// Row classification of the `Xinf` block, in generator order, with the
    /// allocated variable indices filled in.
    pub fn xinf_rows(&self, table: &VariableTable) -> Vec<RowKind> {
        self.gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.block == Block::Xinf)
            .map(|(i, g)| match g.shape {
                ImageShape::Scalar => RowKind::Scalar {
                    var: table.by_gen[i][0],
                },
                ImageShape::UpperUnipotent => RowKind::Upper {
                    var: table.by_gen[i][0],
                },
                ImageShape::LowerUnipotent => RowKind::Lower {
                    var: table.by_gen[i][0],
                },
                ImageShape::Diagonal => RowKind::Diagonal {
                    top: table.by_gen[i][0],
                    bottom: table.by_gen[i][1],
                },
                ImageShape::UpperUnipotentPinned => RowKind::Pinned,
                ImageShape::Identity => RowKind::Identity,
            })
            .collect()
    }

    /// Structural and pipeline checks. An empty report means the
    /// presentation is both well-formed and eligible for the relation-ideal
    /// pipeline.
    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        let counts = self.counts();
        let ratio = self.chi1.mul(&self.chi2.inv());

        // block ordering (always true for normalized construction, checked
        // defensively for hand-built values)
        let mut last = (0u8, 0u8);
        for g in &self.gens {
            let key = (block_class(g.block), shape_class(g));
            if key < last {
                report.push(format!(
                    "generator `{}` is out of normalized block order",
                    g.name
                ));
            }
            last = key;
        }

        let pinned: Vec<&GenMeta> = self.gens.iter().filter(|g| g.pinned).collect();
        if pinned.len() > 1 {
            report.push(format!(
                "{} pinned generators declared; at most one generator can be normalized to the unit upper-unipotent image",
                pinned.len()
            ));
        }
        for g in &pinned {
            if g.block != Block::Xinf {
                report.push(format!(
                    "pinned generator `{}` must sit in the Xinf block",
                    g.name
                ));
            }
            if g.chi != ratio {
                report.push(format!(
                    "pinned generator `{}` must carry the character chi1*chi2^-1 = {}, found {}",
                    g.name, ratio, g.chi
                ));
            }
        }

        for g in &self.gens {
            let trivial_pi = g.pi.is_empty();
            match g.block {
                Block::Xinf if !trivial_pi => report.push(format!(
                    "Xinf generator `{}` has a nontrivial gamma-image",
                    g.name
                )),
                Block::Gamma if trivial_pi => report.push(format!(
                    "Gamma generator `{}` has a trivial gamma-image",
                    g.name
                )),
                _ => {}
            }
            if g.block == Block::Gamma {
                if let Some(max) = g.pi.max_gen_index() {
                    if max as usize >= counts.k {
                        report.push(format!(
                            "gamma-image of `{}` uses coordinate gamma_{} but only {} Gamma generator(s) exist",
                            g.name,
                            max + 1,
                            counts.k
                        ));
                    }
                }
            }
        }

        if counts.u_gamma > 1 {
            report.push(format!(
                "{} diagonal Gamma generators; the free abelian quotient supports at most one independent diagonal direction",
                counts.u_gamma
            ));
        }

        // pipeline eligibility
        if counts.w_gamma != counts.v_gamma {
            report.push(
                "a Gamma generator has a lower-unipotent image; the relation pipeline needs every Gamma image upper-triangular"
                    .to_string(),
            );
        }
        if counts.u_gamma != 1 {
            report.push(format!(
                "the relation pipeline needs exactly one diagonal Gamma generator, found {}",
                counts.u_gamma
            ));
        }
        if pinned.is_empty() {
            report.push(
                "no pinned generator: the relation pipeline normalizes one upper-unipotent generator to entry 1".to_string(),
            );
        }

        // relations must die in the abelian quotient: substituting each
        // generator's gamma-image into a relation word has to cancel to the
        // empty word, or the group it presents does not map onto the free
        // Gamma quotient at all
        for r in &self.relations {
            let mut image = FreeWord::empty();
            let mut ok = true;
            for &(g, e) in r.word.syllables() {
                match self.gens.get(g.0 as usize) {
                    Some(meta) => image = image.mul(&meta.pi.pow(e)),
                    None => {
                        report.push(format!(
                            "relation `{}` references generator index {} out of range",
                            r.name, g.0
                        ));
                        ok = false;
                        break;
                    }
                }
            }
            if ok && !image.is_empty() {
                report.push(format!(
                    "relation `{}` has nontrivial gamma-image {}; relations must lie in the kernel of the projection",
                    r.name,
                    image.render(|i| format!("gamma_{}", i + 1))
                ));
            }
        }

        // ties reference allocated variables
        let d_prime = self.allocate_variables().d_prime();
        let mut tied = BTreeMap::new();
        for t in &self.ties {
            for side in [t.lhs, t.rhs] {
                if side >= d_prime {
                    report.push(format!(
                        "tie references Y_{} but only {} variable(s) are allocated",
                        side + 1,
                        d_prime
                    ));
                }
            }
            if t.lhs == t.rhs {
                report.push(format!("tie equates Y_{} with itself", t.lhs + 1));
            }
            if tied.insert(t.lhs, ()).is_some() {
                report.push(format!(
                    "Y_{} is constrained by more than one tie",
                    t.lhs + 1
                ));
            }
        }

        report
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(i64),
    Star,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> PresentationError {
    PresentationError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex_word(s: &str, line: usize, base_col: usize) -> Result<Vec<(Tok, usize)>, PresentationError> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let col = base_col + i;
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '*' => {
                out.push((Tok::Star, col));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            '[' => {
                out.push((Tok::LBracket, col));
                i += 1;
            }
            ']' => {
                out.push((Tok::RBracket, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '-' | '0'..='9' => {
                let start = i;
                if c == '-' {
                    i += 1;
                    if i >= chars.len() || !chars[i].is_ascii_digit() {
                        return Err(err(line, col, "expected digits after `-`"));
                    }
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<i64>()
                    .map_err(|_| err(line, col, format!("integer `{text}` out of range")))?;
                out.push((Tok::Int(v), col));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                out.push((Tok::Name(chars[start..i].iter().collect()), col));
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// Recursive-descent parser for word expressions:
/// `expr := factor (* factor)*`, `factor := atom (^ INT)?`,
/// `atom := NAME | 1 | (expr) | [expr, expr]`.
struct WordParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_col: usize,
    resolve: &'a dyn Fn(&str) -> Option<Gen>,
    /// What the names denote, for error messages ("generator" in relation
    /// words, "Gamma coordinate" in pi words).
    alphabet: &'a str,
}

impl<'a> WordParser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn col(&self) -> usize {
        self.peek().map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), PresentationError> {
        match self.peek() {
            Some((tok, _)) if *tok == t => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(err(self.line, self.col(), format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<FreeWord, PresentationError> {
        let mut acc = self.factor()?;
        while let Some((Tok::Star, _)) = self.peek() {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<FreeWord, PresentationError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.pos += 1;
            match self.peek() {
                Some((Tok::Int(e), _)) => {
                    let e = *e;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                _ => Err(err(
                    self.line,
                    self.col(),
                    "expected integer exponent after `^`",
                )),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<FreeWord, PresentationError> {
        let col = self.col();
        match self.peek().cloned() {
            Some((Tok::Name(name), _)) => {
                self.pos += 1;
                match (self.resolve)(&name) {
                    Some(g) => Ok(FreeWord::gen(g)),
                    None => Err(err(
                        self.line,
                        col,
                        format!("undeclared {} `{name}`", self.alphabet),
                    )),
                }
            }
            Some((Tok::Int(1), _)) => {
                self.pos += 1;
                Ok(FreeWord::empty())
            }
            Some((Tok::LParen, _)) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some((Tok::LBracket, _)) => {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(Tok::Comma, "`,` inside commutator")?;
                let b = self.expr()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(FreeWord::commutator(&a, &b))
            }
            Some((tok, _)) => Err(err(self.line, col, format!("unexpected token {tok:?}"))),
            None => Err(err(self.line, col, "unexpected end of expression")),
        }
    }
}

/// Parse a word expression against a name resolver.
fn parse_word(
    text: &str,
    line: usize,
    base_col: usize,
    resolve: &dyn Fn(&str) -> Option<Gen>,
    alphabet: &str,
) -> Result<FreeWord, PresentationError> {
    let toks = lex_word(text, line, base_col)?;
    let mut p = WordParser {
        toks: &toks,
        pos: 0,
        line,
        end_col: base_col + text.chars().count(),
        resolve,
        alphabet,
    };
    let w = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(line, p.col(), "trailing input after word expression"));
    }
    Ok(w)
}

/// Resolve `gamma` / `gamma_N` coordinate names.
fn resolve_gamma(name: &str) -> Option<Gen> {
    if name == "gamma" {
        return Some(Gen(0));
    }
    name.strip_prefix("gamma_")
        .and_then(|n| n.parse::<u32>().ok())
        .filter(|&n| n >= 1)
        .map(|n| Gen(n - 1))
}

/// Evaluate a character expression (`trivial`, `omega^3`,
/// `chi1*chi2^-1`, ...) to an omega exponent. Header lines restrict
/// `chi1`/`chi2` themselves to omega form, so `diag` is `None` there.
fn parse_chi_expr(
    text: &str,
    line: usize,
    base_col: usize,
    diag: Option<(i64, i64)>,
) -> Result<i64, PresentationError> {
    let toks = lex_word(text, line, base_col)?;
    if toks.is_empty() {
        return Err(err(line, base_col, "empty character expression"));
    }
    let mut total: i64 = 0;
    let mut pos = 0;
    loop {
        let (name, col) = match toks.get(pos) {
            Some((Tok::Name(n), c)) => (n.clone(), *c),
            Some((_, c)) => return Err(err(line, *c, "expected character name")),
            None => return Err(err(line, base_col, "expected character name")),
        };
        pos += 1;
        let mut exp = 1i64;
        if let Some((Tok::Caret, _)) = toks.get(pos) {
            pos += 1;
            match toks.get(pos) {
                Some((Tok::Int(e), _)) => {
                    exp = *e;
                    pos += 1;
                }
                _ => return Err(err(line, col, "expected integer exponent after `^`")),
            }
        }
        let base = match name.as_str() {
            "trivial" => 0,
            "omega" => 1,
            "chi1" => match diag {
                Some((m1, _)) => m1,
                None => return Err(err(line, col, "chi1 cannot appear in its own definition")),
            },
            "chi2" => match diag {
                Some((_, m2)) => m2,
                None => return Err(err(line, col, "chi2 cannot appear in its own definition")),
            },
            other => {
                return Err(err(
                    line,
                    col,
                    format!("unknown character `{other}` (expected trivial, omega, chi1 or chi2)"),
                ))
            }
        };
        total += base * exp;
        match toks.get(pos) {
            None => return Ok(total),
            Some((Tok::Star, _)) => pos += 1,
            Some((_, c)) => return Err(err(line, *c, "expected `*` between character factors")),
        }
    }
}

/// Whitespace-split a line into `(token, 1-based column)` pairs.
fn split_cols(line: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&line[s..i], s + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&line[s..], s + 1));
    }
    out
}

struct RawRel {
    name: String,
    text: String,
    line: usize,
    col: usize,
}

/// Parse the line-oriented text format.
///
/// ```text
/// p 5 prec 3 deg 8
/// chi1 omega^0 chi2 omega^3
/// gen t_w block=Xinf chi=chi1*chi2^-1 pinned
/// gen gamma block=Gamma chi=trivial pi=gamma
/// rel r_w = t_w^5 * [t_w, gamma]
/// tie Y_1 = 3 * Y_2
/// ```
///
/// Header keys may repeat across lines; `#` starts a comment; generators
/// may be declared after the relations that use them. Relation words are
/// written in generator names; `pi=` words are written in the Gamma
/// coordinate names `gamma`, `gamma_2`, ... regardless of what the Gamma
/// generators themselves are called.
pub fn parse_presentation(text: &str) -> Result<Presentation, PresentationError> {
    let mut p: Option<u64> = None;
    let mut prec: u32 = 3;
    let mut deg: usize = 8;
    let mut chi1: Option<i64> = None;
    let mut chi2: Option<i64> = None;
    let mut gens: Vec<RawGen> = Vec::new();
    let mut rels: Vec<RawRel> = Vec::new();
    let mut ties: Vec<Tie> = Vec::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let toks = split_cols(line);
        if toks.is_empty() {
            continue;
        }
        match toks[0].0 {
            "p" | "prec" | "deg" | "chi1" | "chi2" => {
                // header line: alternating key/value tokens
                let mut i = 0;
                while i < toks.len() {
                    let (key, kcol) = toks[i];
                    let (value, vcol) = *toks
                        .get(i + 1)
                        .ok_or_else(|| err(lineno, kcol, format!("missing value for `{key}`")))?;
                    match key {
                        "p" => {
                            p = Some(value.parse().map_err(|_| {
                                err(lineno, vcol, format!("invalid prime `{value}`"))
                            })?)
                        }
                        "prec" => {
                            prec = value.parse().map_err(|_| {
                                err(lineno, vcol, format!("invalid precision `{value}`"))
                            })?
                        }
                        "deg" => {
                            deg = value.parse().map_err(|_| {
                                err(lineno, vcol, format!("invalid degree cap `{value}`"))
                            })?
                        }
                        "chi1" => chi1 = Some(parse_chi_expr(value, lineno, vcol, None)?),
                        "chi2" => chi2 = Some(parse_chi_expr(value, lineno, vcol, None)?),
                        other => {
                            return Err(err(lineno, kcol, format!("unknown header key `{other}`")))
                        }
                    }
                    i += 2;
                }
            }
            "gen" => {
                let (name, _) = *toks
                    .get(1)
                    .ok_or_else(|| err(lineno, toks[0].1, "missing generator name"))?;
                let mut block = None;
                let mut chi = None;
                let mut pinned = false;
                let mut commutes = false;
                let mut pi = FreeWord::empty();
                for &(tok, col) in &toks[2..] {
                    if let Some(v) = tok.strip_prefix("block=") {
                        block = Some(match v {
                            "Xinf" => Block::Xinf,
                            "Gamma" => Block::Gamma,
                            other => {
                                return Err(err(
                                    lineno,
                                    col,
                                    format!("unknown block `{other}` (expected Xinf or Gamma)"),
                                ))
                            }
                        });
                    } else if let Some(v) = tok.strip_prefix("chi=") {
                        let diag = match (chi1, chi2) {
                            (Some(a), Some(b)) => Some((a, b)),
                            _ => {
                                return Err(err(
                                    lineno,
                                    col,
                                    "chi1 and chi2 must be declared before generators",
                                ))
                            }
                        };
                        chi = Some(parse_chi_expr(v, lineno, col + 4, diag)?);
                    } else if let Some(v) = tok.strip_prefix("pi=") {
                        pi = parse_word(v, lineno, col + 3, &resolve_gamma, "Gamma coordinate")?;
                    } else if tok == "pinned" {
                        pinned = true;
                    } else if tok == "commutes_pinned" {
                        commutes = true;
                    } else {
                        return Err(err(
                            lineno,
                            col,
                            format!("unknown generator attribute `{tok}`"),
                        ));
                    }
                }
                let block = block.ok_or_else(|| {
                    err(
                        lineno,
                        toks[0].1,
                        format!("generator `{name}` missing block="),
                    )
                })?;
                let chi = chi.ok_or_else(|| {
                    err(
                        lineno,
                        toks[0].1,
                        format!("generator `{name}` missing chi="),
                    )
                })?;
                gens.push(RawGen {
                    name: name.to_string(),
                    block,
                    chi_exp: chi,
                    pinned,
                    commutes_pinned: commutes,
                    pi,
                });
            }
            "rel" => {
                let (name, _) = *toks
                    .get(1)
                    .ok_or_else(|| err(lineno, toks[0].1, "missing relation name"))?;
                match toks.get(2) {
                    Some(&("=", _)) => {}
                    _ => return Err(err(lineno, toks[0].1, "expected `=` after relation name")),
                }
                let (_, eq_col) = toks[2];
                let text_start = eq_col; // 1-based col of '='; word starts after it
                let rest: String = line.chars().skip(text_start).collect();
                rels.push(RawRel {
                    name: name.to_string(),
                    text: rest,
                    line: lineno,
                    col: text_start + 1,
                });
            }
            "tie" => {
                // tie Y_a = c * Y_b
                let parse_var = |tok: &str, col: usize| -> Result<usize, PresentationError> {
                    tok.strip_prefix("Y_")
                        .and_then(|v| v.parse::<usize>().ok())
                        .filter(|&v| v >= 1)
                        .map(|v| v - 1)
                        .ok_or_else(|| {
                            err(
                                lineno,
                                col,
                                format!("expected a variable like Y_2, found `{tok}`"),
                            )
                        })
                };
                if toks.len() != 6 || toks[2].0 != "=" || toks[4].0 != "*" {
                    return Err(err(lineno, toks[0].1, "tie syntax is `tie Y_a = c * Y_b`"));
                }
                let lhs = parse_var(toks[1].0, toks[1].1)?;
                let coeff = toks[3].0.parse::<i64>().map_err(|_| {
                    err(
                        lineno,
                        toks[3].1,
                        format!("invalid coefficient `{}`", toks[3].0),
                    )
                })?;
                let rhs = parse_var(toks[5].0, toks[5].1)?;
                ties.push(Tie { lhs, coeff, rhs });
            }
            other => {
                return Err(err(
                    lineno,
                    toks[0].1,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }

    let p = p.ok_or_else(|| err(0, 0, "missing header key `p`"))?;
    let chi1 = chi1.ok_or_else(|| err(0, 0, "missing header key `chi1`"))?;
    let chi2 = chi2.ok_or_else(|| err(0, 0, "missing header key `chi2`"))?;

    let names: Vec<String> = gens.iter().map(|g| g.name.clone()).collect();
    let resolve =
        |name: &str| -> Option<Gen> { names.iter().position(|n| n == name).map(|i| Gen(i as u32)) };
    let mut relations = Vec::with_capacity(rels.len());
    for r in rels {
        let w = parse_word(&r.text, r.line, r.col, &resolve, "generator")?;
        relations.push((r.name, w));
    }

    Presentation::new(p, prec, deg, chi1, chi2, gens, relations, ties)
}

fn render_gen_word(w: &FreeWord, names: &[String]) -> String {
    w.render(|i| names[i as usize].clone())
}

fn render_pi_word(w: &FreeWord, k: usize) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    w.syllables()
        .iter()
        .map(|&(g, e)| {
            let name = if k == 1 && g.0 == 0 {
                "gamma".to_string()
            } else {
                format!("gamma_{}", g.0 + 1)
            };
            if e == 1 {
                name
            } else {
                format!("{name}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Render back to the text format; `parse_presentation` of the output
/// reproduces the presentation exactly (words come out in reduced form).
pub fn render_presentation(pres: &Presentation) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "p {} prec {} deg {}\n",
        pres.p, pres.prec, pres.deg
    ));
    out.push_str(&format!(
        "chi1 omega^{} chi2 omega^{}\n",
        pres.chi1.exp(),
        pres.chi2.exp()
    ));
    let k = pres.counts().k;
    let names: Vec<String> = pres.gens.iter().map(|g| g.name.clone()).collect();
    for g in &pres.gens {
        out.push_str(&format!(
            "gen {} block={:?} chi=omega^{}",
            g.name,
            g.block,
            g.chi.exp()
        ));
        if g.pinned {
            out.push_str(" pinned");
        }
        if g.commutes_pinned {
            out.push_str(" commutes_pinned");
        }
        if !g.pi.is_empty() {
            out.push_str(&format!(" pi={}", render_pi_word(&g.pi, k)));
        }
        out.push('\n');
    }
    for r in &pres.relations {
        out.push_str(&format!(
            "rel {} = {}\n",
            r.name,
            render_gen_word(&r.word, &names)
        ));
    }
    for t in &pres.ties {
        out.push_str(&format!(
            "tie Y_{} = {} * Y_{}\n",
            t.lhs + 1,
            t.coeff,
            t.rhs + 1
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// JSON mirror
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GenJson {
    name: String,
    block: Block,
    chi_omega_exp: u32,
    pinned: bool,
    commutes_pinned: bool,
    pi: String,
    shape: String,
}

#[derive(Serialize, Deserialize)]
struct RelJson {
    name: String,
    word: String,
}

#[derive(Serialize, Deserialize)]
struct TieJson {
    lhs: String,
    coeff: i64,
    rhs: String,
}

#[derive(Serialize, Deserialize)]
struct PresentationJson {
    p: u64,
    prec: u32,
    deg: usize,
    chi1_omega_exp: u32,
    chi2_omega_exp: u32,
    generators: Vec<GenJson>,
    relations: Vec<RelJson>,
    ties: Vec<TieJson>,
    counts: Counts,
    d_prime: usize,
}

/// Serialize every field, including the derived shapes and counts, so the
/// output is self-describing.
pub fn presentation_to_json(pres: &Presentation) -> String {
    let k = pres.counts().k;
    let names: Vec<String> = pres.gens.iter().map(|g| g.name.clone()).collect();
    let doc = PresentationJson {
        p: pres.p,
        prec: pres.prec,
        deg: pres.deg,
        chi1_omega_exp: pres.chi1.exp(),
        chi2_omega_exp: pres.chi2.exp(),
        generators: pres
            .gens
            .iter()
            .map(|g| GenJson {
                name: g.name.clone(),
                block: g.block,
                chi_omega_exp: g.chi.exp(),
                pinned: g.pinned,
                commutes_pinned: g.commutes_pinned,
                pi: render_pi_word(&g.pi, k),
                shape: g.shape.dsl_name().to_string(),
            })
            .collect(),
        relations: pres
            .relations
            .iter()
            .map(|r| RelJson {
                name: r.name.clone(),
                word: render_gen_word(&r.word, &names),
            })
            .collect(),
        ties: pres
            .ties
            .iter()
            .map(|t| TieJson {
                lhs: format!("Y_{}", t.lhs + 1),
                coeff: t.coeff,
                rhs: format!("Y_{}", t.rhs + 1),
            })
            .collect(),
        counts: pres.counts(),
        d_prime: pres.allocate_variables().d_prime(),
    };
    serde_json::to_string_pretty(&doc).expect("presentation serializes")
}

/// Rebuild from the JSON mirror, re-deriving shapes and counts and failing
/// if the document's copies disagree with the derivation.
pub fn presentation_from_json(text: &str) -> Result<Presentation, PresentationError> {
    let doc: PresentationJson =
        serde_json::from_str(text).map_err(|e| PresentationError::Json(e.to_string()))?;
    let gens: Vec<RawGen> = doc
        .generators
        .iter()
        .map(|g| {
            Ok(RawGen {
                name: g.name.clone(),
                block: g.block,
                chi_exp: g.chi_omega_exp as i64,
                pinned: g.pinned,
                commutes_pinned: g.commutes_pinned,
                pi: parse_word(&g.pi, 0, 0, &resolve_gamma, "Gamma coordinate")?,
            })
        })
        .collect::<Result<_, PresentationError>>()?;
    let names: Vec<String> = gens.iter().map(|g| g.name.clone()).collect();
    let resolve =
        |name: &str| -> Option<Gen> { names.iter().position(|n| n == name).map(|i| Gen(i as u32)) };
    let relations = doc
        .relations
        .iter()
        .map(|r| {
            Ok((
                r.name.clone(),
                parse_word(&r.word, 0, 0, &resolve, "generator")?,
            ))
        })
        .collect::<Result<Vec<_>, PresentationError>>()?;
    let parse_var = |s: &str| -> Result<usize, PresentationError> {
        s.strip_prefix("Y_")
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&v| v >= 1)
            .map(|v| v - 1)
            .ok_or_else(|| PresentationError::Json(format!("bad variable reference `{s}`")))
    };
    let ties = doc
        .ties
        .iter()
        .map(|t| {
            Ok(Tie {
                lhs: parse_var(&t.lhs)?,
                coeff: t.coeff,
                rhs: parse_var(&t.rhs)?,
            })
        })
        .collect::<Result<Vec<_>, PresentationError>>()?;
    let pres = Presentation::new(
        doc.p,
        doc.prec,
        doc.deg,
        doc.chi1_omega_exp as i64,
        doc.chi2_omega_exp as i64,
        gens,
        relations,
        ties,
    )?;
    let counts = pres.counts();
    if counts != doc.counts {
        return Err(PresentationError::Json(format!(
            "inconsistent counts: document says {:?}, derived {:?}",
            doc.counts, counts
        )));
    }
    let d_prime = pres.allocate_variables().d_prime();
    if d_prime != doc.d_prime {
        return Err(PresentationError::Json(format!(
            "inconsistent d_prime: document says {}, derived {}",
            doc.d_prime, d_prime
        )));
    }
    for (g, gj) in pres.gens.iter().zip(&doc.generators) {
        if g.shape.dsl_name() != gj.shape {
            return Err(PresentationError::Json(format!(
                "inconsistent shape for `{}`: document says {}, derived {}",
                g.name,
                gj.shape,
                g.shape.dsl_name()
            )));
        }
    }
    Ok(pres)
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceKind {
    Tame,
    /// `n_v` is the tower depth; indices `2..=n_v` get commutator-tail
    /// generator pairs.
    Wild {
        n_v: u32,
    },
}

/// One ramified place of the local-relation builder.
#[derive(Clone, Debug)]
pub struct PlaceSpec {
    pub name: String,
    pub kind: PlaceKind,
    /// Size parameter; must be a power of p.
    pub q: u64,
    /// Exponent of the diagonal generator in the rewritten relation.
    pub q_prime: u64,
    /// The distinguished place contributes the pinned generator and the
    /// diagonal generator; it must be tame with `q = p`.
    pub distinguished: bool,
    /// Character of `t_v` as an omega exponent; defaults to `chi1*chi2^-1`.
    pub chi_t: Option<i64>,
    /// Character of `s'_v` and of tower generators; same default.
    pub chi_s: Option<i64>,
}

/// A free (relation-less) generator for the builders.
#[derive(Clone, Debug)]
pub struct FreeGenSpec {
    pub name: String,
    pub chi_exp: i64,
    pub commutes_pinned: bool,
}

#[derive(Clone, Debug)]
pub struct WingbergConfig {
    pub p: u64,
    pub prec: u32,
    pub deg: usize,
    pub chi1_exp: i64,
    pub chi2_exp: i64,
    pub free: Vec<FreeGenSpec>,
    pub places: Vec<PlaceSpec>,
}

fn is_power_of(mut q: u64, p: u64) -> bool {
    if q == 0 {
        return false;
    }
    while q.is_multiple_of(p) {
        q /= p;
    }
    q == 1
}

/// Build the standard local-relation presentation: a pinned generator
/// `t_w` with relation `t_w^p [t_w, gamma]` at the distinguished place, and
/// per non-distinguished place the rewritten tame relation
/// `t_v^q [t_v, gamma^q' s'_v]`, wild places appending commutator tails
/// `[t_v_i, s_v_i]`.
pub fn build_wingberg(cfg: &WingbergConfig) -> Result<Presentation, PresentationError> {
    let distinguished: Vec<&PlaceSpec> = cfg.places.iter().filter(|pl| pl.distinguished).collect();
    if distinguished.len() != 1 {
        return Err(PresentationError::BadInput(format!(
            "exactly one distinguished place required, found {}",
            distinguished.len()
        )));
    }
    let w = distinguished[0];
    if w.kind != PlaceKind::Tame {
        return Err(PresentationError::BadInput(
            "the distinguished place must be tame".to_string(),
        ));
    }
    if w.q != cfg.p {
        return Err(PresentationError::BadInput(format!(
            "the distinguished place must have q = p, found q = {}",
            w.q
        )));
    }

    let ratio = cfg.chi1_exp - cfg.chi2_exp;
    let mut gens: Vec<RawGen> = Vec::new();
    let mut rel_words: Vec<(String, Vec<(String, i64)>)> = Vec::new();

    for f in &cfg.free {
        gens.push(RawGen {
            name: f.name.clone(),
            block: Block::Xinf,
            chi_exp: f.chi_exp,
            pinned: false,
            commutes_pinned: f.commutes_pinned,
            pi: FreeWord::empty(),
        });
    }

    for pl in &cfg.places {
        if !is_power_of(pl.q, cfg.p) {
            return Err(PresentationError::BadInput(format!(
                "place `{}`: q = {} is not a power of p = {}",
                pl.name, pl.q, cfg.p
            )));
        }
        if pl.distinguished {
            gens.push(RawGen {
                name: format!("t_{}", pl.name),
                block: Block::Xinf,
                chi_exp: ratio,
                pinned: true,
                commutes_pinned: false,
                pi: FreeWord::empty(),
            });
            rel_words.push((
                format!("r_{}", pl.name),
                vec![
                    (format!("t_{}", pl.name), cfg.p as i64),
                    (format!("t_{}", pl.name), 1),
                    ("gamma".to_string(), 1),
                    (format!("t_{}", pl.name), -1),
                    ("gamma".to_string(), -1),
                ],
            ));
            continue;
        }
        let t = format!("t_{}", pl.name);
        let s = format!("s'_{}", pl.name);
        gens.push(RawGen {
            name: s.clone(),
            block: Block::Xinf,
            chi_exp: pl.chi_s.unwrap_or(ratio),
            pinned: false,
            commutes_pinned: false,
            pi: FreeWord::empty(),
        });
        gens.push(RawGen {
            name: t.clone(),
            block: Block::Xinf,
            chi_exp: pl.chi_t.unwrap_or(ratio),
            pinned: false,
            commutes_pinned: false,
            pi: FreeWord::empty(),
        });
        // t^q * [t, gamma^q' s'] = t^q * t * (gamma^q' s') * t^-1 * (gamma^q' s')^-1
        let mut word: Vec<(String, i64)> = vec![
            (t.clone(), pl.q as i64),
            (t.clone(), 1),
            ("gamma".to_string(), pl.q_prime as i64),
            (s.clone(), 1),
            (t.clone(), -1),
            (s.clone(), -1),
            ("gamma".to_string(), -(pl.q_prime as i64)),
        ];
        if let PlaceKind::Wild { n_v } = pl.kind {
            for i in 2..=n_v {
                let ti = format!("t_{}_{}", pl.name, i);
                let si = format!("s_{}_{}", pl.name, i);
                gens.push(RawGen {
                    name: si.clone(),
                    block: Block::Xinf,
                    chi_exp: pl.chi_s.unwrap_or(ratio),
                    pinned: false,
                    commutes_pinned: false,
                    pi: FreeWord::empty(),
                });
                gens.push(RawGen {
                    name: ti.clone(),
                    block: Block::Xinf,
                    chi_exp: pl.chi_t.unwrap_or(ratio),
                    pinned: false,
                    commutes_pinned: false,
                    pi: FreeWord::empty(),
                });
                word.extend([(ti.clone(), 1), (si.clone(), 1), (ti, -1), (si, -1)]);
            }
        }
        rel_words.push((format!("r_{}", pl.name), word));
    }

    gens.push(RawGen {
        name: "gamma".to_string(),
        block: Block::Gamma,
        chi_exp: 0,
        pinned: false,
        commutes_pinned: false,
        pi: FreeWord::gen(Gen(0)),
    });

    let index: BTreeMap<&str, u32> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.as_str(), i as u32))
        .collect();
    let relations = rel_words
        .into_iter()
        .map(|(name, syl)| {
            let word = FreeWord::from_syllables(
                syl.iter()
                    .map(|(n, e)| (Gen(index[n.as_str()]), *e))
                    .collect(),
            );
            (name, word)
        })
        .collect();

    Presentation::new(
        cfg.p,
        cfg.prec,
        cfg.deg,
        cfg.chi1_exp,
        cfg.chi2_exp,
        gens,
        relations,
        Vec::new(),
    )
}

/// Append extra free ramified generators to a presentation: new `Xinf`
/// generators with the given characters and no new relations. Shapes,
/// ordering and variables are re-derived from scratch.
pub fn build_neumann_augmented(
    base: &Presentation,
    new_free: &[FreeGenSpec],
) -> Result<Presentation, PresentationError> {
    let mut gens: Vec<RawGen> = base
        .gens
        .iter()
        .map(|g| RawGen {
            name: g.name.clone(),
            block: g.block,
            chi_exp: g.chi.exp() as i64,
            pinned: g.pinned,
            commutes_pinned: g.commutes_pinned,
            pi: g.pi.clone(),
        })
        .collect();
    for f in new_free {
        gens.push(RawGen {
            name: f.name.clone(),
            block: Block::Xinf,
            chi_exp: f.chi_exp,
            pinned: false,
            commutes_pinned: f.commutes_pinned,
            pi: FreeWord::empty(),
        });
    }
    let relations = base
        .relations
        .iter()
        .map(|r| (r.name.clone(), r.word.clone()))
        .collect();
    Presentation::new(
        base.p,
        base.prec,
        base.deg,
        base.chi1.exp() as i64,
        base.chi2.exp() as i64,
        gens,
        relations,
        base.ties.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chars(p: u64, m1: i64, m2: i64) -> (Character, Character) {
        (Character::omega(m1, p), Character::omega(m2, p))
    }

    #[test]
    fn character_canonicalization_and_parity() {
        let c = Character::omega(-3, 5);
        assert_eq!(c.exp(), 1);
        assert!(c.is_odd());
        assert!(!c.is_trivial());
        assert!(Character::omega(4, 5).is_trivial());
        assert_eq!(Character::omega(3, 5).inv().exp(), 1);
        assert_eq!(Character::omega(3, 5).mul(&Character::omega(2, 5)).exp(), 1);
        assert_eq!(Character::omega(2, 5).to_string(), "omega^2");
        assert_eq!(Character::omega(0, 5).to_string(), "trivial");
    }

    #[test]
    fn classification_table() {
        // p = 5, chi1 = omega^0, chi2 = omega^3, so chi1*chi2^-1 = omega^1
        let (c1, c2) = chars(5, 0, 3);
        let cls =
            |e: i64, comm: bool| classify_image(&Character::omega(e, 5), comm, &c1, &c2).unwrap();
        assert_eq!(cls(1, false), ImageShape::UpperUnipotent);
        assert_eq!(cls(3, false), ImageShape::LowerUnipotent);
        assert_eq!(cls(0, false), ImageShape::Diagonal);
        assert_eq!(cls(2, false), ImageShape::Identity); // even, nontrivial
        assert_eq!(cls(1, true), ImageShape::UpperUnipotent);
        assert_eq!(cls(0, true), ImageShape::Scalar);
        // commutation kills the lower-unipotent direction
        assert_eq!(cls(3, true), ImageShape::Identity);
    }

    #[test]
    fn classification_rejects_degenerate_character_pairs() {
        let (c1, c2) = chars(5, 2, 2);
        assert!(matches!(
            classify_image(&Character::omega(1, 5), false, &c1, &c2),
            Err(PresentationError::NotBorel { .. })
        ));
        // chi1 = -chi2: difference is half the group order
        let (c1, c2) = chars(5, 3, 1);
        assert!(classify_image(&Character::omega(1, 5), false, &c1, &c2).is_err());
    }

    #[test]
    fn odd_characters_off_the_diagonal_ratio_are_invisible() {
        // p = 13, ratio = omega^9; omega^5 is odd but matches neither
        // omega^9 nor omega^3 = its inverse... omega^(-9) = omega^3 (even
        // exponent 3? no: 3 is odd). pick omega^5: 5 != 9, 5 != 3.
        let (c1, c2) = chars(13, 0, 3);
        assert_eq!(
            classify_image(&Character::omega(5, 13), false, &c1, &c2).unwrap(),
            ImageShape::Identity
        );
    }

    fn gamma_raw(name: &str) -> RawGen {
        RawGen {
            name: name.to_string(),
            block: Block::Gamma,
            chi_exp: 0,
            pinned: false,
            commutes_pinned: false,
            pi: FreeWord::gen(Gen(0)),
        }
    }

    fn xinf_raw(name: &str, chi: i64, pinned: bool) -> RawGen {
        RawGen {
            name: name.to_string(),
            block: Block::Xinf,
            chi_exp: chi,
            pinned,
            commutes_pinned: false,
            pi: FreeWord::empty(),
        }
    }

    #[test]
    fn normalization_sorts_blocks_and_reindexes_relations() {
        // declare gamma first and the pinned generator before a scalar one;
        // the relation [x, gamma] must survive the renumbering
        let gens = vec![gamma_raw("gamma"), xinf_raw("t_w", 1, true), {
            let mut g = xinf_raw("z", 0, false);
            g.commutes_pinned = true;
            g
        }];
        let rel = FreeWord::commutator(&FreeWord::gen(Gen(1)), &FreeWord::gen(Gen(0)));
        let pres = Presentation::new(5, 3, 8, 0, 3, gens, vec![("r".into(), rel)], vec![]).unwrap();
        let names: Vec<&str> = pres.gens().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["z", "t_w", "gamma"]);
        assert_eq!(pres.gens()[0].shape, ImageShape::Scalar);
        assert_eq!(pres.gens()[1].shape, ImageShape::UpperUnipotentPinned);
        assert_eq!(pres.gens()[2].shape, ImageShape::Diagonal);
        // t_w is now index 1, gamma index 2
        let expect = FreeWord::commutator(&FreeWord::gen(Gen(1)), &FreeWord::gen(Gen(2)));
        assert_eq!(pres.relations()[0].word, expect);
        assert!(pres.validate().is_empty());
    }

    #[test]
    fn counts_and_allocation_follow_the_block_order() {
        // one scalar, one upper, pinned, gamma: d' = 4 with the diagonal
        // pair last
        let mut scalar = xinf_raw("a", 0, false);
        scalar.commutes_pinned = true;
        let mut upper = xinf_raw("b", 1, false);
        upper.commutes_pinned = true;
        let gens = vec![scalar, upper, xinf_raw("t_w", 1, true), gamma_raw("gamma")];
        let pres = Presentation::new(5, 3, 8, 0, 3, gens, vec![], vec![]).unwrap();
        let c = pres.counts();
        assert_eq!((c.d, c.n, c.k), (4, 3, 1));
        assert_eq!((c.u_xinf, c.v_xinf), (1, 2));
        assert_eq!((c.u_gamma, c.v_gamma, c.w_gamma), (1, 1, 1));
        let table = pres.allocate_variables();
        assert_eq!(table.d_prime(), 4);
        assert_eq!(table.diag_pair, Some((2, 3)));
        let names: Vec<&str> = table.vars.iter().map(|v| v.source.as_str()).collect();
        assert_eq!(names, ["a", "b", "gamma", "gamma"]);
        assert_eq!(table.vars[0].role, VarRole::Scalar);
        assert_eq!(table.vars[1].role, VarRole::Upper);
        assert_eq!(table.vars[2].role, VarRole::DiagTop);
        assert_eq!(table.vars[3].role, VarRole::DiagBottom);
        let rows = pres.xinf_rows(&table);
        assert_eq!(
            rows,
            vec![
                RowKind::Scalar { var: 0 },
                RowKind::Upper { var: 1 },
                RowKind::Pinned
            ]
        );
    }

    #[test]
    fn lower_unipotent_variables_come_after_the_diagonal_pair() {
        let gens = vec![
            xinf_raw("x_11", 3, false),
            xinf_raw("t_w", 1, true),
            gamma_raw("gamma"),
        ];
        let pres = Presentation::new(5, 3, 8, 0, 3, gens, vec![], vec![]).unwrap();
        let table = pres.allocate_variables();
        assert_eq!(table.d_prime(), 3);
        assert_eq!(table.diag_pair, Some((0, 1)));
        assert_eq!(table.vars[2].source, "x_11");
        assert_eq!(table.vars[2].role, VarRole::Lower);
    }

    #[test]
    fn validate_flags_pipeline_obstructions() {
        // two diagonal gamma generators
        let gens = vec![xinf_raw("t_w", 1, true), gamma_raw("g1"), {
            let mut g = gamma_raw("g2");
            g.pi = FreeWord::gen(Gen(1));
            g
        }];
        let pres = Presentation::new(5, 3, 8, 0, 3, gens, vec![], vec![]).unwrap();
        let report = pres.validate();
        assert!(report.iter().any(|v| v.contains("diagonal Gamma")));

        // no pinned generator
        let pres =
            Presentation::new(5, 3, 8, 0, 3, vec![gamma_raw("gamma")], vec![], vec![]).unwrap();
        assert!(pres
            .validate()
            .iter()
            .any(|v| v.contains("no pinned generator")));

        // pinned generator with the wrong character
        let pres = Presentation::new(
            5,
            3,
            8,
            0,
            3,
            vec![xinf_raw("t_w", 2, true), gamma_raw("gamma")],
            vec![],
            vec![],
        )
        .unwrap();
        assert!(pres
            .validate()
            .iter()
            .any(|v| v.contains("must carry the character")));

        // relation with nontrivial gamma-image
        let gens = vec![xinf_raw("t_w", 1, true), gamma_raw("gamma")];
        let rel = FreeWord::gen(Gen(1)); // gamma itself
        let pres =
            Presentation::new(5, 3, 8, 0, 3, gens, vec![("r_bad".into(), rel)], vec![]).unwrap();
        assert!(pres
            .validate()
            .iter()
            .any(|v| v.contains("nontrivial gamma-image")));

        // tie out of range
        let gens = vec![xinf_raw("t_w", 1, true), gamma_raw("gamma")];
        let pres = Presentation::new(
            5,
            3,
            8,
            0,
            3,
            gens,
            vec![],
            vec![Tie {
                lhs: 7,
                coeff: 2,
                rhs: 0,
            }],
        )
        .unwrap();
        assert!(pres
            .validate()
            .iter()
            .any(|v| v.contains("only 2 variable")));
    }

    #[test]
    fn minimal_file_parses_with_defaults() {
        let text = "p 5 chi1 omega^0 chi2 omega^3\ngen t_w block=Xinf chi=chi1*chi2^-1 pinned\ngen gamma block=Gamma chi=trivial pi=gamma\n";
        let pres = parse_presentation(text).unwrap();
        assert_eq!(pres.p(), 5);
        assert_eq!(pres.prec(), 3);
        assert_eq!(pres.deg(), 8);
        assert!(pres.relations().is_empty());
        assert_eq!(pres.gens()[0].chi.exp(), 1); // chi1*chi2^-1 = omega^-3 = omega^1
        assert!(pres.validate().is_empty());
    }

    #[test]
    fn parser_reports_locations() {
        let text =
            "p 5 chi1 omega^0 chi2 omega^3\ngen a block=Xinf chi=omega^1\nrel r = a * missing\n";
        let e = parse_presentation(text).unwrap_err();
        match e {
            PresentationError::Parse { line, col, msg } => {
                assert_eq!(line, 3);
                assert_eq!(col, 13);
                assert!(msg.contains("undeclared generator `missing`"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let bad_attr = "p 5 chi1 omega^0 chi2 omega^3\ngen a block=Xinf chi=omega^1 shiny\n";
        let e = parse_presentation(bad_attr).unwrap_err();
        assert!(e
            .to_string()
            .contains("unknown generator attribute `shiny`"));
        assert!(e.to_string().starts_with("line 2"));

        let bad_tie = "p 5 chi1 omega^0 chi2 omega^3\ntie Y_1 = Y_2\n";
        assert!(parse_presentation(bad_tie)
            .unwrap_err()
            .to_string()
            .contains("tie syntax"));

        // pi words live in the Gamma coordinate alphabet, not generator names
        let bad_pi = "p 5 chi1 omega^0 chi2 omega^3\n\
                      gen a block=Xinf chi=omega^1 pinned\n\
                      gen g block=Gamma chi=trivial pi=g\n";
        assert!(parse_presentation(bad_pi)
            .unwrap_err()
            .to_string()
            .contains("undeclared Gamma coordinate `g`"));
        let good_pi = "p 5 chi1 omega^0 chi2 omega^3\n\
                       gen a block=Xinf chi=omega^1 pinned\n\
                       gen g block=Gamma chi=trivial pi=gamma\n";
        let pres = parse_presentation(good_pi).unwrap();
        assert_eq!(pres.gens().last().unwrap().pi, FreeWord::gen(Gen(0)));
    }

    #[test]
    fn word_syntax_covers_commutators_parens_and_powers() {
        let text = "p 5 chi1 omega^0 chi2 omega^3\n\
                    gen s'_v block=Xinf chi=omega^1\n\
                    gen t_v block=Xinf chi=omega^1\n\
                    gen t_w block=Xinf chi=omega^1 pinned\n\
                    gen gamma block=Gamma chi=trivial pi=gamma\n\
                    rel r = t_v^25 * [t_v, gamma^5 * s'_v] # tame shape\n\
                    rel r2 = (t_v * s'_v)^-1 * 1 * t_v\n";
        let pres = parse_presentation(text).unwrap();
        let t_v = pres.gen_index("t_v").unwrap();
        let s_v = pres.gen_index("s'_v").unwrap();
        let gamma = pres.gen_index("gamma").unwrap();
        let gs = FreeWord::gen_pow(gamma, 5).mul(&FreeWord::gen(s_v));
        let expect =
            FreeWord::gen_pow(t_v, 25).mul(&FreeWord::commutator(&FreeWord::gen(t_v), &gs));
        assert_eq!(pres.relations()[0].word, expect);
        let expect2 = FreeWord::gen(s_v).inv();
        assert_eq!(pres.relations()[1].word, expect2);
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "p 5 chi1 omega^0 chi2 omega^3\ngen a block=Xinf chi=omega^1\ngen a block=Xinf chi=omega^1\n";
        assert!(matches!(
            parse_presentation(text),
            Err(PresentationError::DuplicateGen(_))
        ));
    }

    fn tame_config() -> WingbergConfig {
        WingbergConfig {
            p: 5,
            prec: 3,
            deg: 8,
            chi1_exp: 0,
            chi2_exp: 3,
            free: vec![],
            places: vec![
                PlaceSpec {
                    name: "w".into(),
                    kind: PlaceKind::Tame,
                    q: 5,
                    q_prime: 1,
                    distinguished: true,
                    chi_t: None,
                    chi_s: None,
                },
                PlaceSpec {
                    name: "v1".into(),
                    kind: PlaceKind::Tame,
                    q: 25,
                    q_prime: 5,
                    distinguished: false,
                    chi_t: None,
                    chi_s: None,
                },
            ],
        }
    }

    #[test]
    fn wingberg_tame_presentation() {
        let pres = build_wingberg(&tame_config()).unwrap();
        assert!(pres.validate().is_empty());
        let names: Vec<&str> = pres.gens().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["s'_v1", "t_v1", "t_w", "gamma"]);
        let c = pres.counts();
        assert_eq!((c.n, c.k, c.u_xinf, c.v_xinf), (3, 1, 0, 2));
        assert_eq!(pres.allocate_variables().d_prime(), 4);

        // relation words: r_w = t_w^5 [t_w, gamma], r_v1 = t_v1^25 [t_v1, gamma^5 s'_v1]
        let t_w = pres.gen_index("t_w").unwrap();
        let gamma = pres.gen_index("gamma").unwrap();
        let t_v = pres.gen_index("t_v1").unwrap();
        let s_v = pres.gen_index("s'_v1").unwrap();
        assert_eq!(pres.relations()[0].name, "r_w");
        assert_eq!(
            pres.relations()[0].word,
            FreeWord::gen_pow(t_w, 5).mul(&FreeWord::commutator(
                &FreeWord::gen(t_w),
                &FreeWord::gen(gamma)
            ))
        );
        assert_eq!(pres.relations()[1].name, "r_v1");
        let gs = FreeWord::gen_pow(gamma, 5).mul(&FreeWord::gen(s_v));
        assert_eq!(
            pres.relations()[1].word,
            FreeWord::gen_pow(t_v, 25).mul(&FreeWord::commutator(&FreeWord::gen(t_v), &gs))
        );
    }

    #[test]
    fn wingberg_wild_tower() {
        let mut cfg = tame_config();
        cfg.places[1] = PlaceSpec {
            name: "v1".into(),
            kind: PlaceKind::Wild { n_v: 2 },
            q: 5,
            q_prime: 1,
            distinguished: false,
            chi_t: None,
            chi_s: None,
        };
        let pres = build_wingberg(&cfg).unwrap();
        let names: Vec<&str> = pres.gens().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["s'_v1", "t_v1", "s_v1_2", "t_v1_2", "t_w", "gamma"]);
        assert_eq!(pres.allocate_variables().d_prime(), 6);
        // tail commutator sits at the end of the relation word
        let r = &pres.relations()[1].word;
        let ti = pres.gen_index("t_v1_2").unwrap();
        let si = pres.gen_index("s_v1_2").unwrap();
        let tail = FreeWord::commutator(&FreeWord::gen(ti), &FreeWord::gen(si));
        let gamma = pres.gen_index("gamma").unwrap();
        let t_v = pres.gen_index("t_v1").unwrap();
        let s_v = pres.gen_index("s'_v1").unwrap();
        let gs = FreeWord::gen(gamma).mul(&FreeWord::gen(s_v));
        let head = FreeWord::gen_pow(t_v, 5).mul(&FreeWord::commutator(&FreeWord::gen(t_v), &gs));
        assert_eq!(*r, head.mul(&tail));
        assert!(pres.validate().is_empty());
    }

    #[test]
    fn wingberg_input_errors() {
        let mut cfg = tame_config();
        cfg.places[1].q = 10;
        assert!(build_wingberg(&cfg)
            .unwrap_err()
            .to_string()
            .contains("not a power of p"));

        let mut cfg = tame_config();
        cfg.places[0].distinguished = false;
        assert!(build_wingberg(&cfg)
            .unwrap_err()
            .to_string()
            .contains("exactly one distinguished place"));

        let mut cfg = tame_config();
        cfg.places[0].q = 25;
        assert!(build_wingberg(&cfg)
            .unwrap_err()
            .to_string()
            .contains("q = p"));
    }

    #[test]
    fn neumann_augmentation() {
        let base = build_wingberg(&tame_config()).unwrap();
        assert_eq!(build_neumann_augmented(&base, &[]).unwrap(), base);
        let aug = build_neumann_augmented(
            &base,
            &[
                FreeGenSpec {
                    name: "t_q1".into(),
                    chi_exp: 1,
                    commutes_pinned: false,
                },
                FreeGenSpec {
                    name: "t_q2".into(),
                    chi_exp: 3,
                    commutes_pinned: true,
                },
            ],
        )
        .unwrap();
        // t_q1 carries chi1*chi2^-1 and picks up a variable; t_q2 commutes
        // with the pinned generator off the allowed characters and is
        // invisible
        let g1 = &aug.gens()[aug.gen_index("t_q1").unwrap().0 as usize];
        assert_eq!(g1.shape, ImageShape::UpperUnipotent);
        let g2 = &aug.gens()[aug.gen_index("t_q2").unwrap().0 as usize];
        assert_eq!(g2.shape, ImageShape::Identity);
        assert_eq!(
            aug.allocate_variables().d_prime(),
            base.allocate_variables().d_prime() + 1
        );
        assert_eq!(aug.relations().len(), base.relations().len());
    }

    #[test]
    fn render_parse_round_trip_on_fixture() {
        let pres = build_wingberg(&tame_config()).unwrap();
        let text = render_presentation(&pres);
        let back = parse_presentation(&text).unwrap();
        assert_eq!(back, pres);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let pres = build_wingberg(&tame_config()).unwrap();
        let json = presentation_to_json(&pres);
        let back = presentation_from_json(&json).unwrap();
        assert_eq!(back, pres);
        assert_eq!(presentation_to_json(&back), json);
    }

    #[test]
    fn json_detects_doctored_counts() {
        let pres = build_wingberg(&tame_config()).unwrap();
        let json = presentation_to_json(&pres);
        let doctored = json.replace("\"d_prime\": 4", "\"d_prime\": 5");
        assert_ne!(json, doctored);
        assert!(presentation_from_json(&doctored)
            .unwrap_err()
            .to_string()
            .contains("inconsistent d_prime"));
    }

    prop_compose! {
        fn arb_presentation()(
            seed in 0usize..4,
            xinfs in proptest::collection::vec((0i64..12, any::<bool>()), 0..4),
            has_pinned in any::<bool>(),
            gamma_exp in 1i64..3,
            rel_syls in proptest::collection::vec(
                proptest::collection::vec((0u32..6, -3i64..=3), 0..5), 0..3),
            ties in proptest::collection::vec((0usize..5, -3i64..4, 0usize..5), 0..2),
        ) -> Presentation {
            let pools = [(5u64, 0i64, 3i64), (7, 0, 1), (7, 2, 4), (13, 1, 4)];
            let (p, m1, m2) = pools[seed];
            let mut gens = Vec::new();
            for (i, (chi, comm)) in xinfs.iter().enumerate() {
                gens.push(RawGen {
                    name: format!("a{i}"),
                    block: Block::Xinf,
                    chi_exp: *chi,
                    pinned: false,
                    commutes_pinned: *comm,
                    pi: FreeWord::empty(),
                });
            }
            if has_pinned {
                gens.push(RawGen {
                    name: "t_w".into(),
                    block: Block::Xinf,
                    chi_exp: m1 - m2,
                    pinned: true,
                    commutes_pinned: false,
                    pi: FreeWord::empty(),
                });
            }
            gens.push(RawGen {
                name: "g1".into(),
                block: Block::Gamma,
                chi_exp: 0,
                pinned: false,
                commutes_pinned: false,
                pi: FreeWord::gen_pow(Gen(0), gamma_exp),
            });
            let num = gens.len() as u32;
            let relations = rel_syls.into_iter().enumerate().map(|(i, syl)| {
                let w = FreeWord::from_syllables(
                    syl.into_iter().map(|(g, e)| (Gen(g % num), e)).collect());
                (format!("r{i}"), w)
            }).collect();
            let ties = ties.into_iter()
                .map(|(l, c, r)| Tie { lhs: l, coeff: c, rhs: r })
                .collect();
            Presentation::new(p, 3, 6, m1, m2, gens, relations, ties).unwrap()
        }
    }

    proptest! {
        #[test]
        fn random_round_trips(pres in arb_presentation()) {
            let text = render_presentation(&pres);
            let back = parse_presentation(&text).unwrap();
            prop_assert_eq!(&back, &pres);
            let json = presentation_to_json(&pres);
            let jback = presentation_from_json(&json).unwrap();
            prop_assert_eq!(&jback, &pres);
            prop_assert_eq!(presentation_to_json(&jback), json);
        }

        #[test]
        fn d_prime_is_the_sum_of_shape_variable_counts(pres in arb_presentation()) {
            let table = pres.allocate_variables();
            let sum: usize = pres.gens().iter().map(|g| g.shape.var_count()).sum();
            prop_assert_eq!(table.d_prime(), sum);
            // injectivity: every variable index appears exactly once
            let mut seen = vec![false; table.d_prime()];
            for vars in &table.by_gen {
                for &v in vars {
                    prop_assert!(!seen[v]);
                    seen[v] = true;
                }
            }
            prop_assert!(seen.into_iter().all(|b| b));
        }
    }
}
