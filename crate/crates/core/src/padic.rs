//! Fixed-precision p-adic integers: exact arithmetic in `Z/p^N`.
//!
//! A [`PadicCtx`] fixes an odd prime `p` and a precision `N >= 1`; a
//! [`PadicInt`] is a canonical residue in `[0, p^N)`. The residue is treated
//! as the exact p-adic integer it represents, so derived quantities (binomial
//! coefficients, Teichmueller lifts) are computed by exact integer arithmetic
//! on the canonical lift and only reduced at the end — no precision is lost
//! inside an operation.
//!
//! Arithmetic between operands of different contexts is a programming error
//! and panics; data-dependent failures (inverting a non-unit, lifting zero)
//! return [`PadicError`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PadicError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("prime {0} too large (must fit in 31 bits)")]
    PrimeTooLarge(u64),
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("p^N overflows the supported range for p = {prime}, N = {precision}")]
    PrecisionOverflow { prime: u64, precision: u32 },
    #[error("residue {residue} is not a unit mod {prime}^{precision}")]
    NonUnit {
        residue: u128,
        prime: u64,
        precision: u32,
    },
    #[error("Teichmueller lift requires a unit residue mod p")]
    TeichmullerOfNonUnit,
}

/// Computation context: odd prime `p`, precision `N`, cached modulus `p^N`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicCtx {
    prime: u64,
    precision: u32,
    modulus: u128,
}

impl fmt::Debug for PadicCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.prime, self.precision)
    }
}

pub(crate) fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PadicCtx {
    /// Context for `Z/p^N`. `p` must be an odd prime and `p^N` must stay
    /// below `2^63` so that products of residues never overflow `u128`.
    pub fn new(prime: u64, precision: u32) -> Result<Self, PadicError> {
        if prime >= 1 << 31 {
            return Err(PadicError::PrimeTooLarge(prime));
        }
        if !is_odd_prime(prime) {
            return Err(PadicError::NotOddPrime(prime));
        }
        if precision == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        let mut modulus: u128 = 1;
        for _ in 0..precision {
            modulus = modulus
                .checked_mul(prime as u128)
                .filter(|m| *m < 1 << 63)
                .ok_or(PadicError::PrecisionOverflow { prime, precision })?;
        }
        Ok(PadicCtx {
            prime,
            precision,
            modulus,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    /// Embed a signed integer, reducing into `[0, p^N)`.
    pub fn elt(&self, n: i128) -> PadicInt {
        let m = self.modulus as i128;
        let r = ((n % m) + m) % m;
        PadicInt {
            ctx: *self,
            residue: r as u128,
        }
    }

    pub fn zero(&self) -> PadicInt {
        self.elt(0)
    }

    pub fn one(&self) -> PadicInt {
        self.elt(1)
    }
}

/// A residue in `[0, p^N)`, the canonical truncation of a p-adic integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicInt {
    ctx: PadicCtx,
    residue: u128,
}

impl fmt::Debug for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (mod {}^{})",
            self.residue, self.ctx.prime, self.ctx.precision
        )
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

fn check_ctx(a: &PadicCtx, b: &PadicCtx) {
    assert_eq!(
        a, b,
        "mixed p-adic contexts: {:?} vs {:?} (prime/precision must agree)",
        a, b
    );
}

impl Add for PadicInt {
    type Output = PadicInt;
    fn add(self, rhs: PadicInt) -> PadicInt {
        check_ctx(&self.ctx, &rhs.ctx);
        let mut r = self.residue + rhs.residue;
        if r >= self.ctx.modulus {
            r -= self.ctx.modulus;
        }
        PadicInt {
            ctx: self.ctx,
            residue: r,
        }
    }
}

impl Sub for PadicInt {
    type Output = PadicInt;
    fn sub(self, rhs: PadicInt) -> PadicInt {
        self + (-rhs)
    }
}

impl Neg for PadicInt {
    type Output = PadicInt;
    fn neg(self) -> PadicInt {
        let r = if self.residue == 0 {
            0
        } else {
            self.ctx.modulus - self.residue
        };
        PadicInt {
            ctx: self.ctx,
            residue: r,
        }
    }
}

impl Mul for PadicInt {
    type Output = PadicInt;
    fn mul(self, rhs: PadicInt) -> PadicInt {
        check_ctx(&self.ctx, &rhs.ctx);
        PadicInt {
            ctx: self.ctx,
            residue: (self.residue * rhs.residue) % self.ctx.modulus,
        }
    }
}

impl PadicInt {
    pub fn ctx(&self) -> PadicCtx {
        self.ctx
    }

    pub fn residue(&self) -> u128 {
        self.residue
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    pub fn is_one(&self) -> bool {
        self.residue == 1
    }

    pub fn is_unit(&self) -> bool {
        !self.residue.is_multiple_of(self.ctx.prime as u128)
    }

    /// Symmetric representative in `(-p^N/2, p^N/2]`, used for rendering.
    pub fn signed_lift(&self) -> i128 {
        let m = self.ctx.modulus;
        if self.residue * 2 > m {
            self.residue as i128 - m as i128
        } else {
            self.residue as i128
        }
    }

    /// `v_p(x)` clamped to the precision: the zero residue reports `N`.
    pub fn valuation(&self) -> u32 {
        if self.residue == 0 {
            return self.ctx.precision;
        }
        let p = self.ctx.prime as u128;
        let mut v = 0;
        let mut r = self.residue;
        while r.is_multiple_of(p) {
            r /= p;
            v += 1;
        }
        v
    }

    /// Multiplicative inverse via extended Euclid; the residue must be a unit.
    pub fn inv(&self) -> Result<PadicInt, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NonUnit {
                residue: self.residue,
                prime: self.ctx.prime,
                precision: self.ctx.precision,
            });
        }
        let m = self.ctx.modulus as i128;
        let (mut r0, mut r1) = (m, self.residue as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.ctx.elt(t0))
    }

    pub fn pow(&self, mut e: u64) -> PadicInt {
        let mut base = *self;
        let mut acc = self.ctx.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Binomial coefficient `C(a, j)` of a p-adic integer `a`.
    ///
    /// The canonical residue is lifted to an ordinary integer and
    /// `a(a-1)...(a-j+1)/j!` is evaluated exactly over big integers before
    /// reduction, so the division by `j!` never destroys p-adic precision.
    pub fn binom(&self, j: u64) -> PadicInt {
        if j == 0 {
            return self.ctx.one();
        }
        let lift = BigInt::from(self.residue);
        let mut num = BigInt::from(1);
        let mut den = BigInt::from(1);
        for t in 0..j {
            num *= &lift - BigInt::from(t);
            den *= BigInt::from(t + 1);
        }
        let q: BigInt = num / den; // exact: j consecutive integers
        let m = BigInt::from(self.ctx.modulus);
        let r = ((q % &m) + &m) % &m;
        let (_, digits) = r.to_u64_digits();
        let mut residue: u128 = 0;
        for d in digits.iter().rev() {
            residue = (residue << 64) | *d as u128;
        }
        PadicInt {
            ctx: self.ctx,
            residue,
        }
    }
}

/// Teichmueller lift of a unit residue mod `p`: the unique `x = a0 (mod p)`
/// in `Z/p^N` with `x^p = x`, computed by iterating `x -> x^p`, which gains
/// one p-adic digit per step.
pub fn teichmuller(ctx: PadicCtx, a0: u64) -> Result<PadicInt, PadicError> {
    if a0.is_multiple_of(ctx.prime) {
        return Err(PadicError::TeichmullerOfNonUnit);
    }
    let mut x = ctx.elt(a0 as i128);
    for _ in 0..ctx.precision {
        x = x.pow(ctx.prime);
    }
    Ok(x)
}
