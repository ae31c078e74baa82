//! Exact polynomial algebra over the rationals and the Lagrange basis
//! vectors used by the Gaussian process construction.
//!
//! Everything in this module works in the dimensionless step variable
//! `u = omega / h`, so grid points sit at integer offsets relative to the
//! current time and all derived coefficients are independent of the step
//! size. Powers of `h` (and the noise scale) attached to the augmented
//! basis element are tracked symbolically via [`BasisSet::alpha_exponent`];
//! no rounding ever happens here.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number: arbitrary-precision, always reduced, positive
/// denominator. Higher-order scheme constants overflow 64-bit intermediates,
/// hence the big-integer backing.
pub type Rational = num_rational::BigRational;

/// Shorthand constructor for small rationals.
///
/// Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Univariate polynomial with exact rational coefficients.
///
/// `coeffs[k]` is the coefficient of `u^k`. Trailing zeros are trimmed;
/// the zero polynomial has an empty coefficient list.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c * u^k`
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Polynomial::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `u^k` (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// Horner evaluation at an exact rational point.
    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_i64(&self, x: i64) -> Rational {
        self.eval(&rat(x, 1))
    }

    pub fn scale(&self, factor: &Rational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rational::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / rat(k as i64 + 1, 1));
        }
        Polynomial::new(coeffs)
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat(k as i64, 1))
            .collect();
        Polynomial::new(coeffs)
    }

    /// Exact definite integral over `u` in `[0, 1]`.
    pub fn integral_01(&self) -> Rational {
        self.antiderivative().eval(&Rational::one())
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{a}*")?;
                    }
                    if k == 1 {
                        write!(f, "u")?;
                    } else {
                        write!(f, "u^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Scheme family. For `Am`, step counts everywhere in this crate refer to
/// the total number of derivative values in the window, including the
/// implicit one at the next grid point (so `steps = 4` is the familiar
/// four-value AM4 rule).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Ab,
    Am,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Ab => write!(f, "AB"),
            Family::Am => write!(f, "AM"),
        }
    }
}

/// Largest supported AB step count.
pub const AB_MAX_STEPS: usize = 6;
/// Largest supported AM total step count (one more than AB, so each AB
/// order has its companion one-order-higher AM rule).
pub const AM_MAX_STEPS: usize = 7;

/// The vectors of basis polynomials that define the joint prior, in the
/// normalized variable `u`.
///
/// `phi` is the derivative-level vector and `phi_integral` its elementwise
/// antiderivative (first component fixed to the constant 1). When
/// `augmented` is set, the last component of each vector is the extra
/// degree-raising element; its symbolic scale factor (noise scale times
/// `h^alpha_exponent`) is carried as a unit coefficient here and reattached
/// by consumers.
#[derive(Clone, Debug)]
pub struct BasisSet {
    pub family: Family,
    pub steps: usize,
    pub augmented: bool,
    pub phi: Vec<Polynomial>,
    pub phi_integral: Vec<Polynomial>,
    /// Power of `h` carried by the augmented element (equals `steps` for
    /// both families under the AM total-step convention).
    pub alpha_exponent: u32,
    /// Grid offsets of the derivative window, newest first.
    offsets: Vec<i64>,
}

impl BasisSet {
    /// Grid offsets (in units of `h`, relative to the current time) of the
    /// derivative values the scheme consumes, newest first. AB: `0, -1, ...`;
    /// AM: `1, 0, -1, ...`.
    pub fn grid_offsets(&self) -> &[i64] {
        &self.offsets
    }
}

/// Lagrange basis polynomial for the node `root` over the given grid
/// `nodes`: the unique polynomial of degree `nodes.len() - 1` equal to 1 at
/// `u = root` and 0 at every other node.
pub fn lagrange_basis(root: i64, nodes: &[i64]) -> Result<Polynomial> {
    if !nodes.contains(&root) {
        return Err(Error::invalid(format!(
            "root {root} is not among the interpolation nodes {nodes:?}"
        )));
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[i + 1..].contains(a) {
            return Err(Error::invalid(format!("duplicate node {a} in {nodes:?}")));
        }
    }
    let mut poly = Polynomial::one();
    let mut denom = Rational::one();
    for &k in nodes {
        if k == root {
            continue;
        }
        // factor (u - k)
        poly = &poly * &Polynomial::new(vec![rat(-k, 1), Rational::one()]);
        denom *= rat(root - k, 1);
    }
    Ok(poly.scale(&denom.recip()))
}

/// Exact definite integral of `p` over `u` in `[0, 1]`; in normalized units
/// this is the map from a Lagrange basis element to its scheme coefficient.
pub fn integrate_01(p: &Polynomial) -> Rational {
    p.integral_01()
}

/// Build the basis vectors for the requested scheme.
///
/// For AB the window nodes are `0, -1, ..., -(steps-1)`; for AM they are
/// `1, 0, ..., -(steps-2)`. The augmented variant appends the basis element
/// of one extra node past the newest (offset `+1` for AB, `+2` for AM),
/// which vanishes on the whole window and raises the spanned degree by one.
pub fn build_basis(family: Family, steps: usize, augmented: bool) -> Result<BasisSet> {
    let max = match family {
        Family::Ab => AB_MAX_STEPS,
        Family::Am => AM_MAX_STEPS,
    };
    if steps == 0 || steps > max {
        return Err(Error::invalid(format!(
            "{family} supports 1..={max} steps, got {steps}"
        )));
    }
    let newest: i64 = match family {
        Family::Ab => 0,
        Family::Am => 1,
    };
    let offsets: Vec<i64> = (0..steps as i64).map(|j| newest - j).collect();

    let mut phi = vec![Polynomial::zero()];
    for &node in &offsets {
        phi.push(lagrange_basis(node, &offsets)?);
    }
    if augmented {
        let extra = newest + 1;
        let mut extended = Vec::with_capacity(offsets.len() + 1);
        extended.push(extra);
        extended.extend_from_slice(&offsets);
        phi.push(lagrange_basis(extra, &extended)?);
    }

    let mut phi_integral = vec![Polynomial::one()];
    phi_integral.extend(phi.iter().skip(1).map(Polynomial::antiderivative));

    Ok(BasisSet {
        family,
        steps,
        augmented,
        phi,
        phi_integral,
        alpha_exponent: steps as u32,
        offsets,
    })
}
