//! Joint Gaussian prior assembly and exact conditioning.
//!
//! The prior covariance over `(y_{i+1}, y_i, f-window)` is built from inner
//! products of the basis vectors of [`crate::polybasis`] evaluated at grid
//! offsets. The noise scale of the augmented basis element stays symbolic
//! through the whole derivation, so matrix entries are polynomials in that
//! scale with exact rational coefficients and the conditioning below is a
//! machine-checked version of the closed-form derivation: the conditional
//! mean lands on the classical multistep predictor and the conditional
//! standard deviation on its local truncation error.

use std::fmt::Write as _;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::coeffs;
use crate::error::{Error, Result};
use crate::polybasis::{build_basis, BasisSet, Family, Polynomial, Rational};

/// Covariance matrix of the joint prior. Row/column order is
/// `y_{i+1}, y_i`, then the derivative window newest first (for AM the
/// implicit next value leads the window). Each entry is a polynomial in the
/// symbolic noise scale `eps = alpha * h^alpha_exponent`.
#[derive(Clone, Debug)]
pub struct PriorMatrix {
    pub family: Family,
    pub steps: usize,
    pub augmented: bool,
    pub alpha_exponent: u32,
    entries: Vec<Vec<Polynomial>>,
}

impl PriorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> &Polynomial {
        &self.entries[row][col]
    }

    /// Numeric evaluation of every entry at a concrete noise scale.
    pub fn eval_f64(&self, eps: f64) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| eval_poly_f64(p, eps)).collect())
            .collect()
    }
}

fn eval_poly_f64(p: &Polynomial, x: f64) -> f64 {
    let mut acc = 0.0;
    for c in p.coeffs().iter().rev() {
        acc = acc * x + c.to_f64().unwrap();
    }
    acc
}

/// Evaluate a basis vector at a grid offset. Each component becomes a
/// rational value times a power of the symbolic scale: power one on the
/// augmented component, zero elsewhere.
fn eval_vector(components: &[Polynomial], offset: i64, augmented: bool) -> Vec<(Rational, usize)> {
    let last = components.len() - 1;
    components
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let power = usize::from(augmented && idx == last);
            (p.eval_i64(offset), power)
        })
        .collect()
}

/// Assemble the prior covariance from a basis: integral-level vectors at
/// offsets `+1` and `0` for the two state rows, derivative-level vectors at
/// the window offsets for the rest.
pub fn build_prior(basis: &BasisSet) -> PriorMatrix {
    let mut vectors = Vec::with_capacity(basis.grid_offsets().len() + 2);
    vectors.push(eval_vector(&basis.phi_integral, 1, basis.augmented));
    vectors.push(eval_vector(&basis.phi_integral, 0, basis.augmented));
    for &offset in basis.grid_offsets() {
        vectors.push(eval_vector(&basis.phi, offset, basis.augmented));
    }

    let n = vectors.len();
    let mut entries = vec![vec![Polynomial::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut entry = Polynomial::zero();
            for ((a, pa), (b, pb)) in vectors[i].iter().zip(&vectors[j]) {
                let term = Polynomial::monomial(a * b, pa + pb);
                entry = &entry + &term;
            }
            entries[i][j] = entry.clone();
            entries[j][i] = entry;
        }
    }

    PriorMatrix {
        family: basis.family,
        steps: basis.steps,
        augmented: basis.augmented,
        alpha_exponent: basis.alpha_exponent,
        entries,
    }
}

/// The conditional distribution of the next state given the current state
/// and the derivative window, reduced to runtime constants.
///
/// The full standard deviation is `|alpha| * h^(alpha_exponent + 1) *
/// sd_constant`; the mean is `y_weight * y_i + h * sum_j f_weights[j] *
/// f_window[j]` with the window ordered newest first (AM: implicit value first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalLaw {
    pub family: Family,
    pub steps: usize,
    pub augmented: bool,
    pub y_weight: Rational,
    pub f_weights: Vec<Rational>,
    pub sd_constant: Rational,
    pub alpha_exponent: u32,
}

impl ConditionalLaw {
    pub fn f_weights_f64(&self) -> Vec<f64> {
        self.f_weights.iter().map(|w| w.to_f64().unwrap()).collect()
    }

    pub fn sd_constant_f64(&self) -> f64 {
        self.sd_constant.to_f64().unwrap()
    }
}

fn as_constant(p: &Polynomial) -> Option<Rational> {
    match p.degree() {
        None => Some(Rational::zero()),
        Some(0) => Some(p.coeff(0)),
        Some(_) => None,
    }
}

fn sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let num_root = r.numer().sqrt();
    let den_root = r.denom().sqrt();
    if &(&num_root * &num_root) == r.numer() && &(&den_root * &den_root) == r.denom() {
        Some(Rational::new(num_root, den_root))
    } else {
        None
    }
}

/// Exact Gaussian conditioning of the first variable on all the others.
///
/// Runs Gauss-Jordan elimination over the symbolic entries, pivoting only on
/// scale-free (degree zero) entries by largest magnitude. For the bases this
/// crate constructs the lower-right block is the identity, so elimination is
/// exact; a basis that forced a pivot on a symbolic entry would be broken,
/// and reports as a derivation failure rather than a user error.
pub fn condition(prior: &PriorMatrix) -> Result<ConditionalLaw> {
    let n = prior.dim();
    let m = n - 1;
    // Solve sigma22 * w = sigma21 for the weight vector.
    let mut a: Vec<Vec<Polynomial>> = (0..m)
        .map(|r| (0..m).map(|c| prior.entry(r + 1, c + 1).clone()).collect())
        .collect();
    let mut b: Vec<Polynomial> = (0..m).map(|r| prior.entry(r + 1, 0).clone()).collect();

    for col in 0..m {
        let pivot_row = (col..m)
            .filter(|&r| matches!(a[r][col].degree(), Some(0)))
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .coeff(0)
                    .abs()
                    .cmp(&a[r2][col].coeff(0).abs())
            });
        let pivot_row = match pivot_row {
            Some(r) => r,
            None => {
                return if (col..m).any(|r| !a[r][col].is_zero()) {
                    Err(Error::derivation(
                        "conditioning block needs a pivot that depends on the noise scale",
                    ))
                } else {
                    Err(Error::derivation("conditioning block is singular"))
                };
            }
        };
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let inv = a[col][col].coeff(0).recip();
        for c in 0..m {
            a[col][c] = a[col][c].scale(&inv);
        }
        b[col] = b[col].scale(&inv);
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..m {
                a[r][c] = &a[r][c] - &(&factor * &a[col][c]);
            }
            b[r] = &b[r] - &(&factor * &b[col]);
        }
    }

    let weights: Vec<Rational> = b
        .iter()
        .map(|p| {
            as_constant(p).ok_or_else(|| {
                Error::derivation("conditional mean weight depends on the noise scale")
            })
        })
        .collect::<Result<_>>()?;

    let y_weight = weights[0].clone();
    if !y_weight.is_one() {
        return Err(Error::derivation(format!(
            "state weight must be exactly 1, got {y_weight}"
        )));
    }
    let f_weights = weights[1..].to_vec();

    // var = sigma11 - sigma12 . w
    let mut variance = prior.entry(0, 0).clone();
    for (j, w) in weights.iter().enumerate() {
        variance = &variance - &prior.entry(0, j + 1).scale(w);
    }

    let sd_constant = if variance.is_zero() {
        Rational::zero()
    } else {
        if !variance.coeff(0).is_zero()
            || !variance.coeff(1).is_zero()
            || variance.degree() != Some(2)
        {
            return Err(Error::derivation(format!(
                "conditional variance must be a pure square in the noise scale, got {variance}"
            )));
        }
        sqrt_exact(&variance.coeff(2)).ok_or_else(|| {
            Error::derivation("conditional variance is not the square of a rational")
        })?
    };

    if !prior.augmented && !sd_constant.is_zero() {
        return Err(Error::derivation(
            "unaugmented conditioning must collapse to zero variance",
        ));
    }

    Ok(ConditionalLaw {
        family: prior.family,
        steps: prior.steps,
        augmented: prior.augmented,
        y_weight,
        f_weights,
        sd_constant,
        alpha_exponent: prior.alpha_exponent,
    })
}

/// Basis, prior and conditioning in one call.
pub fn derive_law(family: Family, steps: usize, augmented: bool) -> Result<ConditionalLaw> {
    let basis = build_basis(family, steps, augmented)?;
    condition(&build_prior(&basis))
}

/// One certification row: the conditioned law for a scheme against the
/// independently generated classical tables.
#[derive(Clone, Debug)]
pub struct PropositionRow {
    pub family: Family,
    pub steps: usize,
    pub mean_weights: Vec<Rational>,
    pub expected_weights: Vec<Rational>,
    pub mean_ok: bool,
    /// The unaugmented conditioning must collapse to a point mass.
    pub unaugmented_sd: Rational,
    pub variance_ok: bool,
    pub sd_constant: Rational,
    pub expected_sd: Rational,
    pub sd_ok: bool,
}

impl PropositionRow {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.variance_ok && self.sd_ok
    }
}

/// Structured result of the derivation certification.
#[derive(Clone, Debug)]
pub struct PropositionReport {
    pub rows: Vec<PropositionRow>,
}

impl PropositionReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(PropositionRow::passed)
    }

    /// CSV rendering with exact fractions, one row per scheme.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "family,steps,mean_weights,expected_weights,unaugmented_sd,sd_constant,expected_sd,status\n",
        );
        for row in &self.rows {
            let join = |ws: &[Rational]| {
                ws.iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.family,
                row.steps,
                join(&row.mean_weights),
                join(&row.expected_weights),
                row.unaugmented_sd,
                row.sd_constant,
                row.expected_sd,
                if row.passed() { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

/// Executable certification of the two propositions and their implicit-family
/// analogues: for every step count up to `s_max`, condition both the plain
/// and the augmented prior and compare against the classical tables from
/// [`crate::coeffs`]. All comparisons are exact.
pub fn verify_propositions(s_max: usize) -> Result<PropositionReport> {
    if s_max == 0 || s_max > crate::polybasis::AB_MAX_STEPS {
        return Err(Error::invalid(format!(
            "certification supports 1..={}, got {s_max}",
            crate::polybasis::AB_MAX_STEPS
        )));
    }
    let mut rows = Vec::new();
    for s in 1..=s_max {
        for (family, steps) in [(Family::Ab, s), (Family::Am, s + 1)] {
            let expected_weights = match family {
                Family::Ab => coeffs::ab_coefficients(steps)?,
                Family::Am => coeffs::am_coefficients(steps)?,
            };
            let expected_sd = coeffs::truncation_constant(family, steps)?;

            let plain = derive_law(family, steps, false)?;
            let augmented = derive_law(family, steps, true)?;

            let mean_ok = plain.y_weight.is_one()
                && plain.f_weights == expected_weights
                && augmented.f_weights == plain.f_weights
                && augmented.y_weight.is_one();
            let variance_ok = plain.sd_constant.is_zero();
            let sd_ok = augmented.sd_constant == expected_sd;

            rows.push(PropositionRow {
                family,
                steps,
                mean_weights: augmented.f_weights,
                expected_weights,
                mean_ok,
                unaugmented_sd: plain.sd_constant,
                variance_ok,
                sd_constant: augmented.sd_constant,
                expected_sd,
                sd_ok,
            });
        }
    }
    Ok(PropositionReport { rows })
}
