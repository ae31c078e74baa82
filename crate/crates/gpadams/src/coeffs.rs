//! Classical scheme constants derived by direct Lagrange integration and
//! finite-difference moment conditions.
//!
//! This module is the cross-check side of the derivation: it shares the
//! polynomial primitives with [`crate::polybasis`] but none of the Gaussian
//! conditioning machinery in [`crate::gpcond`], so the two routes to the
//! same tables validate each other.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polybasis::{
    integrate_01, lagrange_basis, rat, Family, Rational, AB_MAX_STEPS, AM_MAX_STEPS,
};

/// Step coefficients for the `s`-step explicit rule, newest window value
/// first. Each entry is the exact integral of the matching Lagrange basis
/// element over one step.
pub fn ab_coefficients(s: usize) -> Result<Vec<Rational>> {
    if s == 0 || s > AB_MAX_STEPS {
        return Err(Error::invalid(format!(
            "AB supports 1..={AB_MAX_STEPS} steps, got {s}"
        )));
    }
    let nodes: Vec<i64> = (0..s as i64).map(|j| -j).collect();
    nodes
        .iter()
        .map(|&j| Ok(integrate_01(&lagrange_basis(j, &nodes)?)))
        .collect()
}

/// Step coefficients for the implicit rule with `total_steps` window values;
/// the first entry is the weight on the next (implicit) derivative value.
pub fn am_coefficients(total_steps: usize) -> Result<Vec<Rational>> {
    if total_steps == 0 || total_steps > AM_MAX_STEPS {
        return Err(Error::invalid(format!(
            "AM supports 1..={AM_MAX_STEPS} total steps, got {total_steps}"
        )));
    }
    let nodes: Vec<i64> = (0..total_steps as i64).map(|j| 1 - j).collect();
    nodes
        .iter()
        .map(|&j| Ok(integrate_01(&lagrange_basis(j, &nodes)?)))
        .collect()
}

/// Magnitude of the local truncation error constant: the scheme's one-step
/// defect is `C * h^(p+1) * y^(p+1)` with `p = steps`.
///
/// Both families reduce to integrating the basis element of one extra node
/// past the newest over the step; for AB that extra-node element is exactly
/// the first entry of the one-order-higher AM table.
pub fn truncation_constant(family: Family, steps: usize) -> Result<Rational> {
    match family {
        Family::Ab => {
            if steps == 0 || steps > AB_MAX_STEPS {
                return Err(Error::invalid(format!(
                    "AB supports 1..={AB_MAX_STEPS} steps, got {steps}"
                )));
            }
            Ok(am_coefficients(steps + 1)?[0].clone())
        }
        Family::Am => {
            if steps == 0 || steps > AM_MAX_STEPS {
                return Err(Error::invalid(format!(
                    "AM supports 1..={AM_MAX_STEPS} total steps, got {steps}"
                )));
            }
            let mut nodes: Vec<i64> = vec![2];
            nodes.extend((0..steps as i64).map(|j| 1 - j));
            let extra = lagrange_basis(2, &nodes)?;
            Ok(num_traits::Signed::abs(&integrate_01(&extra)))
        }
    }
}

/// Backward-difference coefficients `delta_0..delta_s` (newest window value
/// first) such that `h^-s * sum_k delta_k * f_{i-k}` estimates the `s`-th
/// derivative of `f` at the *next* grid point to first order in `h`.
///
/// Derived by solving the Taylor moment system exactly at nodes
/// `0, -1, ..., -s` with expansion point `+1`.
pub fn bd_coefficients(s: usize) -> Result<Vec<Rational>> {
    if s == 0 || s > AB_MAX_STEPS {
        return Err(Error::invalid(format!(
            "backward differences support 1..={AB_MAX_STEPS}, got {s}"
        )));
    }
    // Displacements from the expansion point: node -k sits at -(k+1) steps
    // from +1. Require sum_k delta_k * d_k^m = m! * [m == s] for m = 0..s.
    let n = s + 1;
    let mut matrix = vec![vec![Rational::zero(); n]; n];
    let mut rhs = vec![Rational::zero(); n];
    for m in 0..n {
        for k in 0..n {
            let d = rat(-(k as i64) - 1, 1);
            let mut pow = Rational::one();
            for _ in 0..m {
                pow *= &d;
            }
            matrix[m][k] = pow;
        }
    }
    rhs[s] = rat((1..=s as i64).product(), 1);
    solve_rational_system(matrix, rhs)
        .ok_or_else(|| Error::derivation("moment system is singular"))
}

/// Exact Gaussian elimination with partial pivoting on plain rationals.
fn solve_rational_system(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r1, &r2| {
                num_traits::Signed::abs(&a[r1][col]).cmp(&num_traits::Signed::abs(&a[r2][col]))
            })?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].clone().recip();
        for c in col..n {
            a[col][c] = &a[col][c] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    Some(b)
}

/// Per-scheme constant table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeTable {
    pub family: Family,
    pub steps: usize,
    /// Step coefficients, newest window value first (AM: implicit value first).
    pub betas: Vec<Rational>,
    /// Magnitude of the local truncation error constant.
    pub lte_constant: Rational,
    /// Backward-difference stencil for the derivative-order estimate the
    /// runtime noise scale uses; empty for the one-value AM rule, which has
    /// no explicit companion.
    pub bd_coeffs: Vec<Rational>,
}

impl SchemeTable {
    pub fn new(family: Family, steps: usize) -> Result<Self> {
        let betas = match family {
            Family::Ab => ab_coefficients(steps)?,
            Family::Am => am_coefficients(steps)?,
        };
        let lte_constant = truncation_constant(family, steps)?;
        let bd_coeffs = match family {
            Family::Ab => bd_coefficients(steps)?,
            Family::Am if steps >= 2 => bd_coefficients(steps - 1)?,
            Family::Am => Vec::new(),
        };
        Ok(SchemeTable {
            family,
            steps,
            betas,
            lte_constant,
            bd_coeffs,
        })
    }
}

/// Outcome of the next-order collection check for one step count.
#[derive(Clone, Debug)]
pub struct NextOrderReport {
    pub s: usize,
    /// `beta_s + C_s * delta_s`, padded to length `s + 1`.
    pub combined: Vec<Rational>,
    /// The order-(s+1) table the combination must reproduce.
    pub expected: Vec<Rational>,
    pub passed: bool,
}

/// Verifies that folding the truncation-error estimate into the `s`-step
/// explicit rule reproduces the `(s+1)`-step rule exactly: collecting
/// `beta_{j,s} + C_s * delta_{j,s}` term by term equals `beta_{j,s+1}`.
pub fn ab_next_order_identity(s: usize) -> Result<NextOrderReport> {
    if s == 0 || s >= AB_MAX_STEPS {
        return Err(Error::invalid(format!(
            "next-order identity needs 1..={} steps, got {s}",
            AB_MAX_STEPS - 1
        )));
    }
    let betas = ab_coefficients(s)?;
    let c = truncation_constant(Family::Ab, s)?;
    let deltas = bd_coefficients(s)?;
    let expected = ab_coefficients(s + 1)?;
    let combined: Vec<Rational> = (0..=s)
        .map(|j| {
            let beta = if j < s { betas[j].clone() } else { Rational::zero() };
            beta + &c * &deltas[j]
        })
        .collect();
    let passed = combined == expected;
    Ok(NextOrderReport {
        s,
        combined,
        expected,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rats(xs: &[(i64, i64)]) -> Vec<Rational> {
        xs.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    /// Independent oracle: the unique weights making the quadrature rule
    /// `y_{i+1} - y_i = sum_j w_j f(-j)` exact for all monomial derivatives
    /// up to the rule's design order, found by a brute-force Vandermonde
    /// solve that shares nothing with the Lagrange construction.
    fn exactness_oracle(nodes: &[i64]) -> Vec<Rational> {
        let n = nodes.len();
        let mut a = vec![vec![Rational::zero(); n]; n];
        let mut b = vec![Rational::zero(); n];
        for m in 0..n {
            for (k, &node) in nodes.iter().enumerate() {
                let mut pow = Rational::one();
                for _ in 0..m {
                    pow *= rat(node, 1);
                }
                a[m][k] = pow;
            }
            // integral of u^m over [0, 1]
            b[m] = rat(1, m as i64 + 1);
        }
        solve_rational_system(a, b).unwrap()
    }

    #[test]
    fn ab_tables_match_spec_values() {
        assert_eq!(ab_coefficients(1).unwrap(), rats(&[(1, 1)]));
        assert_eq!(ab_coefficients(3).unwrap(), rats(&[(23, 12), (-4, 3), (5, 12)]));
        assert_eq!(
            ab_coefficients(4).unwrap(),
            rats(&[(55, 24), (-59, 24), (37, 24), (-3, 8)])
        );
        assert_eq!(
            ab_coefficients(5).unwrap(),
            rats(&[
                (1901, 720),
                (-2774, 720),
                (2616, 720),
                (-1274, 720),
                (251, 720)
            ])
        );
    }

    #[test]
    fn ab_tables_match_brute_force_oracle() {
        for s in 1..=AB_MAX_STEPS {
            let nodes: Vec<i64> = (0..s as i64).map(|j| -j).collect();
            assert_eq!(ab_coefficients(s).unwrap(), exactness_oracle(&nodes), "s={s}");
        }
    }

    #[test]
    fn am_tables_match_spec_values() {
        assert_eq!(am_coefficients(1).unwrap(), rats(&[(1, 1)]));
        assert_eq!(am_coefficients(2).unwrap(), rats(&[(1, 2), (1, 2)]));
        assert_eq!(
            am_coefficients(4).unwrap(),
            rats(&[(3, 8), (19, 24), (-5, 24), (1, 24)])
        );
    }

    #[test]
    fn am_tables_match_brute_force_oracle() {
        for total in 1..=AM_MAX_STEPS {
            let nodes: Vec<i64> = (0..total as i64).map(|j| 1 - j).collect();
            assert_eq!(
                am_coefficients(total).unwrap(),
                exactness_oracle(&nodes),
                "total={total}"
            );
        }
    }

    #[test]
    fn coefficients_sum_to_one() {
        for s in 1..=AB_MAX_STEPS {
            let total: Rational = ab_coefficients(s).unwrap().into_iter().sum();
            assert_eq!(total, rat(1, 1));
        }
        for total_steps in 1..=AM_MAX_STEPS {
            let total: Rational = am_coefficients(total_steps).unwrap().into_iter().sum();
            assert_eq!(total, rat(1, 1));
        }
    }

    /// Applying the rule to `f = d(t^k)/dt` on the unit step must reproduce
    /// the exact increment of `t^k` for `k <= s` and miss by exactly
    /// `C_s * (s+1)!` at `k = s + 1`.
    #[test]
    fn ab_exactness_order_and_leading_defect() {
        for s in 1..=AB_MAX_STEPS {
            let betas = ab_coefficients(s).unwrap();
            let defect = |k: usize| -> Rational {
                // increment of t^k from 0 to 1 is exactly 1 for k >= 1
                let rule: Rational = betas
                    .iter()
                    .enumerate()
                    .map(|(j, b)| {
                        let t = rat(-(j as i64), 1);
                        let mut pow = Rational::one();
                        for _ in 0..k - 1 {
                            pow *= &t;
                        }
                        b * rat(k as i64, 1) * pow
                    })
                    .sum();
                rat(1, 1) - rule
            };
            for k in 1..=s {
                assert!(defect(k).is_zero(), "s={s} k={k}");
            }
            let c = truncation_constant(Family::Ab, s).unwrap();
            let factorial = rat((1..=s as i64 + 1).product(), 1);
            assert_eq!(defect(s + 1), c * factorial, "s={s}");
        }
    }

    /// Same exactness check for AM; the defect constant is negative for the
    /// implicit family, and its magnitude must match `truncation_constant`.
    #[test]
    fn am_exactness_order_and_leading_defect() {
        for total in 1..=AM_MAX_STEPS {
            let betas = am_coefficients(total).unwrap();
            let defect = |k: usize| -> Rational {
                let rule: Rational = betas
                    .iter()
                    .enumerate()
                    .map(|(idx, b)| {
                        let t = rat(1 - idx as i64, 1);
                        let mut pow = Rational::one();
                        for _ in 0..k - 1 {
                            pow *= &t;
                        }
                        b * rat(k as i64, 1) * pow
                    })
                    .sum();
                rat(1, 1) - rule
            };
            for k in 1..=total {
                assert!(defect(k).is_zero(), "total={total} k={k}");
            }
            let c = truncation_constant(Family::Am, total).unwrap();
            let factorial = rat((1..=total as i64 + 1).product(), 1);
            assert_eq!(defect(total + 1), -(c * factorial), "total={total}");
        }
    }

    #[test]
    fn truncation_constants_match_pinned_values() {
        assert_eq!(truncation_constant(Family::Ab, 3).unwrap(), rat(3, 8));
        assert_eq!(truncation_constant(Family::Ab, 1).unwrap(), rat(1, 2));
        assert_eq!(truncation_constant(Family::Am, 4).unwrap(), rat(19, 720));
        assert_eq!(truncation_constant(Family::Am, 2).unwrap(), rat(1, 12));
    }

    #[test]
    fn ab_constant_is_first_entry_of_next_am_table() {
        for s in 1..=AB_MAX_STEPS {
            assert_eq!(
                truncation_constant(Family::Ab, s).unwrap(),
                am_coefficients(s + 1).unwrap()[0]
            );
        }
    }

    #[test]
    fn bd_stencils_match_spec_values() {
        assert_eq!(bd_coefficients(1).unwrap(), rats(&[(1, 1), (-1, 1)]));
        assert_eq!(bd_coefficients(2).unwrap(), rats(&[(1, 1), (-2, 1), (1, 1)]));
        // Magnitudes as printed for the three-step case; the signs here are
        // the ones that make the stencil estimate +f''' (see the moment test).
        assert_eq!(
            bd_coefficients(3).unwrap(),
            rats(&[(1, 1), (-3, 1), (3, 1), (-1, 1)])
        );
    }

    /// Moment conditions: the stencil annihilates samples of every
    /// polynomial of degree below `s` and maps `t^s` samples to exactly `s!`.
    #[test]
    fn bd_moment_conditions() {
        for s in 1..=AB_MAX_STEPS {
            let deltas = bd_coefficients(s).unwrap();
            assert_eq!(deltas.len(), s + 1);
            for m in 0..s {
                let moment: Rational = deltas
                    .iter()
                    .enumerate()
                    .map(|(k, d)| {
                        let mut pow = Rational::one();
                        for _ in 0..m {
                            pow *= rat(-(k as i64), 1);
                        }
                        d * pow
                    })
                    .sum();
                assert!(moment.is_zero(), "s={s} m={m}");
            }
            // Sampling t^s at the window nodes recovers s! exactly; t = -k
            // are the nodes when the evaluation point is the origin.
            let top: Rational = deltas
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let mut pow = Rational::one();
                    for _ in 0..s {
                        pow *= rat(-(k as i64), 1);
                    }
                    d * pow
                })
                .sum();
            assert_eq!(top, rat((1..=s as i64).product(), 1), "s={s}");
        }
    }

    #[test]
    fn bd_second_difference_recovers_curvature() {
        // Samples of t^2 at t = 0, -1, -2 combined with [1, -2, 1] give 2.
        let deltas = bd_coefficients(2).unwrap();
        let samples = [rat(0, 1), rat(1, 1), rat(4, 1)];
        let got: Rational = deltas.iter().zip(&samples).map(|(d, f)| d * f).sum();
        assert_eq!(got, rat(2, 1));
    }

    #[test]
    fn next_order_identity_holds_for_all_supported_steps() {
        for s in 1..AB_MAX_STEPS {
            let report = ab_next_order_identity(s).unwrap();
            assert!(report.passed, "s={s}: {report:?}");
        }
    }

    #[test]
    fn next_order_identity_worked_cases() {
        let r1 = ab_next_order_identity(1).unwrap();
        assert_eq!(r1.combined, rats(&[(3, 2), (-1, 2)]));
        let r3 = ab_next_order_identity(3).unwrap();
        assert_eq!(
            r3.combined,
            rats(&[(55, 24), (-59, 24), (37, 24), (-3, 8)])
        );
    }

    #[test]
    fn out_of_range_arguments_rejected() {
        assert!(ab_coefficients(0).is_err());
        assert!(ab_coefficients(AB_MAX_STEPS + 1).is_err());
        assert!(am_coefficients(AM_MAX_STEPS + 1).is_err());
        assert!(bd_coefficients(0).is_err());
        assert!(truncation_constant(Family::Ab, 7).is_err());
        assert!(ab_next_order_identity(AB_MAX_STEPS).is_err());
    }

    #[test]
    fn scheme_table_assembles() {
        let t = SchemeTable::new(Family::Ab, 3).unwrap();
        assert_eq!(t.betas, rats(&[(23, 12), (-4, 3), (5, 12)]));
        assert_eq!(t.lte_constant, rat(3, 8));
        assert_eq!(t.bd_coeffs.len(), 4);
        let sum: Rational = t.bd_coeffs.iter().cloned().sum();
        assert!(sum.is_zero());
    }
}
