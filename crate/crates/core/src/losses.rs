//! Loss models: value and first three derivatives in the prediction,
//! plus runtime verification of the self-concordance bounds and the
//! weighted-distance inequality they imply.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Supported losses. Derivatives are always with respect to the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// l(y, yhat) = (yhat - y)^2 / 2
    Square,
    /// l(y, yhat) = log(1 + exp(-y * yhat)), y in {-1, +1}
    Logistic,
}

/// First three derivatives of the loss at (y, yhat).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivTriple {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// sigmoid(-m) computed without overflow for any m.
#[inline]
fn sigmoid_neg(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

impl Loss {
    fn check_label(self, y: f64) -> Result<()> {
        if self == Loss::Logistic && y != 1.0 && y != -1.0 {
            return Err(Error::InvalidLabel(y));
        }
        Ok(())
    }

    /// Loss value. The logistic branch stays finite for |y*yhat| up to
    /// f64 range (log1p/exp split on the sign of the margin).
    pub fn value(self, y: f64, yhat: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(match self {
            Loss::Square => {
                let r = yhat - y;
                0.5 * r * r
            }
            Loss::Logistic => {
                let m = y * yhat;
                if m >= 0.0 {
                    (-m).exp().ln_1p()
                } else {
                    -m + m.exp().ln_1p()
                }
            }
        })
    }

    /// (l', l'', l''') at (y, yhat).
    pub fn derivatives(self, y: f64, yhat: f64) -> Result<DerivTriple> {
        self.check_label(y)?;
        Ok(match self {
            Loss::Square => DerivTriple {
                d1: yhat - y,
                d2: 1.0,
                d3: 0.0,
            },
            Loss::Logistic => {
                let s = sigmoid_neg(y * yhat);
                let d2 = s * (1.0 - s);
                DerivTriple {
                    d1: -y * s,
                    d2,
                    d3: -y * d2 * (1.0 - 2.0 * s),
                }
            }
        })
    }

    /// l' only; the hot path for first-order steps.
    #[inline]
    pub fn d1(self, y: f64, yhat: f64) -> f64 {
        match self {
            Loss::Square => yhat - y,
            Loss::Logistic => -y * sigmoid_neg(y * yhat),
        }
    }

    /// (l', l'') without the third derivative; used by the Newton surrogate.
    #[inline]
    pub fn d1_d2(self, y: f64, yhat: f64) -> (f64, f64) {
        match self {
            Loss::Square => (yhat - y, 1.0),
            Loss::Logistic => {
                let s = sigmoid_neg(y * yhat);
                (-y * s, s * (1.0 - s))
            }
        }
    }
}

/// Extrema of the derivative bounds over an evaluation grid.
#[derive(Debug, Clone, Copy)]
pub struct ConcordanceReport {
    pub max_abs_d1: f64,
    pub max_d2: f64,
    /// max over the grid of |l'''| - l''; nonpositive when self-concordance holds.
    pub max_d3_excess: f64,
}

/// Sweeps (y, yhat) points and reports the derivative extrema.
pub fn check_self_concordance(loss: Loss, grid: &[(f64, f64)]) -> Result<ConcordanceReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let mut report = ConcordanceReport {
        max_abs_d1: f64::NEG_INFINITY,
        max_d2: f64::NEG_INFINITY,
        max_d3_excess: f64::NEG_INFINITY,
    };
    for &(y, yhat) in grid {
        let d = loss.derivatives(y, yhat)?;
        report.max_abs_d1 = report.max_abs_d1.max(d.d1.abs());
        report.max_d2 = report.max_d2.max(d.d2);
        report.max_d3_excess = report.max_d3_excess.max(d.d3.abs() - d.d2);
    }
    Ok(report)
}

/// Result of the weighted-distance check.
#[derive(Debug, Clone, Copy)]
pub struct DistanceCheck {
    /// max over probes of <t - t*, H (t - t*)> - 3*excess - kappa*rho*excess^2.
    pub worst_violation: f64,
    pub worst_index: usize,
}

/// Verifies, over probe points, that the weighted distance to the optimum is
/// controlled by the excess risk: the margin reported per probe is
/// LHS - 3*excess - kappa*rho*excess^2 and should be <= ~0 when (kappa, rho)
/// are valid for the distribution behind `f`.
pub fn check_distance_inequality(
    f: impl Fn(&[f64]) -> f64,
    h: &DMatrix<f64>,
    theta_star: &[f64],
    probes: &[Vec<f64>],
    kappa: f64,
    rho: f64,
) -> Result<DistanceCheck> {
    let d = theta_star.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.nrows(),
        });
    }
    let asym = (h - h.transpose()).abs().max();
    if asym > 1e-10 * h.abs().max().max(1.0) {
        return Err(Error::Singular("H is not symmetric".into()));
    }
    let eig = h.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * lam_max.max(1.0)) {
        return Err(Error::Singular("H is not positive semidefinite".into()));
    }

    let f_star = f(theta_star);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_index = 0;
    for (k, theta) in probes.iter().enumerate() {
        if theta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta.len(),
            });
        }
        let delta: Vec<f64> = theta
            .iter()
            .zip(theta_star)
            .map(|(a, b)| a - b)
            .collect();
        // <delta, H delta>
        let mut lhs = 0.0;
        for i in 0..d {
            let mut hi = 0.0;
            for j in 0..d {
                hi += h[(i, j)] * delta[j];
            }
            lhs += delta[i] * hi;
        }
        let excess = f(theta) - f_star;
        let margin = lhs - 3.0 * excess - kappa * rho * excess * excess;
        if margin > worst {
            worst = margin;
            worst_index = k;
        }
    }
    Ok(DistanceCheck {
        worst_violation: worst,
        worst_index,
    })
}
