//! Calibration of swadesh distance to time, in thousands of years.
//!
//! Five curves are provided: the proportional law `t = L / (100 λ)`, the
//! same law applied to distances measured with borrowings excluded (shifted
//! by `s`), the line through the origin refitted to one point of the shifted
//! law, the accelerated law `t = sqrt(L / (100 λ))`, and the retention-
//! dependent variant `t = exp(0.005 L) sqrt(L / (100 λ))`.

use crate::error::{Error, Result};

/// Replacement rate per millennium of a 100-item list. Configurable; not
/// derived from the reconstruction data.
pub const DEFAULT_LAMBDA: f64 = 0.14;
/// Time of the anchor point used to refit the proportional law.
pub const DEFAULT_ANCHOR_T0: f64 = 1.0;
/// Default swadesh shift of the borrowing-excluded curve (about 5 borrowed
/// slots in a 100-item list).
pub const DEFAULT_SHIFT: f64 = 5.0;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub lambda: f64,
    pub alpha: f64,
    pub shift_s: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            alpha: 1.0,
            shift_s: DEFAULT_SHIFT,
        }
    }
}

impl DecayParams {
    pub fn new(lambda: f64, alpha: f64, shift_s: f64) -> Result<Self> {
        let p = Self {
            lambda,
            alpha,
            shift_s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.shift_s.is_finite() && self.shift_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shift must be >= 0, got {}",
                self.shift_s
            )));
        }
        Ok(())
    }
}

fn check(l: f64, p: &DecayParams) -> Result<()> {
    p.validate()?;
    if !(l.is_finite() && l >= 0.0) {
        return Err(Error::InvalidDistance {
            pair: "calibration".into(),
            value: l,
        });
    }
    Ok(())
}

pub fn time_linear(l: f64, p: &DecayParams) -> Result<f64> {
    check(l, p)?;
    Ok(l / (100.0 * p.lambda))
}

/// True time for a distance measured with borrowings excluded.
pub fn time_linear_shifted(l: f64, p: &DecayParams) -> Result<f64> {
    check(l, p)?;
    Ok((l + p.shift_s) / (100.0 * p.lambda))
}

pub fn time_quadratic(l: f64, p: &DecayParams) -> Result<f64> {
    check(l, p)?;
    Ok((l / (100.0 * p.lambda)).sqrt())
}

pub fn time_starostin(l: f64, p: &DecayParams) -> Result<f64> {
    check(l, p)?;
    Ok((0.005 * l).exp() * (l / (100.0 * p.lambda)).sqrt())
}

/// Rate of the line through the origin and the point of the shifted law at
/// time `t0`. Smaller than `λ` whenever `s > 0`.
pub fn refit_lambda(p: &DecayParams, t0: f64) -> Result<f64> {
    p.validate()?;
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("t0 must be > 0, got {t0}")));
    }
    let anchor_l = 100.0 * p.lambda * t0 - p.shift_s;
    if anchor_l <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "shift {} leaves no positive distance at t0 = {t0}",
            p.shift_s
        )));
    }
    Ok(anchor_l / (100.0 * t0))
}

pub fn time_refit_linear(l: f64, p: &DecayParams, t0: f64) -> Result<f64> {
    check(l, p)?;
    Ok(l / (100.0 * refit_lambda(p, t0)?))
}

/// Retention `c` solving `c = exp(-λ c t^α)`, by fixed-point iteration from 1.
pub fn implicit_retention(t: f64, p: &DecayParams) -> Result<f64> {
    p.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let x = p.lambda * t.powf(p.alpha);
    let mut c = 1.0_f64;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = (-x * c).exp();
        if (next - c).abs() <= FIXED_POINT_TOL {
            return Ok(next);
        }
        c = next;
    }
    Err(Error::NoConvergence(
        "retention fixed point",
        FIXED_POINT_MAX_ITER,
    ))
}

/// `dc/dt = -λ c α t^(α-1) exp(-λ c t^α)` evaluated with the implicit
/// retention `c(t)`. The inner `c` is held constant in the differentiation,
/// as in the expression itself.
pub fn general_decay_rate(t: f64, p: &DecayParams) -> Result<f64> {
    let c = implicit_retention(t, p)?;
    let ta = t.powf(p.alpha);
    Ok(-p.lambda * c * p.alpha * t.powf(p.alpha - 1.0) * (-p.lambda * c * ta).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialRate {
    Zero,
    Finite,
    Infinite,
}

/// Behaviour of `dc/dt` at `t = 0`: zero for `α > 1`, finite only at `α = 1`,
/// unbounded for `α < 1`.
pub fn classify_initial_rate(alpha: f64) -> Result<InitialRate> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    Ok(match alpha.partial_cmp(&1.0).expect("finite") {
        std::cmp::Ordering::Greater => InitialRate::Zero,
        std::cmp::Ordering::Equal => InitialRate::Finite,
        std::cmp::Ordering::Less => InitialRate::Infinite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Curve {
    Linear,
    LinearShifted,
    RefitLinear,
    Quadratic,
    Starostin,
}

impl Curve {
    pub const ALL: [Curve; 5] = [
        Curve::Linear,
        Curve::LinearShifted,
        Curve::RefitLinear,
        Curve::Quadratic,
        Curve::Starostin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Curve::Linear => "linear",
            Curve::LinearShifted => "linear_shifted",
            Curve::RefitLinear => "refit_linear",
            Curve::Quadratic => "quadratic",
            Curve::Starostin => "starostin",
        }
    }

    pub fn time(self, l: f64, p: &DecayParams, t0: f64) -> Result<f64> {
        match self {
            Curve::Linear => time_linear(l, p),
            Curve::LinearShifted => time_linear_shifted(l, p),
            Curve::RefitLinear => time_refit_linear(l, p, t0),
            Curve::Quadratic => time_quadratic(l, p),
            Curve::Starostin => time_starostin(l, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub curve: Curve,
    /// (L, t) with L ascending.
    pub points: Vec<(f64, f64)>,
}

/// Samples every curve on the grid `0, step, 2 step, ..` up to `l_max`.
pub fn sample_curves(l_max: f64, step: f64, p: &DecayParams, t0: f64) -> Result<Vec<CurveSample>> {
    if !(l_max.is_finite() && l_max > 0.0 && step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need l_max > 0 and step > 0, got {l_max}, {step}"
        )));
    }
    let n = (l_max / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    Curve::ALL
        .iter()
        .map(|&curve| {
            let points = grid
                .iter()
                .map(|&l| curve.time(l, p, t0).map(|t| (l, t)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveSample { curve, points })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, shift: f64) -> DecayParams {
        DecayParams::new(lambda, 1.0, shift).unwrap()
    }

    #[test]
    fn linear_laws() {
        let q = p(0.14, 0.0);
        assert_eq!(time_linear(0.0, &q).unwrap(), 0.0);
        assert!((time_linear(14.0, &q).unwrap() - 1.0).abs() < 1e-12);
        assert!((time_linear(28.0, &q).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            time_linear_shifted(14.0, &q).unwrap(),
            time_linear(14.0, &q).unwrap()
        );
        let s = p(0.14, 5.0);
        assert!((time_linear_shifted(0.0, &s).unwrap() - 5.0 / 14.0).abs() < 1e-12);
        assert!((time_linear_shifted(9.0, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(time_linear(-1.0, &q).is_err());
        assert!(DecayParams::new(0.0, 1.0, 0.0).is_err());
        assert!(DecayParams::new(0.1, -1.0, 0.0).is_err());
    }

    #[test]
    fn quadratic_and_starostin() {
        let q = p(0.14, 0.0);
        assert_eq!(time_quadratic(0.0, &q).unwrap(), 0.0);
        assert!((time_quadratic(14.0, &q).unwrap() - 1.0).abs() < 1e-12);
        assert!((time_quadratic(56.0, &q).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(time_starostin(0.0, &q).unwrap(), 0.0);
        assert!((time_starostin(14.0, &q).unwrap() - 1.0725).abs() < 5e-5);
    }

    #[test]
    fn refit_passes_through_anchor() {
        let s = p(0.14, 5.0);
        let lam2 = refit_lambda(&s, 1.0).unwrap();
        assert!(lam2 < s.lambda);
        // Anchor A at t0 = 1 lies at L = 9 on the shifted law.
        assert!((time_refit_linear(9.0, &s, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(time_refit_linear(0.0, &s, 1.0).unwrap(), 0.0);
        assert!(refit_lambda(&p(0.14, 20.0), 1.0).is_err());
    }

    #[test]
    fn decay_rate_at_origin() {
        let lam = 0.14;
        let r1 = general_decay_rate(0.0, &DecayParams::new(lam, 1.0, 0.0).unwrap()).unwrap();
        assert!((r1 + lam).abs() < 1e-15);
        let r2 = general_decay_rate(0.0, &DecayParams::new(lam, 2.0, 0.0).unwrap()).unwrap();
        assert_eq!(r2, 0.0);
        let r05 = general_decay_rate(0.0, &DecayParams::new(lam, 0.5, 0.0).unwrap()).unwrap();
        assert!(r05.is_infinite());
        assert_eq!(classify_initial_rate(1.0).unwrap(), InitialRate::Finite);
        assert_eq!(classify_initial_rate(2.0).unwrap(), InitialRate::Zero);
        assert_eq!(classify_initial_rate(0.9).unwrap(), InitialRate::Infinite);
        assert!(classify_initial_rate(0.0).is_err());
    }

    #[test]
    fn retention_fixed_point() {
        let q = DecayParams::new(0.14, 2.0, 0.0).unwrap();
        let c = implicit_retention(2.0, &q).unwrap();
        assert!((c - (-0.14 * c * 4.0).exp()).abs() < 1e-11);
        // Past x = e the map is no longer contracting.
        let steep = DecayParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            implicit_retention(10.0, &steep),
            Err(Error::NoConvergence(..))
        ));
    }

    #[test]
    fn curve_grid() {
        let s = DecayParams::default();
        let curves = sample_curves(200.0, 1.0, &s, DEFAULT_ANCHOR_T0).unwrap();
        assert_eq!(curves.len(), 5);
        for c in &curves {
            assert_eq!(c.points.len(), 201);
            assert!(c.points.iter().all(|&(_, t)| t >= 0.0));
        }
        let q = &curves[3].points;
        let st = &curves[4].points;
        for (a, b) in q.iter().zip(st).skip(1) {
            assert!(b.1 > a.1);
        }
        assert!(sample_curves(0.0, 1.0, &s, 1.0).is_err());
    }
}
