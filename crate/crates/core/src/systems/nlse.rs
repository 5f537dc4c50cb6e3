//! Closed-form solutions of the focusing nonlinear Schrödinger equation
//!
//! ```text
//! i ψ_x + ½ ψ_tt + |ψ|² ψ = 0
//! ```
//!
//! where `x` is the propagation variable and `t` the transverse one.
//!
//! The single-breather family is evaluated in complex arithmetic, so the same
//! code covers Akhmediev breathers (`a < ½`, periodic in `t`, localized in `x`)
//! and Kuznetsov–Ma solitons (`a > ½`, roles exchanged).

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::sampled::SampledField;
use crate::Real;

const POLE_TOLERANCE: f64 = 1e-14;

/// Which analytic state to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlseState {
    Akhmediev,
    KuznetsovMa,
    Collision,
}

/// Coefficient in front of `cos(ωt)` in the breather denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    SqrtA,
    SqrtTwoA,
}

/// Temporal frequency of the breather.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    /// `ω = √(2(1−2a))`
    RootTwoOneMinusTwoA,
    /// `ω = 2√(1−2a)`
    TwoRootOneMinusTwoA,
}

/// One concrete reading of the breather formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BreatherVariant {
    pub prefactor: Prefactor,
    pub frequency: Frequency,
}

impl BreatherVariant {
    /// `√a · cos(ωt)` with `ω = √(2(1−2a))`.
    pub const PRINTED: Self = BreatherVariant {
        prefactor: Prefactor::SqrtA,
        frequency: Frequency::RootTwoOneMinusTwoA,
    };

    pub const ALL: [Self; 4] = [
        Self::PRINTED,
        BreatherVariant {
            prefactor: Prefactor::SqrtTwoA,
            frequency: Frequency::RootTwoOneMinusTwoA,
        },
        BreatherVariant {
            prefactor: Prefactor::SqrtA,
            frequency: Frequency::TwoRootOneMinusTwoA,
        },
        BreatherVariant {
            prefactor: Prefactor::SqrtTwoA,
            frequency: Frequency::TwoRootOneMinusTwoA,
        },
    ];

    pub fn label(self) -> &'static str {
        match (self.prefactor, self.frequency) {
            (Prefactor::SqrtA, Frequency::RootTwoOneMinusTwoA) => "sqrt_a/omega_sqrt2",
            (Prefactor::SqrtTwoA, Frequency::RootTwoOneMinusTwoA) => "sqrt_2a/omega_sqrt2",
            (Prefactor::SqrtA, Frequency::TwoRootOneMinusTwoA) => "sqrt_a/omega_2",
            (Prefactor::SqrtTwoA, Frequency::TwoRootOneMinusTwoA) => "sqrt_2a/omega_2",
        }
    }

    fn coefficients<T: Real>(self, a: T) -> (Complex<T>, Complex<T>, Complex<T>) {
        let one = T::one();
        let two = one + one;
        let c = match self.prefactor {
            Prefactor::SqrtA => a,
            Prefactor::SqrtTwoA => two * a,
        };
        let c = Complex::new(c, T::zero()).sqrt();
        let m = Complex::new(one - two * a, T::zero());
        let omega = match self.frequency {
            Frequency::RootTwoOneMinusTwoA => (m * two).sqrt(),
            Frequency::TwoRootOneMinusTwoA => m.sqrt() * two,
        };
        let b = (m * (T::lit(8.0) * a)).sqrt();
        (c, omega, b)
    }
}

/// Parameters of the analytic NLSE states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlseParams {
    pub state: NlseState,
    /// Breather parameter for the single-breather states.
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    /// Number of channel grid points spanning `[−π, π]`.
    pub x_points: usize,
    /// Step of the sampled series variable.
    pub dt: f64,
    /// When set, channels sample `t` and the series advances along `x`.
    #[serde(default)]
    pub role_swap: bool,
    /// Value of the series variable at the first sample.
    #[serde(default)]
    pub start: f64,
}

impl NlseParams {
    pub fn akhmediev() -> Self {
        NlseParams {
            state: NlseState::Akhmediev,
            a: 0.25,
            a1: 0.0,
            a2: 0.0,
            x_points: 64,
            dt: PI / 100.0,
            role_swap: false,
            start: 0.0,
        }
    }

    pub fn kuznetsov_ma() -> Self {
        NlseParams {
            state: NlseState::KuznetsovMa,
            a: 0.7,
            role_swap: true,
            ..Self::akhmediev()
        }
    }

    pub fn collision(a1: f64, a2: f64) -> Self {
        NlseParams {
            state: NlseState::Collision,
            a: 0.0,
            a1,
            a2,
            dt: PI / 40.0,
            ..Self::akhmediev()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_points < 2 {
            return Err(Error::invalid("x_points must be at least 2"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if !self.start.is_finite() {
            return Err(Error::invalid("start must be finite"));
        }
        match self.state {
            NlseState::Akhmediev | NlseState::KuznetsovMa => {
                if !(self.a > 0.0 && self.a.is_finite()) || self.a == 0.5 {
                    return Err(Error::invalid(format!("breather parameter a={} must be positive and not 0.5", self.a)));
                }
            }
            NlseState::Collision => {
                for (name, v) in [("a1", self.a1), ("a2", self.a2)] {
                    if !(v > 0.0 && v < 0.5) {
                        return Err(Error::invalid(format!("{name}={v} must lie in (0, 0.5)")));
                    }
                }
                if self.a1 == self.a2 {
                    return Err(Error::invalid("collision requires a1 != a2"));
                }
            }
        }
        Ok(())
    }

    /// Channel coordinates: `x_points` values evenly spanning `[−π, π]`.
    pub fn channel_grid(&self) -> Vec<f64> {
        let n = self.x_points;
        let h = 2.0 * PI / (n - 1) as f64;
        (0..n).map(|i| if i + 1 == n { PI } else { -PI + h * i as f64 }).collect()
    }

    /// Maps (channel coordinate, series coordinate) to `(x, t)`.
    fn point(&self, channel: f64, series: f64) -> (f64, f64) {
        if self.role_swap {
            (series, channel)
        } else {
            (channel, series)
        }
    }
}

/// Single breather at `(x, t)`:
///
/// `ψ = e^{ix} [1 + (2(1−2a) cosh(bx) + i b sinh(bx)) / (c cos(ωt) − cosh(bx))]`
/// with `b = √(8a(1−2a))` and `c`, `ω` fixed by `variant`.
pub fn breather_value<T: Real>(a: T, variant: BreatherVariant, x: T, t: T) -> Result<Complex<T>> {
    let (c, omega, b) = variant.coefficients(a);
    let one = T::one();
    let two = one + one;
    let bx = b * x;
    let denom = c * (omega * t).cos() - bx.cosh();
    let dn = denom.norm();
    if !(dn.to_f64_lossy() >= POLE_TOLERANCE) {
        return Err(Error::Pole {
            x: x.to_f64_lossy(),
            t: t.to_f64_lossy(),
            denominator: dn.to_f64_lossy(),
        });
    }
    let numer = bx.cosh() * (two * (one - two * a)) + Complex::<T>::i() * b * bx.sinh();
    let carrier = Complex::new(x.cos(), x.sin());
    Ok(carrier * (Complex::new(one, T::zero()) + numer / denom))
}

/// Two-breather collision at `(x, t)`, built by two Darboux steps on the
/// plane wave `e^{ix}`.
pub fn collision_value<T: Real>(a1: T, a2: T, x: T, t: T) -> Result<Complex<T>> {
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    let half = one / two;
    let i = Complex::<T>::i();
    let cplx = |v: T| Complex::new(v, zero);

    let seed = |a: T| {
        let l = i * (two * a).sqrt();
        let kappa = (cplx(one) + l * l).sqrt() * two;
        let chi = (kappa * half).acos() * half;
        let quarter_turn = cplx(T::FRAC_PI_2());
        let drift = kappa * t + l * kappa * x;
        let e_minus = Complex::from_polar(one, -x * half);
        let e_plus = Complex::from_polar(one, x * half);
        let r = e_minus * ((i * (chi * two + drift - quarter_turn) * half).exp() - (i * (-chi * two - drift + quarter_turn) * half).exp());
        let s = e_plus * ((i * (-chi * two + drift - quarter_turn) * half).exp() + (i * (chi * two - drift + quarter_turn) * half).exp());
        (l, r, s)
    };
    let (l1, r1, s1) = seed(a1);
    let (l2, r2, s2) = seed(a2);

    let n1 = r1.norm_sqr() + s1.norm_sqr();
    check_pole(n1, x, t)?;
    let d11 = l1.conj() - l1;
    let r12 = (d11 * s1.conj() * r1 * s2 + (l2 - l1) * r1.norm_sqr() * r2 + (l2 - l1.conj()) * s1.norm_sqr() * r2) / n1;
    let s12 = (d11 * s1 * r1.conj() * r2 + (l2 - l1) * s1.norm_sqr() * s2 + (l2 - l1.conj()) * r1.norm_sqr() * s2) / n1;
    let n12 = r12.norm_sqr() + s12.norm_sqr();
    check_pole(n12, x, t)?;

    let psi0 = Complex::from_polar(one, x);
    let psi1 = psi0 + d11 * s1 * r1.conj() * two / n1;
    Ok(psi1 + (l2.conj() - l2) * s12 * r12.conj() * two / n12)
}

fn check_pole<T: Real>(v: T, x: T, t: T) -> Result<()> {
    if v.to_f64_lossy() >= POLE_TOLERANCE {
        Ok(())
    } else {
        Err(Error::Pole {
            x: x.to_f64_lossy(),
            t: t.to_f64_lossy(),
            denominator: v.to_f64_lossy(),
        })
    }
}

/// `|i ψ_x + ½ ψ_tt + |ψ|² ψ|` at one point, from finite differences of `psi`:
/// fourth-order central in `x` (step 1e-3), sixth-order central in `t`
/// (step 1e-2). Truncation and rounding are both below 1e-9 for fields with
/// unit-scale amplitude and derivatives.
pub fn nlse_residual(psi: &impl Fn(f64, f64) -> Result<Complex<f64>>, x: f64, t: f64) -> Result<f64> {
    const HX: f64 = 1e-3;
    const HT: f64 = 1e-2;
    let p = |dx: f64, dt: f64| psi(x + dx, t + dt);
    let centre = p(0.0, 0.0)?;
    let psi_x = (p(-2.0 * HX, 0.0)? - p(2.0 * HX, 0.0)? + (p(HX, 0.0)? - p(-HX, 0.0)?) * 8.0) / (12.0 * HX);
    let psi_tt = ((p(0.0, -3.0 * HT)? + p(0.0, 3.0 * HT)?) * 2.0 - (p(0.0, -2.0 * HT)? + p(0.0, 2.0 * HT)?) * 27.0
        + (p(0.0, -HT)? + p(0.0, HT)?) * 270.0
        - centre * 490.0)
        / (180.0 * HT * HT);
    let r = Complex::<f64>::i() * psi_x + psi_tt * 0.5 + centre * centre.norm_sqr();
    Ok(r.norm())
}

/// Largest residual over the sampling grid of `params` for `steps` samples.
pub fn max_residual(params: &NlseParams, steps: usize, psi: &impl Fn(f64, f64) -> Result<Complex<f64>>) -> Result<f64> {
    let grid = params.channel_grid();
    let mut worst = 0.0f64;
    for j in 0..steps {
        let s = params.start + params.dt * j as f64;
        for &c in &grid {
            let (x, t) = params.point(c, s);
            worst = worst.max(nlse_residual(psi, x, t)?);
        }
    }
    Ok(worst)
}

/// Outcome of testing every breather variant against the equation.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSelection {
    pub variant: BreatherVariant,
    pub residual: f64,
    /// Residual per candidate, `None` where the candidate hit a pole.
    pub candidates: Vec<(BreatherVariant, Option<f64>)>,
}

/// Number of series samples scored when choosing a breather variant.
pub const SELECTION_STEPS: usize = 128;

/// Scores every [`BreatherVariant`] with the residual oracle on the sampling
/// grid of `params` and picks the smallest residual.
pub fn select_breather_variant(params: &NlseParams) -> Result<VariantSelection> {
    params.validate()?;
    let a = params.a;
    let mut candidates = Vec::with_capacity(4);
    let mut best: Option<(BreatherVariant, f64)> = None;
    for v in BreatherVariant::ALL {
        let res = max_residual(params, SELECTION_STEPS, &|x, t| breather_value(a, v, x, t)).ok();
        if let Some(r) = res {
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((v, r));
            }
        }
        candidates.push((v, res));
    }
    let (variant, residual) = best.ok_or_else(|| Error::invalid(format!("every breather variant has a pole for a={a}")))?;
    Ok(VariantSelection {
        variant,
        residual,
        candidates,
    })
}

/// Samples a single breather (Akhmediev or Kuznetsov–Ma) with an explicit
/// variant. Channel `i` at sample `j` is `ψ` at channel coordinate `grid[i]`
/// and series coordinate `start + j·dt`.
pub fn breather_field<T: Real>(params: &NlseParams, variant: BreatherVariant, steps: usize) -> Result<SampledField<Complex<T>>> {
    params.validate()?;
    let tag = format!(
        "nlse:{}:a={}:variant={}{}",
        state_name(params.state),
        params.a,
        variant.label(),
        if params.role_swap { ":role_swap" } else { "" }
    );
    let a = T::lit(params.a);
    sample(params, steps, tag, |x, t| breather_value(a, variant, T::lit(x), T::lit(t)))
}

/// Samples a single breather using the variant chosen by
/// [`select_breather_variant`].
pub fn akhmediev_breather<T: Real>(params: &NlseParams, steps: usize) -> Result<SampledField<Complex<T>>> {
    let sel = select_breather_variant(params)?;
    breather_field(params, sel.variant, steps)
}

/// Samples the two-breather collision for `(a1, a2)`.
pub fn soliton_collision<T: Real>(params: &NlseParams, steps: usize) -> Result<SampledField<Complex<T>>> {
    params.validate()?;
    if params.state != NlseState::Collision {
        return Err(Error::invalid("soliton_collision needs state = collision"));
    }
    let tag = format!(
        "nlse:collision:a1={}:a2={}{}",
        params.a1,
        params.a2,
        if params.role_swap { ":role_swap" } else { "" }
    );
    let (a1, a2) = (T::lit(params.a1), T::lit(params.a2));
    sample(params, steps, tag, |x, t| collision_value(a1, a2, T::lit(x), T::lit(t)))
}

/// Dispatches on `params.state`.
pub fn generate<T: Real>(params: &NlseParams, steps: usize) -> Result<SampledField<Complex<T>>> {
    match params.state {
        NlseState::Akhmediev | NlseState::KuznetsovMa => akhmediev_breather(params, steps),
        NlseState::Collision => soliton_collision(params, steps),
    }
}

/// Boxed closure `(x, t) ↦ ψ(x, t)`.
pub type FieldFn = Box<dyn Fn(f64, f64) -> Result<Complex<f64>> + Send + Sync>;

/// The exact field function `(x, t) ↦ ψ` described by `params`, in `f64`.
pub fn field_fn(params: &NlseParams) -> Result<FieldFn> {
    Ok(match params.state {
        NlseState::Akhmediev | NlseState::KuznetsovMa => {
            let v = select_breather_variant(params)?.variant;
            let a = params.a;
            Box::new(move |x, t| breather_value(a, v, x, t))
        }
        NlseState::Collision => {
            let (a1, a2) = (params.a1, params.a2);
            Box::new(move |x, t| collision_value(a1, a2, x, t))
        }
    })
}

fn state_name(s: NlseState) -> &'static str {
    match s {
        NlseState::Akhmediev => "akhmediev",
        NlseState::KuznetsovMa => "kuznetsov_ma",
        NlseState::Collision => "collision",
    }
}

fn sample<T: Real>(
    params: &NlseParams,
    steps: usize,
    system_tag: String,
    f: impl Fn(f64, f64) -> Result<Complex<T>>,
) -> Result<SampledField<Complex<T>>> {
    let grid = params.channel_grid();
    let mut samples = Vec::with_capacity(steps);
    for j in 0..steps {
        let s = params.start + params.dt * j as f64;
        let col = grid
            .iter()
            .map(|&c| {
                let (x, t) = params.point(c, s);
                f(x, t)
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(col);
    }
    Ok(SampledField {
        samples,
        dt: params.dt,
        grid,
        system_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_formula_at_origin() {
        let v = breather_value(0.25, BreatherVariant::PRINTED, 0.0, 0.0).unwrap();
        assert!((v - Complex::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn grid_spacing() {
        let g = NlseParams::akhmediev().channel_grid();
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], -PI);
        assert_eq!(g[63], PI);
        assert!((g[1] - g[0] - 2.0 * PI / 63.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(NlseParams::collision(0.2, 0.2).validate().is_err());
        assert!(NlseParams::collision(0.6, 0.2).validate().is_err());
        let mut p = NlseParams::akhmediev();
        p.a = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn kuznetsov_ma_printed_prefactor_has_pole() {
        // 0.837·cosh(ω't) = cos(b'x) has solutions near t = 0.
        let a: f64 = 0.7;
        let b = (8.0 * a * (2.0 * a - 1.0)).sqrt();
        let x = (a.sqrt()).acos() / b;
        assert!(breather_value(a, BreatherVariant::PRINTED, x, 0.0).is_err());
    }
}
