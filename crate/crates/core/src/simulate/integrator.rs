//! Dormand–Prince 5(4) with the standard fourth-order continuous extension
//! and PI step-size control.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Relative and absolute local error tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-11,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got rtol={} atol={}",
                self.rtol, self.atol
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tolerances: Tolerances,
    pub max_steps: usize,
    /// Upper bound on the step size; `None` means the whole span.
    pub max_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tolerances: Tolerances::default(),
            max_steps: 5_000_000,
            max_step: None,
        }
    }
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs[0].len()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Accepted steps: the grid, the states on it and one dense segment per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub segments: Vec<DenseSegment>,
    pub evaluations: usize,
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], tol: &Tolerances) -> f64 {
    let n = y0.len() as f64;
    let sum: f64 = y0
        .iter()
        .zip(y1)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Starting step from the local behaviour of the field.
fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], span: f64, tol: &Tolerances) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let scaled = |v: &[f64]| {
        let n = v.len() as f64;
        (v.iter()
            .zip(y0)
            .map(|(x, y)| (x / (tol.atol + tol.rtol * y.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Integrate `y' = f(t, y)` from `t0` to `t_final`.
///
/// `check` is called on every accepted state and may reject it with an
/// integrity error.
pub fn dopri5<F, C>(
    mut f: F,
    mut check: C,
    t0: f64,
    y0: &[f64],
    t_final: f64,
    options: &IntegratorOptions,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    C: FnMut(f64, &[f64]) -> Result<()>,
{
    let tol = options.tolerances;
    tol.validate()?;
    if !(t_final > t0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "final time {t_final} must exceed the start time {t0}"
        )));
    }
    let n = y0.len();
    let span = t_final - t0;
    let h_max = options.max_step.unwrap_or(span).min(span);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut t = t0;
    let mut y = y0.to_vec();
    f(t, &y, &mut k1)?;
    let mut evaluations = 1;
    let mut h = initial_step(&mut f, t, &y, &k1, h_max, &tol)?;
    evaluations += 1;

    let mut sol = Solution {
        times: vec![t],
        states: vec![y.clone()],
        segments: Vec::new(),
        evaluations: 0,
    };
    let mut fac_old = 1e-4_f64;
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t_final {
        if steps >= options.max_steps {
            return Err(Error::TooManySteps { t, steps });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }
        steps += 1;

        let stage = |tmp: &mut [f64], coeffs: &[(f64, &[f64])]| {
            for i in 0..n {
                tmp[i] = y[i] + h * coeffs.iter().map(|(a, k)| a * k[i]).sum::<f64>();
            }
        };
        stage(&mut tmp, &[(A21, &k1)]);
        let stages = (|| -> Result<()> {
            f(t + C2 * h, &tmp, &mut k2)?;
            stage(&mut tmp, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * h, &tmp, &mut k3)?;
            stage(&mut tmp, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * h, &tmp, &mut k4)?;
            stage(&mut tmp, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * h, &tmp, &mut k5)?;
            stage(&mut tmp, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + h, &tmp, &mut k6)?;
            stage(&mut y1, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            f(t + h, &y1, &mut k7)
        })();
        evaluations += 6;
        if let Err(e) = stages {
            // A trial step may leave the domain of the field; retry smaller.
            if matches!(e, Error::SingularValueState { .. }) {
                h *= 0.25;
                last_rejected = true;
                continue;
            }
            return Err(e);
        }
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&y, &y1, &err, &tol);
        if !e.is_finite() {
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = e.powf(0.2 - BETA * 0.75);
        if e <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = e.max(1e-4);
            check(t + h, &y1)?;

            let mut coeffs: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                coeffs[0][i] = y[i];
                coeffs[1][i] = ydiff;
                coeffs[2][i] = bspl;
                coeffs[3][i] = ydiff - h * k7[i] - bspl;
                coeffs[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.segments.push(DenseSegment { t0: t, h, coeffs });

            t = if last { t_final } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            sol.times.push(t);
            sol.states.push(y.clone());
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(h_max);
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    sol.evaluations = evaluations;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_check(_: f64, _: &[f64]) -> Result<()> {
        Ok(())
    }

    #[test]
    fn exponential_growth() {
        let sol = dopri5(
            |_, y, out| {
                out[0] = y[0];
                Ok(())
            },
            no_check,
            0.0,
            &[1.0],
            2.0,
            &IntegratorOptions::default(),
        )
        .unwrap();
        let end = sol.states.last().unwrap();
        assert_eq!(*sol.times.last().unwrap(), 2.0);
        assert!((end[0] - 2.0_f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = IntegratorOptions::default();
        let sol = dopri5(
            |_, y, out| {
                out[0] = y[1];
                out[1] = -y[0];
                Ok(())
            },
            no_check,
            0.0,
            &[1.0, 0.0],
            20.0,
            &opts,
        )
        .unwrap();
        let mut worst = 0.0_f64;
        for seg in &sol.segments {
            for j in 0..=10 {
                let t = seg.t0 + seg.h * j as f64 / 10.0;
                let y = seg.eval(t);
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
            }
        }
        assert!(worst < 1e-7, "{worst}");
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tighter_tolerance_converges() {
        let run = |rtol: f64| {
            let opts = IntegratorOptions {
                tolerances: Tolerances { rtol, atol: rtol * 1e-2 },
                ..Default::default()
            };
            dopri5(
                |_, y, out| {
                    out[0] = y[1];
                    out[1] = (1.0 - y[0] * y[0]) * y[1] - y[0];
                    Ok(())
                },
                no_check,
                0.0,
                &[2.0, 0.0],
                10.0,
                &opts,
            )
            .unwrap()
            .states
            .last()
            .unwrap()
            .clone()
        };
        let a = run(1e-8);
        let b = run(1e-10);
        let c = run(1e-12);
        let d_ab = (a[0] - c[0]).abs().max((a[1] - c[1]).abs());
        let d_bc = (b[0] - c[0]).abs().max((b[1] - c[1]).abs());
        assert!(d_bc < d_ab);
        assert!(d_ab < 1e-5);
    }

    #[test]
    fn step_budget_and_bad_input() {
        let opts = IntegratorOptions {
            max_steps: 3,
            ..Default::default()
        };
        let r = dopri5(
            |_, y, out| {
                out[0] = y[1];
                out[1] = -y[0];
                Ok(())
            },
            no_check,
            0.0,
            &[1.0, 0.0],
            100.0,
            &opts,
        );
        assert!(matches!(r, Err(Error::TooManySteps { .. })));
        let r = dopri5(|_, _, _| Ok(()), no_check, 1.0, &[0.0], 0.5, &IntegratorOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn blow_up_underflows() {
        // y' = y², y(0) = 1 blows up at t = 1
        let r = dopri5(
            |_, y, out| {
                out[0] = y[0] * y[0];
                Ok(())
            },
            no_check,
            0.0,
            &[1.0],
            2.0,
            &IntegratorOptions::default(),
        );
        assert!(
            matches!(r, Err(Error::StepSizeUnderflow { .. }) | Err(Error::TooManySteps { .. })),
            "{r:?}"
        );
    }
}
