//! Self-concordant barriers for the lifted arc epigraphs.

use thiserror::Error;

/// Barrier parameter shared by every arc class.
pub const NU: f64 = 6.0;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("point (f = {f}, y = {y}) is outside the barrier domain")]
pub struct OutOfDomain {
    pub f: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcClass {
    Transport,
    Quadratic { weight: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierSpec {
    pub class: ArcClass,
    pub cap: f64,
}

impl BarrierSpec {
    pub fn transport(cap: f64) -> Self {
        Self {
            class: ArcClass::Transport,
            cap,
        }
    }

    pub fn quadratic(weight: f64, cap: f64) -> Self {
        Self {
            class: ArcClass::Quadratic { weight },
            cap,
        }
    }

    pub fn parameter(&self) -> f64 {
        match self.class {
            ArcClass::Transport => 3.0,
            ArcClass::Quadratic { .. } => 6.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// Transport: `-ln f - ln(Λ-f) - ln y`.
/// Quadratic: `-ln f - ln(Λ-f) - 2 ln y - ln(y - f²/(2w))`.
pub fn evaluate_barrier(spec: &BarrierSpec, f: f64, y: f64) -> Result<BarrierEval, OutOfDomain> {
    let lam = spec.cap;
    if !(f > 0.0 && f < lam && y > 0.0) {
        return Err(OutOfDomain { f, y });
    }
    let slack = lam - f;
    let cap_value = -f.ln() - slack.ln();
    let cap_grad = -1.0 / f + 1.0 / slack;
    let cap_hess = 1.0 / (f * f) + 1.0 / (slack * slack);
    match spec.class {
        ArcClass::Transport => Ok(BarrierEval {
            value: cap_value - y.ln(),
            gradient: [cap_grad, -1.0 / y],
            hessian: [[cap_hess, 0.0], [0.0, 1.0 / (y * y)]],
        }),
        ArcClass::Quadratic { weight } => {
            let g = y - f * f / (2.0 * weight);
            if !(g > 0.0) {
                return Err(OutOfDomain { f, y });
            }
            let k = f / weight;
            let fy = -k / (g * g);
            Ok(BarrierEval {
                value: cap_value - 2.0 * y.ln() - g.ln(),
                gradient: [cap_grad + k / g, -2.0 / y - 1.0 / g],
                hessian: [
                    [cap_hess + 1.0 / (weight * g) + k * k / (g * g), fy],
                    [fy, 2.0 / (y * y) + 1.0 / (g * g)],
                ],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn transport_example() {
        let ev = evaluate_barrier(&BarrierSpec::transport(4.0), 1.0, 1.0).unwrap();
        assert!(close(ev.gradient[0], -2.0 / 3.0, 1e-15));
        assert!(close(ev.gradient[1], -1.0, 1e-15));
        assert!(close(ev.hessian[0][0], 10.0 / 9.0, 1e-15));
        assert_eq!(ev.hessian[0][1], 0.0);
        assert!(close(ev.hessian[1][1], 1.0, 1e-15));
    }

    #[test]
    fn quadratic_example() {
        let spec = BarrierSpec::quadratic(1.0, 4.0);
        let ev = evaluate_barrier(&spec, 1.0, 1.0).unwrap();
        assert!(close(ev.gradient[0], 4.0 / 3.0, 1e-15));
        let h = 1e-6;
        let fd = (evaluate_barrier(&spec, 1.0 + h, 1.0).unwrap().value
            - evaluate_barrier(&spec, 1.0 - h, 1.0).unwrap().value)
            / (2.0 * h);
        assert!(close(fd, ev.gradient[0], 1e-5));
    }

    #[test]
    fn domain_errors() {
        let spec = BarrierSpec::quadratic(1.0, 4.0);
        assert!(evaluate_barrier(&spec, 2.0, 1.0).is_err());
        assert!(evaluate_barrier(&spec, 0.0, 1.0).is_err());
        assert!(evaluate_barrier(&BarrierSpec::transport(4.0), 4.0, 1.0).is_err());
        assert!(evaluate_barrier(&BarrierSpec::transport(4.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn parameters() {
        assert_eq!(BarrierSpec::transport(2.0).parameter(), 3.0);
        assert_eq!(BarrierSpec::quadratic(1.0, 2.0).parameter(), NU);
    }
}
