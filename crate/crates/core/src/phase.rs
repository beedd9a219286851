//! Unit-modulus complex numbers with an exact mode for roots of unity.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;

/// A phase `e^{2 pi i t}`.
///
/// `Root(t)` stores the angle `t` in turns, reduced to `[0, 1)`; products of
/// roots stay exact. `Float` is any unit complex number.
#[derive(Debug, Clone, Copy)]
pub enum Phase {
    Root(Ratio<i64>),
    Float(Complex64),
}

fn reduce(t: Ratio<i64>) -> Ratio<i64> {
    let f = t - t.floor();
    if f < Ratio::from_integer(0) {
        f + 1
    } else {
        f
    }
}

impl Phase {
    pub const ONE: Phase = Phase::Root(Ratio::new_raw(0, 1));

    /// `e^{2 pi i k/n}`.
    pub fn root(k: i64, n: i64) -> Phase {
        Phase::Root(reduce(Ratio::new(k, n)))
    }

    pub fn from_complex(z: Complex64) -> Phase {
        Phase::Float(z)
    }

    /// `e^{i theta}`.
    pub fn from_angle(theta: f64) -> Phase {
        Phase::Float(Complex64::from_polar(1.0, theta))
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::Root(t) => {
                let r = reduce(t);
                // exact values at the quarter turns keep +-1, +-i free of rounding
                match (*r.numer(), *r.denom()) {
                    (0, _) => Complex64::new(1.0, 0.0),
                    (1, 2) => Complex64::new(-1.0, 0.0),
                    (1, 4) => Complex64::new(0.0, 1.0),
                    (3, 4) => Complex64::new(0.0, -1.0),
                    (p, q) => Complex64::from_polar(1.0, 2.0 * PI * p as f64 / q as f64),
                }
            }
            Phase::Float(z) => z,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Phase::Root(_))
    }

    pub fn conj(self) -> Phase {
        match self {
            Phase::Root(t) => Phase::Root(reduce(-t)),
            Phase::Float(z) => Phase::Float(z.conj()),
        }
    }

    pub fn modulus(self) -> f64 {
        match self {
            Phase::Root(_) => 1.0,
            Phase::Float(z) => z.norm(),
        }
    }

    /// Principal argument in `(-pi, pi]`.
    pub fn arg(self) -> f64 {
        match self {
            Phase::Root(t) => {
                let r = reduce(t);
                let turns = if r > Ratio::new(1, 2) { r - 1 } else { r };
                2.0 * PI * (*turns.numer() as f64) / (*turns.denom() as f64)
            }
            Phase::Float(z) => {
                let a = z.arg();
                if a <= -PI {
                    PI
                } else {
                    a
                }
            }
        }
    }

    /// Principal square root: half of the argument in `(-pi, pi]`.
    ///
    /// The branch is snapped so that values within `1e-12` of `-1` are treated
    /// as exactly `-1` (root `i`), which keeps the choice deterministic.
    pub fn principal_sqrt(self) -> Phase {
        match self {
            Phase::Root(t) => {
                let r = reduce(t);
                let turns = if r > Ratio::new(1, 2) { r - 1 } else { r };
                Phase::Root(reduce(turns / 2))
            }
            Phase::Float(z) => {
                let z = z / z.norm();
                let mut a = z.arg();
                if (a.abs() - PI).abs() < 1e-12 {
                    a = PI;
                }
                Phase::from_angle(a / 2.0)
            }
        }
    }

    pub fn approx_eq(self, other: Phase, tol: f64) -> bool {
        match (self, other) {
            (Phase::Root(a), Phase::Root(b)) => reduce(a) == reduce(b),
            _ => (self.to_complex() - other.to_complex()).norm() <= tol,
        }
    }

    pub fn is_one(self, tol: f64) -> bool {
        self.approx_eq(Phase::ONE, tol)
    }
}

impl Default for Phase {
    fn default() -> Self {
        Phase::ONE
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        match (self, rhs) {
            (Phase::Root(a), Phase::Root(b)) => Phase::Root(reduce(a + b)),
            (a, b) => Phase::Float(a.to_complex() * b.to_complex()),
        }
    }
}

impl PartialEq for Phase {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(*other, 0.0)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Root(t) => {
                let r = reduce(*t);
                write!(f, "{}/{}", r.numer(), r.denom())
            }
            Phase::Float(z) => write!(f, "{:?} {:?}", z.re, z.im),
        }
    }
}
