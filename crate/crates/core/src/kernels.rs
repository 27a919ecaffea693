//! Compactly supported smoothing kernels on `[-1, 1]`.

use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error};

/// Number of Gauss–Legendre nodes used for moments. Exact for polynomial
/// integrands up to degree 31, which covers `u^8 K(u)^2` for both kernels.
const QUADRATURE_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Kernel {
    /// `0.75 (1 - u²)` on `[-1, 1]`. Second order.
    #[default]
    Epanechnikov,
    /// `(15/32)(1 - u²)(3 - 7u²)` on `[-1, 1]`. Fourth order; takes negative
    /// values near the edge of its support.
    Quartic4,
}

impl Kernel {
    pub const ALL: [Kernel; 2] = [Kernel::Epanechnikov, Kernel::Quartic4];

    #[inline]
    pub fn evaluate(self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        let u2 = u * u;
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u2),
            Kernel::Quartic4 => (15.0 / 32.0) * (1.0 - u2) * (3.0 - 7.0 * u2),
        }
    }

    /// Arguments with `|u| >= support_radius()` evaluate to zero.
    #[inline]
    pub fn support_radius(self) -> f64 {
        1.0
    }

    pub fn is_nonnegative(self) -> bool {
        matches!(self, Kernel::Epanechnikov)
    }

    /// `∫ u^s K(u) du`, or `∫ u^s K(u)^2 du` when `squared`, by Gauss–Legendre
    /// quadrature over the support.
    pub fn moment(self, s: u32, squared: bool) -> crate::Result<f64> {
        if s > 8 {
            return Err(invalid("moment order must be at most 8"));
        }
        let r = self.support_radius();
        let total = gauss_legendre(QUADRATURE_NODES)
            .map(|(node, weight)| {
                let u = r * node;
                let k = self.evaluate(u);
                let k = if squared { k * k } else { k };
                weight * libm::pow(u, s as f64) * k
            })
            .sum::<f64>();
        Ok(r * total)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Quartic4 => "quartic4",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epan" => Ok(Kernel::Epanechnikov),
            "quartic4" | "quartic_fourth_order" => Ok(Kernel::Quartic4),
            _ => Err(invalid("unknown kernel (expected epanechnikov or quartic4)")),
        }
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`,
/// found by Newton iteration on the Legendre polynomial.
fn gauss_legendre(m: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..m).map(move |i| {
        let mf = m as f64;
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        (x, 2.0 / ((1.0 - x * x) * dp * dp))
    })
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
