//! Log-gamma and digamma for positive real arguments.
//!
//! Both shift the argument up to `x >= 10` with the recurrence and then use
//! the asymptotic (Stirling / de Moivre) series, which is accurate to
//! better than 1e-15 relative there.

const SHIFT_TO: f64 = 10.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2n} / (2n (2n - 1)) for n = 1..8.
const LGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2n} / (2n) for n = 1..8.
const DIGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma domain is x > 0, got {x}");
    let mut x = x;
    let mut prefix = 0.0;
    if x < SHIFT_TO {
        // ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1))
        let mut prod = 1.0;
        while x < SHIFT_TO {
            prod *= x;
            x += 1.0;
        }
        prefix = -prod.ln();
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in LGAMMA_SERIES {
        series += c * pow;
        pow *= inv2;
    }
    prefix + (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma domain is x > 0, got {x}");
    let mut x = x;
    let mut prefix = 0.0;
    while x < SHIFT_TO {
        prefix -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_SERIES {
        series += c * pow;
        pow *= inv2;
    }
    prefix + x.ln() - 0.5 / x - series
}
