//! Uplink physical layer and the scalar functions of the rate-inverse
//! substitution.
//!
//! All quantities are SI: watts, hertz, bits, seconds, W/Hz. Decibel inputs are
//! converted once with [`db_to_linear`] / [`dbm_to_watts`] when a configuration
//! is built.
//!
//! The uplink rate for power `p` is `R(p) = w * log2(1 + G p / P_N)` with
//! composite gain `G = g0 (L0 / L)^theta` and noise power `P_N = N0 w`. The power
//! subproblem is solved in `xi = 1 / R(p)` (seconds per bit), where the energy of
//! one bit is `psi(xi) * P_N / G` with `psi(xi) = xi (2^(1/(w xi)) - 1)`.

use core::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Deterministic path-loss channel between the device and the server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    bandwidth_hz: f64,
    pathloss_const_linear: f64,
    pathloss_exponent: f64,
    reference_distance_m: f64,
    distance_m: f64,
    noise_psd_w_per_hz: f64,
    p_max_w: f64,
    gain: f64,
    noise_w: f64,
}

impl ChannelConfig {
    /// Validates every field (all strictly positive and finite) and caches the
    /// composite gain and the noise power.
    pub fn new(
        bandwidth_hz: f64,
        pathloss_const_linear: f64,
        pathloss_exponent: f64,
        reference_distance_m: f64,
        distance_m: f64,
        noise_psd_w_per_hz: f64,
        p_max_w: f64,
    ) -> Result<Self> {
        for (what, value) in [
            ("bandwidth_hz", bandwidth_hz),
            ("pathloss_const_linear", pathloss_const_linear),
            ("pathloss_exponent", pathloss_exponent),
            ("reference_distance_m", reference_distance_m),
            ("distance_m", distance_m),
            ("noise_psd_w_per_hz", noise_psd_w_per_hz),
            ("p_max_w", p_max_w),
        ] {
            positive(what, value)?;
        }
        let gain =
            pathloss_const_linear * libm::pow(reference_distance_m / distance_m, pathloss_exponent);
        let noise_w = noise_psd_w_per_hz * bandwidth_hz;
        positive("composite gain", gain)?;
        positive("noise power", noise_w)?;
        Ok(Self {
            bandwidth_hz,
            pathloss_const_linear,
            pathloss_exponent,
            reference_distance_m,
            distance_m,
            noise_psd_w_per_hz,
            p_max_w,
            gain,
            noise_w,
        })
    }

    /// Default simulation channel: 1 MHz, g0 = -40 dB at 1 m, theta = 4,
    /// 100 m, -174 dBm/Hz, 100 mW.
    pub fn reference() -> Self {
        Self::new(
            1e6,
            db_to_linear(-40.0),
            4.0,
            1.0,
            100.0,
            dbm_to_watts(-174.0),
            0.1,
        )
        .expect("reference channel is valid")
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn pathloss_const_linear(&self) -> f64 {
        self.pathloss_const_linear
    }
    pub fn pathloss_exponent(&self) -> f64 {
        self.pathloss_exponent
    }
    pub fn reference_distance_m(&self) -> f64 {
        self.reference_distance_m
    }
    pub fn distance_m(&self) -> f64 {
        self.distance_m
    }
    pub fn noise_psd_w_per_hz(&self) -> f64 {
        self.noise_psd_w_per_hz
    }
    pub fn p_max_w(&self) -> f64 {
        self.p_max_w
    }

    /// `G = g0 (L0 / L)^theta`.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// `P_N = N0 w`.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_w
    }

    /// Same channel with a different peak power.
    pub fn with_p_max(&self, p_max_w: f64) -> Result<Self> {
        positive("p_max_w", p_max_w)?;
        Ok(Self { p_max_w, ..*self })
    }
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { what, value })
    }
}

pub fn db_to_linear(x_db: f64) -> f64 {
    libm::pow(10.0, x_db / 10.0)
}

pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    db_to_linear(x_dbm - 30.0)
}

/// Shannon rate in bits/s. `rate(0) == 0` exactly.
pub fn rate(p: f64, ch: &ChannelConfig) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain {
            what: "transmit power",
            value: p,
        });
    }
    Ok(ch.bandwidth_hz * libm::log1p(ch.gain * p / ch.noise_w) / LN_2)
}

/// Smallest admissible rate inverse `D = 1 / rate(p_max)`.
pub fn xi_lower_bound(ch: &ChannelConfig) -> f64 {
    1.0 / (ch.bandwidth_hz * libm::log1p(ch.gain * ch.p_max_w / ch.noise_w) / LN_2)
}

/// Maps a rate inverse back to the power that achieves it:
/// `p = (2^(1/(w xi)) - 1) P_N / G`.
pub fn rate_inverse_to_power(xi: f64, ch: &ChannelConfig) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::Domain {
            what: "rate inverse",
            value: xi,
        });
    }
    let lower = xi_lower_bound(ch);
    if xi < lower * (1.0 - 1e-12) {
        return Err(Error::InfeasiblePower {
            xi,
            lower_bound: lower,
        });
    }
    if xi.is_infinite() {
        return Ok(0.0);
    }
    if xi <= lower {
        return Ok(ch.p_max_w);
    }
    let p = libm::expm1(LN_2 / (ch.bandwidth_hz * xi)) * ch.noise_w / ch.gain;
    // xi within the 1e-12 slack of D maps onto p_max itself.
    Ok(p.min(ch.p_max_w))
}

/// A validated rate inverse (`D <= xi < inf`), in seconds per bit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RateInverse(f64);

impl RateInverse {
    pub fn new(xi: f64, ch: &ChannelConfig) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Domain {
                what: "rate inverse",
                value: xi,
            });
        }
        let lower = xi_lower_bound(ch);
        if xi < lower * (1.0 - 1e-12) {
            return Err(Error::InfeasiblePower {
                xi,
                lower_bound: lower,
            });
        }
        Ok(Self(xi))
    }

    /// Rate inverse of a strictly positive power.
    pub fn from_power(p: f64, ch: &ChannelConfig) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Domain {
                what: "transmit power",
                value: p,
            });
        }
        Self::new(1.0 / rate(p, ch)?, ch)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn to_power(self, ch: &ChannelConfig) -> f64 {
        rate_inverse_to_power(self.0, ch).expect("validated at construction")
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "rate inverse",
            value: xi,
        })
    }
}

/// `psi(xi) = xi (2^(1/(w xi)) - 1)`: convex and decreasing on `xi > 0`, tending
/// to `ln 2 / w`.
pub fn psi(xi: f64, bandwidth_hz: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(xi * libm::expm1(LN_2 / (bandwidth_hz * xi)))
}

/// `-psi'(xi) = 1 - 2^u (1 - u ln 2)` with `u = 1/(w xi)`; positive and
/// decreasing from `+inf` to `0`.
pub(crate) fn neg_psi_prime(xi: f64, bandwidth_hz: f64) -> f64 {
    let v = LN_2 / (bandwidth_hz * xi);
    if v > 700.0 {
        return f64::INFINITY;
    }
    if v < 0.5 {
        // 1 - e^v (1 - v) = sum_{k>=2} (k-1) v^k / k!, free of cancellation.
        let mut term = v; // v^k / k! at k = 1
        let mut sum = 0.0;
        for k in 2..40 {
            term *= v / k as f64;
            let add = (k - 1) as f64 * term;
            sum += add;
            if add < sum * 1e-18 {
                break;
            }
        }
        sum
    } else {
        1.0 - libm::exp(v) * (1.0 - v)
    }
}

/// First and second derivative of [`psi`]. `psi' <= 0 <= psi''`.
pub fn psi_derivatives(xi: f64, bandwidth_hz: f64) -> Result<(f64, f64)> {
    check_xi(xi)?;
    let first = -neg_psi_prime(xi, bandwidth_hz);
    let v = LN_2 / (bandwidth_hz * xi);
    let second = libm::exp(v) * v * v / xi;
    Ok((first, second))
}

/// Root of `-psi'(xi) = x / C`, the stationarity condition of the power
/// subproblem under an aggregate multiplier `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiValue {
    Finite(f64),
    /// `x == 0`: no finite stationary point, the root lies at `+inf`.
    Unbounded,
}

impl PhiValue {
    /// Clips into `[lo, hi]`; `Unbounded` maps to `hi`.
    pub fn clip(self, lo: f64, hi: f64) -> f64 {
        match self {
            PhiValue::Finite(xi) => xi.clamp(lo, hi),
            PhiValue::Unbounded => hi,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, PhiValue::Unbounded)
    }
}

const PHI_RESIDUAL_TOL: f64 = 1e-12;
const PHI_BRACKET_TOL: f64 = 1e-14;

/// Solves `-psi'(xi) = x / weight_c` by bisection. The bracket starts at
/// `[D/10, 10 D]` and is widened by doubling until it encloses the root.
pub fn phi(x: f64, ch: &ChannelConfig, weight_c: f64) -> Result<PhiValue> {
    phi_from(x, ch.bandwidth_hz, weight_c, xi_lower_bound(ch))
}

pub(crate) fn phi_from(x: f64, bandwidth_hz: f64, weight_c: f64, anchor: f64) -> Result<PhiValue> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "dual aggregate",
            value: x,
        });
    }
    if !(weight_c > 0.0) || !weight_c.is_finite() {
        return Err(Error::Domain {
            what: "energy weight",
            value: weight_c,
        });
    }
    if x == 0.0 {
        return Ok(PhiValue::Unbounded);
    }
    let target = x / weight_c;
    let h = |xi: f64| neg_psi_prime(xi, bandwidth_hz);

    let mut lo = anchor / 10.0;
    let mut hi = anchor * 10.0;
    while h(lo) < target {
        lo /= 2.0;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Domain {
                what: "dual aggregate",
                value: x,
            });
        }
    }
    while h(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain {
                what: "dual aggregate",
                value: x,
            });
        }
    }

    // The residual bound alone is loose where -psi' is flat (large xi), so the
    // bracket is also narrowed to a relative width of PHI_BRACKET_TOL.
    for _ in 0..4096 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = h(mid) - target;
        if r == 0.0 || (r.abs() <= PHI_RESIDUAL_TOL && hi - lo <= PHI_BRACKET_TOL * hi) {
            return Ok(PhiValue::Finite(mid));
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Bracket collapsed to adjacent floats: return the better end.
    let best = if (h(lo) - target).abs() <= (h(hi) - target).abs() {
        lo
    } else {
        hi
    };
    Ok(PhiValue::Finite(best))
}
