//! Additive white noise link model: path loss, Shannon rate and the
//! transmit power needed to carry a given rate.

use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("test point and site are at the same position (distance {0} m)")]
    CoincidentPositions(f64),
    #[error("channel noise must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
}

/// Propagation and receiver parameters shared by every link in a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link<T> {
    /// Antenna gain (dimensionless).
    pub antenna_gain: T,
    /// Path loss exponent.
    pub path_loss_exponent: T,
    /// Channel noise in W.
    pub noise_w: T,
}

impl<T: Scalar> Link<T> {
    pub fn new(antenna_gain: T, path_loss_exponent: T, noise_w: T) -> Result<Self, RadioError> {
        if noise_w <= T::zero() {
            return Err(RadioError::NonPositiveNoise(noise_w.to_f64_lossy()));
        }
        Ok(Self { antenna_gain, path_loss_exponent, noise_w })
    }

    /// Channel gain `gain / d^n`.
    pub fn gain(&self, distance_m: T) -> Result<T, RadioError> {
        if distance_m <= T::zero() {
            return Err(RadioError::CoincidentPositions(distance_m.to_f64_lossy()));
        }
        Ok(self.antenna_gain / distance_m.powf(self.path_loss_exponent))
    }

    /// Shannon capacity in Mbps of a link at `distance_m` when the station
    /// transmits `transmit_w` over `bandwidth_mhz`.
    pub fn max_bitrate(&self, bandwidth_mhz: T, transmit_w: T, distance_m: T) -> Result<T, RadioError> {
        let gain = self.gain(distance_m)?;
        Ok(shannon_rate(bandwidth_mhz, transmit_w * gain, self.noise_w))
    }

    /// Transmit power in W that exactly achieves `rate_mbps` at `distance_m`.
    pub fn required_transmit_power(&self, rate_mbps: T, bandwidth_mhz: T, distance_m: T) -> Result<T, RadioError> {
        if bandwidth_mhz <= T::zero() {
            return Err(RadioError::NonPositiveBandwidth(bandwidth_mhz.to_f64_lossy()));
        }
        let gain = self.gain(distance_m)?;
        let spectral = (rate_mbps / bandwidth_mhz).exp2() - T::one();
        Ok(self.noise_w / gain * spectral)
    }
}

/// `B log2(1 + received / noise)`; zero when nothing is received.
pub fn shannon_rate<T: Scalar>(bandwidth_mhz: T, received_w: T, noise_w: T) -> T {
    if received_w <= T::zero() {
        return T::zero();
    }
    bandwidth_mhz * (T::one() + received_w / noise_w).log2()
}

pub fn distance<T: Scalar>(a: (T, T), b: (T, T)) -> T {
    (a.0 - b.0).hypot(a.1 - b.1)
}
