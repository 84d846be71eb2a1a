//! Erasure channel between transmitter and receiver.
//!
//! A transmitted sample is decoded when the received SNR
//! `P_tx g r^{-β} / σ²` exceeds the threshold `γ`, with `g` a unit-mean
//! exponential (Rayleigh power) fading gain. That gives
//! `p_s = exp(-γ σ² / (P_tx r^{-β}))`.

use crate::error::{check_probability, Error, Result};

/// Convert a power level in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert a ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pathloss link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalChannel {
    p_tx_mw: f64,
    r_m: f64,
    beta: f64,
    sigma2_mw: f64,
    gamma: f64,
}

impl PhysicalChannel {
    /// `gamma` is the linear SNR threshold.
    pub fn new(p_tx_mw: f64, r_m: f64, beta: f64, sigma2_mw: f64, gamma: f64) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} = {v} must be positive")))
            }
        };
        positive("p_tx", p_tx_mw)?;
        positive("r", r_m)?;
        positive("sigma2", sigma2_mw)?;
        if !(beta.is_finite() && beta > 2.0) {
            return Err(Error::Parameter(format!("beta = {beta} must exceed 2")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Parameter(format!("gamma = {gamma} must be >= 0")));
        }
        Ok(Self { p_tx_mw, r_m, beta, sigma2_mw, gamma })
    }

    /// Same as [`PhysicalChannel::new`] with the threshold given in dB.
    pub fn with_gamma_db(
        p_tx_mw: f64,
        r_m: f64,
        beta: f64,
        sigma2_mw: f64,
        gamma_db: f64,
    ) -> Result<Self> {
        Self::new(p_tx_mw, r_m, beta, sigma2_mw, db_to_linear(gamma_db))
    }

    pub fn p_tx_mw(&self) -> f64 {
        self.p_tx_mw
    }
    pub fn r_m(&self) -> f64 {
        self.r_m
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn sigma2_mw(&self) -> f64 {
        self.sigma2_mw
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Copy with a different linear threshold.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.p_tx_mw, self.r_m, self.beta, self.sigma2_mw, gamma)
    }

    /// Fading gain the draw must exceed: `γ σ² / (P_tx r^{-β})`.
    pub fn fading_threshold(&self) -> f64 {
        self.gamma * self.sigma2_mw / (self.p_tx_mw * self.r_m.powf(-self.beta))
    }

    /// `exp(-threshold)` under unit-mean Rayleigh power fading.
    pub fn success_probability(&self) -> f64 {
        (-self.fading_threshold()).exp()
    }
}

/// Channel description: either a decoded-sample probability or the link
/// budget it derives from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    Direct { p_s: f64 },
    Physical(PhysicalChannel),
}

impl ChannelSpec {
    pub fn direct(p_s: f64) -> Result<Self> {
        check_probability("p_s", p_s)?;
        Ok(ChannelSpec::Direct { p_s })
    }

    pub fn physical(link: PhysicalChannel) -> Self {
        ChannelSpec::Physical(link)
    }

    pub fn success_probability(&self) -> f64 {
        match self {
            ChannelSpec::Direct { p_s } => *p_s,
            ChannelSpec::Physical(link) => link.success_probability(),
        }
    }

    /// Decide one transmission from an explicit fading draw.
    ///
    /// A gain exactly at the threshold counts as a failure.
    pub fn realize_fading(&self, g: f64) -> Result<bool> {
        match self {
            ChannelSpec::Physical(link) => Ok(g > link.fading_threshold()),
            ChannelSpec::Direct { .. } => Err(Error::ChannelMode(
                "fading realization needs a physical channel".into(),
            )),
        }
    }
}

/// Bernoulli realization of one transmission: success iff `u < p_s`.
pub fn realize(p_s: f64, u: f64) -> bool {
    u < p_s
}

/// Map a uniform draw to a unit-mean exponential gain by inversion.
pub fn exponential_gain(u: f64) -> f64 {
    -(1.0 - u).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CALIBRATED_EXPONENT: f64 = 0.0812;

    fn calibrated(gamma: f64) -> PhysicalChannel {
        let (p_tx, r, beta) = (1.0, 30.0, 4.0);
        let sigma2 = CALIBRATED_EXPONENT * p_tx * f64::powf(r, -beta);
        PhysicalChannel::new(p_tx, r, beta, sigma2, gamma).unwrap()
    }

    #[test]
    fn zero_threshold_always_decodes() {
        let link = calibrated(0.0);
        assert_eq!(ChannelSpec::physical(link).success_probability(), 1.0);
    }

    #[test]
    fn calibrated_link_probability() {
        let ps = ChannelSpec::physical(calibrated(1.0)).success_probability();
        assert!((ps - 0.9220).abs() < 1e-4, "{ps}");
    }

    #[test]
    fn ten_db_is_tenth_power() {
        let p1 = ChannelSpec::physical(calibrated(1.0)).success_probability();
        let p10 = ChannelSpec::physical(calibrated(db_to_linear(10.0))).success_probability();
        assert!((p10 - p1.powi(10)).abs() < 1e-12);
        assert!((p10 - 0.445).abs() < 2e-3, "{p10}");
    }

    #[test]
    fn quoted_link_budget_is_nearly_lossless() {
        // r = 30 m, sigma² = -100 dBm, P_tx = 1 mW, beta = 4 at 0 dB.
        let link = PhysicalChannel::with_gamma_db(1.0, 30.0, 4.0, dbm_to_mw(-100.0), 0.0).unwrap();
        let ps = ChannelSpec::physical(link).success_probability();
        assert!((ps - 0.99992).abs() < 1e-5, "{ps}");
    }

    #[test]
    fn direct_mode_passthrough() {
        assert_eq!(ChannelSpec::direct(0.445).unwrap().success_probability(), 0.445);
        assert!(ChannelSpec::direct(1.5).is_err());
        assert!(ChannelSpec::direct(f64::NAN).is_err());
    }

    #[test]
    fn invalid_physical_parameters() {
        assert!(PhysicalChannel::new(0.0, 30.0, 4.0, 1e-10, 1.0).is_err());
        assert!(PhysicalChannel::new(1.0, -1.0, 4.0, 1e-10, 1.0).is_err());
        assert!(PhysicalChannel::new(1.0, 30.0, 2.0, 1e-10, 1.0).is_err());
        assert!(PhysicalChannel::new(1.0, 30.0, 4.0, 0.0, 1.0).is_err());
        assert!(PhysicalChannel::new(1.0, 30.0, 4.0, 1e-10, -0.5).is_err());
    }

    #[test]
    fn bernoulli_realization_edges() {
        for u in [0.0, 0.3, 0.999_999] {
            assert!(realize(1.0, u));
            assert!(!realize(0.0, u));
        }
    }

    #[test]
    fn fading_realization_boundary() {
        let spec = ChannelSpec::physical(calibrated(1.0));
        let thr = calibrated(1.0).fading_threshold();
        assert!((thr - CALIBRATED_EXPONENT).abs() < 1e-15);
        assert!(!spec.realize_fading(thr).unwrap());
        assert!(spec.realize_fading(1e300).unwrap());
        assert!(ChannelSpec::direct(0.5).unwrap().realize_fading(1.0).is_err());
    }

    #[test]
    fn empirical_bernoulli_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| realize(0.445, rng.random())).count();
        let rate = hits as f64 / n as f64;
        assert!((0.4435..=0.4465).contains(&rate), "{rate}");
    }

    #[test]
    fn fading_and_bernoulli_modes_agree() {
        let spec = ChannelSpec::physical(calibrated(1.0));
        let ps = spec.success_probability();
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fading = (0..n)
            .filter(|_| spec.realize_fading(exponential_gain(rng.random())).unwrap())
            .count() as f64
            / n as f64;
        let bernoulli = (0..n).filter(|_| realize(ps, rng.random())).count() as f64 / n as f64;
        let se = (ps * (1.0 - ps) / n as f64).sqrt();
        assert!((fading - (-CALIBRATED_EXPONENT).exp()).abs() < 3.0 * se, "{fading}");
        assert!((fading - bernoulli).abs() < 4.0 * se * 2f64.sqrt());
    }

    #[test]
    fn monotone_in_link_parameters() {
        let base = calibrated(1.0);
        let ps = |l: PhysicalChannel| ChannelSpec::physical(l).success_probability();
        let higher_gamma = base.with_gamma(2.0).unwrap();
        let noisier =
            PhysicalChannel::new(base.p_tx_mw(), base.r_m(), base.beta(), base.sigma2_mw() * 2.0, 1.0)
                .unwrap();
        let louder =
            PhysicalChannel::new(base.p_tx_mw() * 2.0, base.r_m(), base.beta(), base.sigma2_mw(), 1.0)
                .unwrap();
        assert!(ps(higher_gamma) < ps(base));
        assert!(ps(noisier) < ps(base));
        assert!(ps(louder) > ps(base));
    }
}
