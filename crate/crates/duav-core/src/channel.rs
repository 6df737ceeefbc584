//! Propagation: power-law path loss, Rayleigh/Rician fading, SINR.
//!
//! Path loss is a pure power law `d^-alpha` with a 1 m clamp; the exponent
//! depends only on whether an endpoint is airborne. Fading gains are
//! unit-mean and hash-derived from `(drop_seed, tx_id, rx_id)`, so any code
//! path sees the same channel regardless of evaluation order.

use crate::config::SimConfig;
use crate::deployment::{Node, NodeId};
use crate::rng::{mix3, splitmix64, unit_halfopen, unit_openclosed};

/// Small-scale fading family of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    Rayleigh,
    Rician { k_db: f64 },
}

/// Fading family plus path loss exponent for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkClass {
    pub fading: Fading,
    pub alpha: f64,
}

/// Any airborne endpoint makes the link line-of-sight: Rician fading with
/// the air exponent. Ground-to-ground links are Rayleigh with the ground
/// exponent.
pub fn classify_link(tx: &Node, rx: &Node, cfg: &SimConfig) -> LinkClass {
    if tx.is_airborne() || rx.is_airborne() {
        LinkClass {
            fading: Fading::Rician {
                k_db: cfg.rician_k_db,
            },
            alpha: cfg.alpha_air,
        }
    } else {
        LinkClass {
            fading: Fading::Rayleigh,
            alpha: cfg.alpha_ground,
        }
    }
}

/// Fading-free received power: `tx_power * d^-alpha`.
/// Callers clamp the distance via [`crate::deployment::prop_distance`].
pub fn mean_rss(tx_power_mw: f64, distance_m: f64, alpha: f64) -> f64 {
    tx_power_mw * distance_m.powf(-alpha)
}

/// Received power with a fading gain applied.
pub fn received_power(tx_power_mw: f64, gain: f64, distance_m: f64, alpha: f64) -> f64 {
    tx_power_mw * gain * distance_m.powf(-alpha)
}

/// Signal over noise-plus-interference.
pub fn sinr(signal_mw: f64, interference_mw: f64, noise_mw: f64) -> f64 {
    debug_assert!(noise_mw > 0.0);
    debug_assert!(interference_mw >= 0.0);
    signal_mw / (noise_mw + interference_mw)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Draws the unit-mean power gain for one (tx, rx) link. The draw is a pure
/// function of its arguments: Rayleigh gains are Exponential(1); Rician
/// gains are |h|^2 for h with LoS/scatter power split K/(K+1) vs 1/(K+1).
pub fn draw_gain(class: &LinkClass, tx_id: NodeId, rx_id: NodeId, drop_seed: u64) -> f64 {
    let h = mix3(drop_seed, tx_id as u64, rx_id as u64);
    let u1 = unit_openclosed(splitmix64(h ^ 0xA5A5_A5A5_A5A5_A5A5));
    match class.fading {
        Fading::Rayleigh => -u1.ln(),
        Fading::Rician { k_db } => {
            let k = dbm_to_mw(k_db); // same 10^(x/10) map, dimensionless here
                                     // Written via 1/k so that k = +inf degrades to a pure LoS gain of 1.
            let los_power = 1.0 / (1.0 + 1.0 / k);
            let scatter_power = 1.0 - los_power;
            let u2 = unit_halfopen(splitmix64(h ^ 0x5A5A_5A5A_5A5A_5A5A));
            // Box-Muller pair for the scatter component.
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            let sigma = (scatter_power / 2.0).sqrt();
            let re = los_power.sqrt() + sigma * r * theta.cos();
            let im = sigma * r * theta.sin();
            re * re + im * im
        }
    }
}

/// Deterministic per-drop channel: repeated gain queries for the same link
/// agree, across threads and call orders.
#[derive(Debug, Clone, Copy)]
pub struct ChannelRealization {
    pub drop_seed: u64,
}

impl ChannelRealization {
    pub fn new(drop_seed: u64) -> Self {
        ChannelRealization { drop_seed }
    }

    pub fn gain(&self, class: &LinkClass, tx_id: NodeId, rx_id: NodeId) -> f64 {
        draw_gain(class, tx_id, rx_id, self.drop_seed)
    }

    /// Received power over the (tx -> rx) leg with fading, class and clamp
    /// resolved from the endpoints.
    pub fn leg_power_mw(&self, tx: &Node, rx: &Node, tx_power_mw: f64, cfg: &SimConfig) -> f64 {
        let class = classify_link(tx, rx, cfg);
        let d = crate::deployment::prop_distance(tx.pos, rx.pos, cfg);
        received_power(tx_power_mw, self.gain(&class, tx.id, rx.id), d, class.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::table1_flying_bs;
    use crate::deployment::Role;

    fn ground(id: NodeId, x: f64) -> Node {
        Node {
            id,
            role: Role::GroundUe,
            pos: [x, 0.0, 0.0],
        }
    }

    fn airborne(id: NodeId, z: f64) -> Node {
        Node {
            id,
            role: Role::Uav,
            pos: [0.0, 0.0, z],
        }
    }

    #[test]
    fn classify_by_endpoint_altitude() {
        let cfg = table1_flying_bs();
        let c = classify_link(&ground(1, 0.0), &airborne(2, 300.0), &cfg);
        assert_eq!(c.alpha, 2.0);
        assert!(matches!(c.fading, Fading::Rician { k_db } if k_db == 10.0));

        let c = classify_link(&ground(1, 0.0), &ground(2, 5.0), &cfg);
        assert_eq!(c.alpha, 4.0);
        assert_eq!(c.fading, Fading::Rayleigh);

        // Airborne transmitter to ground eavesdropper is still an air link.
        let e = Node {
            id: 3,
            role: Role::Eavesdropper,
            pos: [10.0, 0.0, 0.0],
        };
        let c = classify_link(&airborne(1, 200.0), &e, &cfg);
        assert_eq!(c.alpha, 2.0);
        assert!(matches!(c.fading, Fading::Rician { .. }));
    }

    #[test]
    fn mean_rss_arithmetic() {
        assert_eq!(mean_rss(200.0, 1.0, 2.0), 200.0);
        assert!((mean_rss(200.0, 10.0, 2.0) - 2.0).abs() < 1e-12);
        assert!((mean_rss(230.0, 10.0, 4.0) - 0.023).abs() < 1e-15);
    }

    #[test]
    fn received_power_cases() {
        assert_eq!(
            received_power(200.0, 1.0, 10.0, 2.0),
            mean_rss(200.0, 10.0, 2.0)
        );
        assert_eq!(received_power(200.0, 0.0, 10.0, 2.0), 0.0);
        assert!((received_power(200.0, 2.0, 10.0, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_cases() {
        assert_eq!(sinr(1e-13, 0.0, 1e-13), 1.0);
        let noise = dbm_to_mw(-130.0);
        assert!((noise - 1e-13).abs() < 1e-25);
        assert!((sinr(1e-12, 0.0, noise) - 10.0).abs() < 1e-9);
        assert!((sinr(1e-12, 9e-13, 1e-13) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dbm_roundtrip() {
        for x in [-130.0, -120.0, 0.0, 23.0, 53.6] {
            let back = mw_to_dbm(dbm_to_mw(x));
            assert!((back - x).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn gain_is_deterministic_per_link() {
        let class = LinkClass {
            fading: Fading::Rayleigh,
            alpha: 4.0,
        };
        let a = draw_gain(&class, 17, 42, 1234);
        let b = draw_gain(&class, 17, 42, 1234);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(draw_gain(&class, 17, 43, 1234).to_bits(), a.to_bits());
        assert_ne!(draw_gain(&class, 17, 42, 1235).to_bits(), a.to_bits());
    }

    #[test]
    fn rician_pure_los_limit() {
        let class = LinkClass {
            fading: Fading::Rician {
                k_db: f64::INFINITY,
            },
            alpha: 2.0,
        };
        for i in 0..100 {
            let g = draw_gain(&class, i, i + 1, 7);
            assert!((g - 1.0).abs() < 1e-12, "gain {g}");
        }
        // Very large finite K behaves the same to first order.
        let class = LinkClass {
            fading: Fading::Rician { k_db: 300.0 },
            alpha: 2.0,
        };
        let g = draw_gain(&class, 1, 2, 7);
        assert!((g - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rayleigh_moments() {
        let class = LinkClass {
            fading: Fading::Rayleigh,
            alpha: 4.0,
        };
        let n = 100_000u32;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for i in 0..n {
            let g = draw_gain(&class, i, 1 << 20, 99);
            sum += g;
            sum2 += g * g;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
        assert!((0.97..=1.03).contains(&var), "var {var}");
    }

    #[test]
    fn rician_10db_moments() {
        // K = 10 (10 dB): E[g] = 1, Var[g] = (1+2K)/(1+K)^2 = 21/121.
        let class = LinkClass {
            fading: Fading::Rician { k_db: 10.0 },
            alpha: 2.0,
        };
        let n = 100_000u32;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for i in 0..n {
            let g = draw_gain(&class, i, 1 << 21, 99);
            sum += g;
            sum2 += g * g;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let want_var = 21.0 / 121.0;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
        assert!(
            (var - want_var).abs() < 0.03 * want_var,
            "var {var} want {want_var}"
        );
    }
}
