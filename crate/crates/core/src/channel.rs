//! Radio environment of the cell-free network.
//!
//! Access points and users are dropped uniformly over a square area. Each
//! AP/user pair gets a large-scale gain from a three-slope path-loss model
//! with log-normal shadowing, a Rayleigh small-scale fade redrawn every
//! coherence block, and a least-squares estimate obtained from one round of
//! orthogonal uplink pilots.
//!
//! Distances inside the path-loss model are in kilometres, the carrier
//! frequency is in MHz and antenna heights are in metres.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of the radio environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub num_aps: usize,
    pub num_users: usize,
    /// Side of the square deployment area, metres.
    pub area_side: f64,
    /// Carrier frequency, MHz.
    pub carrier_freq_mhz: f64,
    /// AP antenna height, metres.
    pub ap_height: f64,
    /// User antenna height, metres.
    pub user_height: f64,
    /// Shadow-fading standard deviation, dB.
    pub shadow_std_db: f64,
    /// Inner breakpoint of the three-slope model, km.
    pub d0_km: f64,
    /// Outer breakpoint of the three-slope model, km.
    pub d1_km: f64,
    /// System bandwidth, Hz. Shared by all users without channelization.
    pub bandwidth: f64,
    /// Noise temperature, kelvin.
    pub noise_temp: f64,
    /// Receiver noise figure, dB.
    pub noise_figure_db: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Pilot transmit power, watts.
    pub pilot_power: f64,
    /// Number of environment steps per small-scale redraw.
    pub coherence_steps: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            num_aps: 100,
            num_users: 10,
            area_side: 1000.0,
            carrier_freq_mhz: 1900.0,
            ap_height: 15.0,
            user_height: 1.65,
            shadow_std_db: 10.0,
            d0_km: 0.01,
            d1_km: 0.05,
            bandwidth: 5e6,
            noise_temp: 290.0,
            noise_figure_db: 9.0,
            boltzmann: 1.381e-23,
            pilot_power: 0.1,
            coherence_steps: 1,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_aps < self.num_users {
            return Err(Error::invalid(format!(
                "need M >= K >= 1, got M={} K={}",
                self.num_aps, self.num_users
            )));
        }
        if !(self.d0_km > 0.0 && self.d1_km > self.d0_km) {
            return Err(Error::invalid("need d1 > d0 > 0"));
        }
        let positive = [
            ("area_side", self.area_side),
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("ap_height", self.ap_height),
            ("user_height", self.user_height),
            ("bandwidth", self.bandwidth),
            ("noise_temp", self.noise_temp),
            ("boltzmann", self.boltzmann),
            ("pilot_power", self.pilot_power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.shadow_std_db < 0.0 {
            return Err(Error::invalid("shadow_std_db must be non-negative"));
        }
        if self.coherence_steps == 0 {
            return Err(Error::invalid("coherence_steps must be at least 1"));
        }
        Ok(())
    }

    /// Frequency- and height-dependent constant of the three-slope model, dB.
    pub fn path_loss_constant(&self) -> f64 {
        let lf = self.carrier_freq_mhz.log10();
        46.3 + 33.9 * lf - 13.82 * self.ap_height.log10() - (1.1 * lf - 0.7) * self.user_height
            + 1.56 * lf
            - 0.8
    }
}

/// Three-slope path loss in dB (a negative number) at distance `d_km`.
pub fn path_loss_db(d_km: f64, cfg: &ChannelConfig) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return Err(Error::invalid(format!(
            "distance must be positive, got {d_km}"
        )));
    }
    let l = cfg.path_loss_constant();
    let (d0, d1) = (cfg.d0_km, cfg.d1_km);
    let pl = if d_km > d1 {
        -l - 35.0 * d_km.log10()
    } else if d_km > d0 {
        -l - 10.0 * (d_km * d_km * d1.powf(1.5)).log10()
    } else {
        -l - 10.0 * (d0 * d0 * d1.powf(1.5)).log10()
    };
    Ok(pl)
}

/// Linear large-scale gain for a given distance and standard-normal shadowing
/// sample. Shadowing only applies beyond the outer breakpoint.
pub fn large_scale_gain(d_km: f64, shadow_z: f64, cfg: &ChannelConfig) -> Result<f64> {
    let pl = path_loss_db(d_km, cfg)?;
    let shadow_db = if d_km > cfg.d1_km {
        cfg.shadow_std_db * shadow_z
    } else {
        0.0
    };
    Ok(10f64.powf(pl / 10.0) * 10f64.powf(shadow_db / 10.0))
}

/// One CN(0, 1) sample.
pub fn draw_small_scale<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Thermal noise power at each AP, watts.
pub fn noise_power(cfg: &ChannelConfig) -> f64 {
    cfg.boltzmann * cfg.noise_temp * cfg.bandwidth * 10f64.powf(cfg.noise_figure_db / 10.0)
}

/// A set of pilot sequences, one per user, each of length `tau_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    tau_p: usize,
    // pilots[k][n]
    pilots: Vec<Vec<Complex64>>,
}

impl PilotBook {
    /// Unit-norm columns of the `k x k` DFT matrix, pairwise orthogonal.
    pub fn orthogonal(num_users: usize) -> Self {
        let tau_p = num_users;
        let scale = 1.0 / (tau_p as f64).sqrt();
        let pilots = (0..num_users)
            .map(|k| {
                (0..tau_p)
                    .map(|n| {
                        let phase = -2.0 * std::f64::consts::PI * (k * n) as f64 / tau_p as f64;
                        Complex64::from_polar(scale, phase)
                    })
                    .collect()
            })
            .collect();
        Self { tau_p, pilots }
    }

    /// Builds a pilot book from explicit sequences, checking unit norm and
    /// pairwise orthogonality.
    pub fn from_sequences(pilots: Vec<Vec<Complex64>>) -> Result<Self> {
        let tau_p = pilots.first().map(Vec::len).unwrap_or(0);
        if tau_p == 0 || pilots.iter().any(|p| p.len() != tau_p) {
            return Err(Error::invalid("pilots must be non-empty and equal length"));
        }
        if pilots.len() > tau_p {
            return Err(Error::invalid("more pilots than pilot length"));
        }
        for (i, a) in pilots.iter().enumerate() {
            for (j, b) in pilots.iter().enumerate().skip(i) {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (ip - want).norm() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "pilots {i} and {j} not orthonormal (inner product {ip})"
                    )));
                }
            }
        }
        Ok(Self { tau_p, pilots })
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn num_users(&self) -> usize {
        self.pilots.len()
    }

    pub fn pilot(&self, k: usize) -> &[Complex64] {
        &self.pilots[k]
    }

    /// Received pilot vector at one AP given that AP's channels to every user
    /// and a noise vector.
    pub fn received(
        &self,
        channels: &[Complex64],
        noise: &[Complex64],
        pilot_power: f64,
    ) -> Vec<Complex64> {
        let amp = (self.tau_p as f64 * pilot_power).sqrt();
        let mut y = noise.to_vec();
        for (g, psi) in channels.iter().zip(&self.pilots) {
            for (yn, p) in y.iter_mut().zip(psi) {
                *yn += amp * g * p;
            }
        }
        y
    }
}

/// Least-squares estimate of the channel of `user` from one AP's received
/// pilot vector.
pub fn ls_estimate(
    received: &[Complex64],
    pilots: &PilotBook,
    user: usize,
    pilot_power: f64,
) -> Result<Complex64> {
    if received.len() != pilots.tau_p() {
        return Err(Error::invalid(format!(
            "received pilot vector has length {}, expected {}",
            received.len(),
            pilots.tau_p()
        )));
    }
    if user >= pilots.num_users() {
        return Err(Error::invalid(format!("no pilot for user {user}")));
    }
    let proj: Complex64 = pilots
        .pilot(user)
        .iter()
        .zip(received)
        .map(|(p, y)| p.conj() * y)
        .sum();
    Ok(proj / (pilots.tau_p() as f64 * pilot_power).sqrt())
}

/// One realization of the network: geometry, large-scale gains and the
/// current coherence block's fades and estimates. All `M x K` matrices are
/// stored row-major with the AP index as row.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub num_aps: usize,
    pub num_users: usize,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub shadow_z: Vec<f64>,
    pub beta: Vec<f64>,
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub g_hat: Vec<Complex64>,
    pub noise_power: f64,
}

impl NetworkRealization {
    #[inline]
    pub fn idx(&self, m: usize, k: usize) -> usize {
        m * self.num_users + k
    }

    #[inline]
    pub fn beta(&self, m: usize, k: usize) -> f64 {
        self.beta[self.idx(m, k)]
    }

    #[inline]
    pub fn g(&self, m: usize, k: usize) -> Complex64 {
        self.g[self.idx(m, k)]
    }

    #[inline]
    pub fn g_hat(&self, m: usize, k: usize) -> Complex64 {
        self.g_hat[self.idx(m, k)]
    }

    /// Large-scale gains of every AP towards user `k`.
    pub fn beta_column(&self, k: usize) -> Vec<f64> {
        (0..self.num_aps).map(|m| self.beta(m, k)).collect()
    }

    /// Draws fresh small-scale fades and repeats the pilot round.
    pub fn redraw_small_scale<R: Rng + ?Sized>(
        &mut self,
        cfg: &ChannelConfig,
        pilots: &PilotBook,
        rng: &mut R,
    ) {
        for (h, (g, beta)) in self.h.iter_mut().zip(self.g.iter_mut().zip(&self.beta)) {
            *h = draw_small_scale(rng);
            *g = beta.sqrt() * *h;
        }
        self.estimate(cfg, pilots, rng);
    }

    fn estimate<R: Rng + ?Sized>(&mut self, cfg: &ChannelConfig, pilots: &PilotBook, rng: &mut R) {
        let k_users = self.num_users;
        let noise_std = self.noise_power.sqrt();
        let mut noise = vec![Complex64::new(0.0, 0.0); pilots.tau_p()];
        for m in 0..self.num_aps {
            for w in noise.iter_mut() {
                *w = noise_std * draw_small_scale(rng);
            }
            let row = &self.g[m * k_users..(m + 1) * k_users];
            let y = pilots.received(row, &noise, cfg.pilot_power);
            for k in 0..k_users {
                // dimensions are consistent by construction
                self.g_hat[m * k_users + k] =
                    ls_estimate(&y, pilots, k, cfg.pilot_power).expect("pilot dimensions match");
            }
        }
    }
}

fn distance_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() / 1000.0
}

/// Drops APs and users, draws shadowing, fades and a pilot round.
pub fn realize_network<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    pilots: &PilotBook,
    rng: &mut R,
) -> Result<NetworkRealization> {
    cfg.validate()?;
    let ap_positions: Vec<[f64; 2]> = (0..cfg.num_aps)
        .map(|_| {
            [
                rng.random::<f64>() * cfg.area_side,
                rng.random::<f64>() * cfg.area_side,
            ]
        })
        .collect();
    let user_positions: Vec<[f64; 2]> = (0..cfg.num_users)
        .map(|_| {
            [
                rng.random::<f64>() * cfg.area_side,
                rng.random::<f64>() * cfg.area_side,
            ]
        })
        .collect();
    realize_with_positions(cfg, pilots, ap_positions, user_positions, rng)
}

/// Same as [`realize_network`] with a fixed geometry.
pub fn realize_with_positions<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    pilots: &PilotBook,
    ap_positions: Vec<[f64; 2]>,
    user_positions: Vec<[f64; 2]>,
    rng: &mut R,
) -> Result<NetworkRealization> {
    cfg.validate()?;
    let (m_aps, k_users) = (ap_positions.len(), user_positions.len());
    if m_aps != cfg.num_aps || k_users != cfg.num_users || pilots.num_users() != k_users {
        return Err(Error::invalid("geometry does not match the channel config"));
    }
    let n = m_aps * k_users;
    let mut shadow_z = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for ap in &ap_positions {
        for user in &user_positions {
            // a zero distance is clamped to the flat inner region
            let d = distance_km(*ap, *user).max(cfg.d0_km * 1e-3);
            let z: f64 = StandardNormal.sample(rng);
            shadow_z.push(z);
            beta.push(large_scale_gain(d, z, cfg)?);
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut net = NetworkRealization {
        num_aps: m_aps,
        num_users: k_users,
        ap_positions,
        user_positions,
        shadow_z,
        beta,
        h: vec![zero; n],
        g: vec![zero; n],
        g_hat: vec![zero; n],
        noise_power: noise_power(cfg),
    };
    net.redraw_small_scale(cfg, pilots, rng);
    Ok(net)
}
