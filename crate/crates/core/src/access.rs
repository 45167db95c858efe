//! User-centric AP clustering, uplink SINR with MRC combining over the
//! serving cluster, achievable rate, and fractional power control.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::NetworkRealization;
use crate::error::{Error, Result};

/// Serving clusters, one ordered list of AP indices per user (strongest
/// large-scale gain first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn cluster(&self, k: usize) -> &[usize] {
        &self.clusters[k]
    }

    pub fn cluster_size(&self, k: usize) -> usize {
        self.clusters[k].len()
    }
}

/// Picks the `cluster_size` APs with the largest gain for each user. `beta`
/// is `M x K` row-major. Ties go to the lower AP index.
pub fn form_clusters(
    beta: &[f64],
    num_aps: usize,
    num_users: usize,
    cluster_size: usize,
) -> Result<ClusterAssignment> {
    if cluster_size == 0 || cluster_size > num_aps {
        return Err(Error::invalid(format!(
            "cluster size {cluster_size} outside [1, {num_aps}]"
        )));
    }
    if beta.len() != num_aps * num_users {
        return Err(Error::invalid("beta matrix has the wrong size"));
    }
    let clusters = (0..num_users)
        .map(|k| {
            let mut order: Vec<usize> = (0..num_aps).collect();
            // stable sort keeps ascending AP index among equal gains
            order.sort_by(|&a, &b| beta[b * num_users + k].total_cmp(&beta[a * num_users + k]));
            order.truncate(cluster_size);
            order
        })
        .collect();
    Ok(ClusterAssignment { clusters })
}

/// Per-user transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub eta: Vec<f64>,
    pub p_max: Vec<f64>,
    pub p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(eta: Vec<f64>, p_max: Vec<f64>) -> Result<Self> {
        if eta.len() != p_max.len() {
            return Err(Error::invalid("eta and p_max lengths differ"));
        }
        if let Some(e) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!(
                "power coefficient {e} outside [0, 1]"
            )));
        }
        let p = eta.iter().zip(&p_max).map(|(e, pm)| e * pm).collect();
        Ok(Self { eta, p_max, p })
    }

    pub fn uniform(eta: Vec<f64>, p_max: f64) -> Result<Self> {
        let n = eta.len();
        Self::new(eta, vec![p_max; n])
    }
}

/// MRC-combined uplink SINR of user `k`, evaluated on the current fades and
/// estimates. Interference is summed over every other user as seen by user
/// `k`'s cluster.
pub fn sinr(
    k: usize,
    net: &NetworkRealization,
    clusters: &ClusterAssignment,
    powers: &[f64],
) -> Result<f64> {
    let cluster = clusters.cluster(k);
    if cluster.is_empty() {
        return Err(Error::invalid(format!("user {k} has an empty cluster")));
    }
    if powers.len() != net.num_users {
        return Err(Error::invalid("one power per user required"));
    }
    let mut num = 0.0;
    let mut interference = 0.0;
    for (j, &pj) in powers.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &m in cluster {
            acc += net.g_hat(m, k).conj() * net.g(m, j);
        }
        if j == k {
            num = pj * acc.norm_sqr();
        } else {
            interference += pj * acc.norm_sqr();
        }
    }
    let est_energy: f64 = cluster.iter().map(|&m| net.g_hat(m, k).norm_sqr()).sum();
    let denom = interference + net.noise_power * est_energy;
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / denom)
}

/// SINR of every user.
pub fn sinr_all(
    net: &NetworkRealization,
    clusters: &ClusterAssignment,
    powers: &[f64],
) -> Result<Vec<f64>> {
    (0..net.num_users)
        .map(|k| sinr(k, net, clusters, powers))
        .collect()
}

/// Shannon rate in bits/s.
pub fn rate(sinr: f64, bandwidth: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::invalid(format!("negative SINR {sinr}")));
    }
    Ok(bandwidth * (1.0 + sinr).log2())
}

/// Fractional power control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpcParams {
    /// Target received power, watts.
    pub p0: f64,
    /// Path-loss compensation exponent.
    pub nu: f64,
}

impl Default for FpcParams {
    fn default() -> Self {
        // -35 dBm
        Self {
            p0: 10f64.powf(-35.0 / 10.0) * 1e-3,
            nu: 0.5,
        }
    }
}

/// Fractional power control: `min(p_max, p0 * lambda^-nu)` where lambda sums
/// the user's large-scale gains over its serving cluster.
pub fn fpc_power(
    beta_column: &[f64],
    cluster: &[usize],
    fpc: FpcParams,
    p_max: f64,
) -> Result<f64> {
    let lambda: f64 = cluster.iter().map(|&m| beta_column[m]).sum();
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!(
            "cluster gain sum {lambda} must be positive"
        )));
    }
    Ok(p_max.min(fpc.p0 * lambda.powf(-fpc.nu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{realize_network, ChannelConfig, PilotBook};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_user_net(g: Vec<Complex64>, noise: f64) -> NetworkRealization {
        let m = g.len();
        NetworkRealization {
            num_aps: m,
            num_users: 1,
            ap_positions: vec![[0.0, 0.0]; m],
            user_positions: vec![[0.0, 0.0]],
            shadow_z: vec![0.0; m],
            beta: g.iter().map(|x| x.norm_sqr()).collect(),
            h: vec![Complex64::new(1.0, 0.0); m],
            g_hat: g.clone(),
            g,
            noise_power: noise,
        }
    }

    #[test]
    fn clusters_pick_strongest() {
        // column for a single user
        let c = form_clusters(&[5.0, 1.0, 3.0, 2.0], 4, 1, 2).unwrap();
        assert_eq!(c.cluster(0), &[0, 2]);
        let all = form_clusters(&[5.0, 1.0, 3.0, 2.0], 4, 1, 4).unwrap();
        let mut sorted = all.cluster(0).to_vec();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        let tie = form_clusters(&[4.0, 4.0, 1.0], 3, 1, 1).unwrap();
        assert_eq!(tie.cluster(0), &[0]);
    }

    #[test]
    fn cluster_size_out_of_range() {
        assert!(form_clusters(&[1.0, 2.0], 2, 1, 0).is_err());
        assert!(form_clusters(&[1.0, 2.0], 2, 1, 3).is_err());
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let net = single_user_net(vec![Complex64::new(1.0, 0.0)], 1.0);
        let c = form_clusters(&net.beta, 1, 1, 1).unwrap();
        assert_eq!(sinr(0, &net, &c, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_ap_unit_snr() {
        let sigma2 = 1.7e-13;
        let net = single_user_net(vec![Complex64::new(0.6, 0.8)], sigma2);
        let c = form_clusters(&net.beta, 1, 1, 1).unwrap();
        let g = sinr(0, &net, &c, &[sigma2]).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        assert!((rate(g, 5e6).unwrap() - 5e6).abs() < 1e-6);
    }

    #[test]
    fn perfect_csi_mrc_gain() {
        let g = vec![
            Complex64::new(1e-5, 2e-5),
            Complex64::new(-3e-6, 1e-6),
            Complex64::new(4e-6, -4e-6),
        ];
        let sigma2 = 1e-13;
        let p = 0.05;
        let net = single_user_net(g.clone(), sigma2);
        let c = form_clusters(&net.beta, 3, 1, 3).unwrap();
        let want = p * g.iter().map(|x| x.norm_sqr()).sum::<f64>() / sigma2;
        let got = sinr(0, &net, &c, &[p]).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(0.0, 5e6).unwrap(), 0.0);
        assert!((rate(1.0, 5e6).unwrap() - 5e6).abs() < 1e-6);
        assert!((rate(3.0, 5e6).unwrap() - 1e7).abs() < 1e-6);
        assert!(rate(-0.1, 5e6).is_err());
    }

    #[test]
    fn fpc_values() {
        let fpc = FpcParams::default();
        assert!((fpc.p0 - 3.1623e-7).abs() < 1e-11);
        assert_eq!(fpc_power(&[1e-12], &[0], fpc, 0.1).unwrap(), 0.1);
        let p = fpc_power(&[1e-10], &[0], fpc, 0.1).unwrap();
        assert!((p - 0.031623).abs() < 1e-6);
        let flat = FpcParams { nu: 0.0, ..fpc };
        assert_eq!(fpc_power(&[3.0], &[0], flat, 0.1).unwrap(), fpc.p0);
        assert!(fpc_power(&[0.0], &[0], fpc, 0.1).is_err());
    }

    #[test]
    fn sinr_monotone_in_own_and_interferer_power() {
        let cfg = ChannelConfig {
            num_aps: 12,
            num_users: 3,
            ..ChannelConfig::default()
        };
        let pilots = PilotBook::orthogonal(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let net = realize_network(&cfg, &pilots, &mut rng).unwrap();
            let c = form_clusters(&net.beta, 12, 3, 4).unwrap();
            let mut p: Vec<f64> = (0..3).map(|_| rng.random_range(0.001..0.1)).collect();
            let base = sinr(0, &net, &c, &p).unwrap();
            p[0] *= 1.5;
            assert!(sinr(0, &net, &c, &p).unwrap() > base);
            let own = sinr(0, &net, &c, &p).unwrap();
            p[1] *= 2.0;
            assert!(sinr(0, &net, &c, &p).unwrap() <= own);
        }
    }

    #[test]
    fn sinr_phase_invariant() {
        let cfg = ChannelConfig {
            num_aps: 10,
            num_users: 2,
            ..ChannelConfig::default()
        };
        let pilots = PilotBook::orthogonal(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = realize_network(&cfg, &pilots, &mut rng).unwrap();
        let c = form_clusters(&net.beta, 10, 2, 5).unwrap();
        let p = [0.05, 0.08];
        let base = sinr(0, &net, &c, &p).unwrap();
        let rot = Complex64::from_polar(1.0, 1.234);
        let mut turned = net.clone();
        for m in 0..10 {
            let i = turned.idx(m, 0);
            turned.g[i] *= rot;
            turned.g_hat[i] *= rot;
        }
        let after = sinr(0, &turned, &c, &p).unwrap();
        assert!((after / base - 1.0).abs() < 1e-10);
    }
}
