//! Draws one network, forms user-centric clusters and compares uplink
//! SINR and rate under fractional power control and full power.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfmec::access::{form_clusters, fpc_power, rate, sinr_all, FpcParams};
use cfmec::channel::{realize_network, ChannelConfig, PilotBook};

fn main() -> cfmec::Result<()> {
    let cfg = ChannelConfig {
        num_aps: 25,
        num_users: 4,
        area_side: 500.0,
        ..ChannelConfig::default()
    };
    let pilots = PilotBook::orthogonal(cfg.num_users);
    let net = realize_network(&cfg, &pilots, &mut ChaCha8Rng::seed_from_u64(7))?;
    let beta: Vec<f64> = (0..cfg.num_users)
        .flat_map(|k| net.beta_column(k))
        .collect();
    let p_max = 0.1;

    for size in [2, 8, 25] {
        let clusters = form_clusters(&beta, cfg.num_aps, cfg.num_users, size)?;
        let fpc: Vec<f64> = (0..cfg.num_users)
            .map(|k| {
                fpc_power(
                    &net.beta_column(k),
                    clusters.cluster(k),
                    FpcParams::default(),
                    p_max,
                )
            })
            .collect::<cfmec::Result<_>>()?;
        let full = vec![p_max; cfg.num_users];
        let g_fpc = sinr_all(&net, &clusters, &fpc)?;
        let g_full = sinr_all(&net, &clusters, &full)?;
        println!("cluster size {size}");
        for k in 0..cfg.num_users {
            println!(
                "  user {k}: strongest APs {:?}  FPC {:.3e} W -> {:.2} Mb/s   full power -> {:.2} Mb/s",
                &clusters.cluster(k)[..size.min(4)],
                fpc[k],
                rate(g_fpc[k], cfg.bandwidth)? / 1e6,
                rate(g_full[k], cfg.bandwidth)? / 1e6
            );
        }
    }
    Ok(())
}
