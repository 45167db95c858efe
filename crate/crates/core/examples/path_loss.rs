//! Three-slope path loss, large-scale gain and receiver noise for the
//! default channel parameters.

use cfmec::channel::{large_scale_gain, noise_power, path_loss_db, ChannelConfig};

fn main() -> cfmec::Result<()> {
    let cfg = ChannelConfig::default();
    println!("path-loss constant L = {:.3} dB", cfg.path_loss_constant());
    println!("noise power          = {:.4e} W", noise_power(&cfg));
    println!();
    println!(
        "{:>10} {:>12} {:>14} {:>14}",
        "d (km)", "PL (dB)", "beta z=0", "beta z=+1"
    );
    for d in [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5] {
        println!(
            "{:>10} {:>12.3} {:>14.4e} {:>14.4e}",
            d,
            path_loss_db(d, &cfg)?,
            large_scale_gain(d, 0.0, &cfg)?,
            large_scale_gain(d, 1.0, &cfg)?
        );
    }
    Ok(())
}
