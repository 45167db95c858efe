use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfmec::access::{form_clusters, fpc_power, sinr, FpcParams};
use cfmec::channel::{path_loss_db, realize_network, ChannelConfig, PilotBook};
use cfmec::compute::{edge_share, evaluate_step, split_task, ComputeConfig};
use cfmec::marl::ReplayBuffer;
use cfmec::neural::{soft_update, Activation, Mlp, MlpSpec};

fn small_channel(num_aps: usize, num_users: usize) -> ChannelConfig {
    ChannelConfig {
        num_aps,
        num_users,
        area_side: 500.0,
        ..ChannelConfig::default()
    }
}

proptest! {
    #[test]
    fn path_loss_is_continuous_at_breakpoints(d0 in 0.005f64..0.05, gap in 0.01f64..0.2) {
        let cfg = ChannelConfig { d0_km: d0, d1_km: d0 + gap, ..ChannelConfig::default() };
        for d in [cfg.d0_km, cfg.d1_km] {
            let at = path_loss_db(d, &cfg).unwrap();
            let above = path_loss_db(d.next_up(), &cfg).unwrap();
            prop_assert!((at - above).abs() < 1e-9);
        }
    }

    #[test]
    fn path_loss_never_increases_with_distance(a in 1e-4f64..2.0, b in 1e-4f64..2.0) {
        let cfg = ChannelConfig::default();
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(path_loss_db(far, &cfg).unwrap() <= path_loss_db(near, &cfg).unwrap());
    }

    #[test]
    fn sinr_rises_with_own_power_and_falls_with_others(
        seed in any::<u64>(),
        k in 0usize..3,
        powers in prop::collection::vec(0.0f64..0.1, 3),
        bump in 1e-4f64..0.1,
    ) {
        let cfg = small_channel(9, 3);
        let pilots = PilotBook::orthogonal(3);
        let net = realize_network(&cfg, &pilots, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let beta: Vec<f64> = (0..3).flat_map(|u| net.beta_column(u)).collect();
        let clusters = form_clusters(&beta, 9, 3, 4).unwrap();
        let base = sinr(k, &net, &clusters, &powers).unwrap();
        let mut own = powers.clone();
        own[k] += bump;
        prop_assert!(sinr(k, &net, &clusters, &own).unwrap() > base);
        let mut other = powers.clone();
        other[(k + 1) % 3] += bump;
        prop_assert!(sinr(k, &net, &clusters, &other).unwrap() <= base);
    }

    #[test]
    fn fpc_coefficient_is_a_valid_fraction(betas in prop::collection::vec(1e-16f64..1e-6, 1..10)) {
        let cluster: Vec<usize> = (0..betas.len()).collect();
        let p = fpc_power(&betas, &cluster, FpcParams::default(), 0.1).unwrap();
        prop_assert!(p > 0.0 && p <= 0.1);
    }

    #[test]
    fn split_conserves_bits(bits in 0.0f64..1e5, alpha in 0.0f64..=1.0) {
        let t = split_task(bits, alpha, &ComputeConfig::default()).unwrap();
        prop_assert_eq!(t.local_bits + t.offload_bits, bits);
        prop_assert!(t.local_bits >= 0.0 && t.offload_bits >= 0.0);
    }

    #[test]
    fn edge_shares_fill_the_server(offloads in prop::collection::vec(0.0f64..1e4, 1..12)) {
        let cfg = ComputeConfig::default();
        let shares = edge_share(&offloads, &cfg);
        if offloads.iter().any(|&b| b > 0.0) {
            assert_relative_eq!(shares.iter().sum::<f64>(), cfg.f_cpu, max_relative = 1e-12);
        } else {
            prop_assert!(shares.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn offloaders_share_one_compute_time(
        bits in prop::collection::vec(2500.0f64..7500.0, 2..8),
        seed in any::<u64>(),
    ) {
        let cfg = ComputeConfig::default();
        let n = bits.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0..=1.0)).collect();
        let ones = vec![1.0; n];
        let rates = vec![1e7; n];
        let users = evaluate_step(&bits, &alpha, &ones, &ones, &rates, &cfg).unwrap();
        let t: Vec<f64> = users.iter().filter(|u| u.task.offload_bits > 0.0).map(|u| u.t_comp).collect();
        for w in t.windows(2) {
            assert_relative_eq!(w[0], w[1], max_relative = 1e-12);
        }
    }

    #[test]
    fn soft_update_contracts(online in prop::collection::vec(-5.0f64..5.0, 1..20), tau in 0.0f64..=1.0) {
        let mut target = vec![1.0; online.len()];
        let before: Vec<f64> = target.iter().zip(&online).map(|(t, o)| (t - o).abs()).collect();
        soft_update(&mut target, &online, tau).unwrap();
        for ((t, o), b) in target.iter().zip(&online).zip(before) {
            prop_assert!((t - o).abs() <= (1.0 - tau) * b + 1e-12);
        }
    }

    #[test]
    fn replay_keeps_the_newest(capacity in 1usize..20, pushes in 0usize..60) {
        let mut buf = ReplayBuffer::new(capacity, 1, 1).unwrap();
        for i in 0..pushes {
            buf.push(&[i as f64], &[0.0], 0.0, &[0.0]).unwrap();
        }
        prop_assert_eq!(buf.len(), pushes.min(capacity));
        if pushes > 0 {
            let oldest = pushes.saturating_sub(capacity) as f64;
            prop_assert_eq!(buf.get(0).unwrap().state[0], oldest);
            prop_assert_eq!(buf.get(buf.len() - 1).unwrap().state[0], (pushes - 1) as f64);
        }
    }

    #[test]
    fn sigmoid_head_stays_in_unit_interval(seed in any::<u64>(), x in prop::collection::vec(-1e3f64..1e3, 6)) {
        let spec = MlpSpec::new(6, vec![8, 8], 2, Activation::Sigmoid);
        let net = Mlp::new(spec, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for y in net.predict(&x).unwrap() {
            prop_assert!((0.0..=1.0).contains(&y));
        }
    }
}
