use adapam::envs::EnvKind;
use adapam::victim::{rollout, train_victim, VictimTrainConfig};

#[test]
#[ignore]
fn final_sweep() {
    let base = VictimTrainConfig { min_margin: f64::NEG_INFINITY, episodes: 800, epsilon_decay_episodes: 600, epsilon_end: 0.03, ..VictimTrainConfig::default_for(EnvKind::CoopSpread) };
    for (label, cfg) in [
        ("te1-b128", VictimTrainConfig { train_every: 1, batch_size: 128, ..base.clone() }),
        ("te1-g06", VictimTrainConfig { train_every: 1, discount: 0.6, ..base.clone() }),
    ] {
        let t0 = std::time::Instant::now();
        match train_victim(EnvKind::CoopSpread, &cfg) {
            Ok((policy, _)) => {
                let (_, sum) = rollout(EnvKind::CoopSpread, &policy, 100, 999, None).unwrap();
                eprintln!("RESULT[{label}] GREEDY reward {:.3} ({:.0}s)", sum.mean_reward, t0.elapsed().as_secs_f64());
            }
            Err(e) => eprintln!("RESULT[{label}] FAILED: {e}"),
        }
    }
}
