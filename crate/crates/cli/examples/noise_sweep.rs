//! Accuracy of a brute-force nearest-pattern recognizer, and of the engine,
//! on the sensorimotor corpus under sensor bit-flip noise.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use fpeng::codec::decode_categorical;
use fpeng_cli::config::SensorimotorConfig;
use fpeng_cli::corpus::{MOTOR, SOUND, VISION};
use fpeng_cli::demos::train_sensorimotor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = SensorimotorConfig::default();
    println!("rate  seed  oracle  engine");
    for rate in [0.0, 0.05, 0.1, 0.15, 0.2, 0.3] {
        let (mut o_total, mut e_total) = (0.0, 0.0);
        for seed in 0..10u64 {
            let (corpus, mc) = train_sensorimotor(&cfg, seed).unwrap();
            let clean: Vec<Vec<f64>> = (0..corpus.patterns.len())
                .map(|i| {
                    let (a, b) = corpus.sensor_vectors(i).unwrap();
                    [a.as_slice(), b.as_slice()].concat()
                })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let (mut o_ok, mut e_ok, mut n) = (0, 0, 0);
            for i in 0..corpus.patterns.len() {
                for _ in 0..cfg.noise_trials {
                    let s = corpus.noisy_sensors(i, rate, &mut rng).unwrap();
                    let x = [s[VISION].as_slice(), s[SOUND].as_slice()].concat();
                    if oracle::nearest_pattern(&clean, &x) == i {
                        o_ok += 1;
                    }
                    let m = mc.complete(&s, MOTOR).unwrap();
                    if decode_categorical(&m, &corpus.motor).unwrap().0 == corpus.patterns[i].motor {
                        e_ok += 1;
                    }
                    n += 1;
                }
            }
            o_total += o_ok as f64 / n as f64;
            e_total += e_ok as f64 / n as f64;
        }
        println!("{rate:.2}  avg   {:.4}  {:.4}", o_total / 10.0, e_total / 10.0);
    }
}
