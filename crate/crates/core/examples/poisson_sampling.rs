//! Seeded Poisson draws: sample mean and variance against the rate.

use emml::harness::poisson_draw;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;
    for mean in [0.3, 4.0, 9.9, 10.0, 55.0, 1e4] {
        let draws: Vec<f64> = (0..n).map(|_| poisson_draw(mean, &mut rng) as f64).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1) as f64;
        println!("rate {mean:>8}: mean {m:>10.3}  variance {v:>10.3}");
    }
}
