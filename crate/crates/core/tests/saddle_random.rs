use avckit::{random_code_capacity, Avc, SaddleOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_channel(rng: &mut ChaCha8Rng) -> Avc {
    let (nx, ns, ny) = (rng.gen_range(2..5), rng.gen_range(2..5), rng.gen_range(2..5));
    let mut w = Vec::new();
    for _ in 0..nx * ns {
        let row: Vec<f64> = (0..ny).map(|_| rng.gen_range(0.05..1.0)).collect();
        let t: f64 = row.iter().sum();
        w.extend(row.into_iter().map(|v| v / t));
    }
    let mut g: Vec<f64> = (0..nx).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut ell: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..1.0)).collect();
    g[0] = 0.0;
    ell[0] = 0.0;
    let gamma = rng.gen_range(0.1..0.8);
    let lambda = rng.gen_range(0.05..0.6);
    Avc::from_fn(nx, ns, ny, |x, s, y| w[(x * ns + s) * ny + y], g, ell, gamma, lambda).unwrap()
}

#[test]
fn saddle_certificates_on_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..60 {
        let avc = random_channel(&mut rng);
        let s = random_code_capacity(&avc, &SaddleOptions::default())
            .unwrap_or_else(|e| panic!("channel {i}: {e}"));
        assert!(s.gap.abs() <= 2e-7, "channel {i}: gap {}", s.gap);
        assert!(s.value >= -1e-9 && s.value <= (avc.output_size() as f64).log2() + 1e-9);
    }
}
