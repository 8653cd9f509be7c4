//! Small density and sampling helpers shared by the model families.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// `ln N(x; mean, sd^2)`.
pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    debug_assert!(sd > 0.0, "normal_log_pdf needs sd > 0");
    let z = (x - mean) / sd;
    -0.5 * (2.0 * std::f64::consts::PI).ln() - sd.ln() - 0.5 * z * z
}

/// Log density of a Dirichlet distribution with concentration `alphas`
/// evaluated at a point `p` on the simplex.
pub fn dirichlet_log_pdf(alphas: &[f64], p: &[f64]) -> f64 {
    debug_assert_eq!(alphas.len(), p.len());
    let alpha_sum: f64 = alphas.iter().sum();
    let mut value = ln_gamma(alpha_sum);
    for (&a, &x) in alphas.iter().zip(p) {
        value -= ln_gamma(a);
        if a != 1.0 {
            value += (a - 1.0) * x.ln();
        }
    }
    value
}

/// Draws from a Dirichlet distribution via normalized Gamma variates.
///
/// Components that underflow to zero are kept as zeros (simplex boundary);
/// the draw is retried in the vanishingly rare case that every component
/// underflows.
pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, alphas: &[f64]) -> Vec<f64> {
    debug_assert!(alphas.iter().all(|&a| a > 0.0));
    loop {
        let mut draws = Vec::with_capacity(alphas.len());
        let mut sum = 0.0;
        for &a in alphas {
            let g = Gamma::new(a, 1.0).expect("positive Dirichlet concentration");
            let v = g.sample(rng);
            sum += v;
            draws.push(v);
        }
        if sum > 0.0 {
            for v in &mut draws {
                *v /= sum;
            }
            return draws;
        }
    }
}

/// Draws an index distributed according to `probs` (assumed normalized).
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draws multinomial counts: `n` independent categorical draws, tallied.
pub fn sample_multinomial<R: Rng + ?Sized>(rng: &mut R, n: usize, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        counts[sample_categorical(rng, probs)] += 1;
    }
    counts
}
