use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sms_core::dependence::{density_mass, gaussian_rho, rho_from_theta, theta_bounds};
use sms_core::stats::spearman_rho;
use sms_core::{BivariateCopula, CopulaFamily, Resolution};

fn random_thetas(f: CopulaFamily, k: usize, seed: u64) -> Vec<f64> {
    let (lo, hi) = theta_bounds(f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
}

#[test]
fn cdf_examples() {
    let g = BivariateCopula::new(CopulaFamily::Gaussian, 0.5).unwrap();
    assert!((g.cdf(1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
    let c = BivariateCopula::new(CopulaFamily::Clayton, 1.0).unwrap();
    assert!((c.cdf(0.5, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    let f = BivariateCopula::new(CopulaFamily::Fgm, 0.5).unwrap();
    assert!((f.cdf(0.5, 0.5).unwrap() - 0.28125).abs() < 1e-15);
    assert!(g.cdf(1.2, 0.3).is_err());
    assert!(BivariateCopula::new(CopulaFamily::Clayton, 0.0).is_err());
    assert!(BivariateCopula::new(CopulaFamily::Clayton, -0.5).is_err());
}

#[test]
fn margin_property() {
    for f in CopulaFamily::ALL {
        for t in random_thetas(f, 20, 7) {
            let c = BivariateCopula::new(f, t).unwrap();
            for k in 0..50 {
                let u = k as f64 / 49.0;
                assert!((c.cdf(u, 1.0).unwrap() - u).abs() < 1e-12, "{f} {t} {u}");
                assert!((c.cdf(1.0, u).unwrap() - u).abs() < 1e-12, "{f} {t} {u}");
                assert_eq!(c.cdf(u, 0.0).unwrap(), 0.0);
                assert_eq!(c.cdf(0.0, u).unwrap(), 0.0);
            }
        }
    }
}

#[test]
fn densities_integrate_to_one() {
    // 200 nodes lose about 1e-2 of mass for Clayton and Joe beyond rho 0.98
    let res = Resolution::with_nodes(400);
    for f in CopulaFamily::ALL {
        let (lo, hi) = theta_bounds(f).unwrap();
        for k in 0..5 {
            let t = lo + (hi - lo) * (0.05 + 0.9 * k as f64 / 4.0);
            let c = BivariateCopula::new(f, t).unwrap();
            let mass = density_mass(&c, res);
            assert!((mass - 1.0).abs() < 1e-3, "{f} theta={t}: {mass}");
        }
    }
}

#[test]
fn log_pdf_examples() {
    let g = BivariateCopula::new(CopulaFamily::Gaussian, 0.0).unwrap();
    assert!(g.log_pdf(0.2, 0.9).unwrap().abs() < 1e-15);
    let f = BivariateCopula::new(CopulaFamily::Fgm, 1.0).unwrap();
    assert_eq!(f.log_pdf(0.5, 0.5).unwrap(), 0.0);
    assert!(g.log_pdf(0.0, 0.5).is_err() && g.log_pdf(0.5, 1.0).is_err());
}

#[test]
fn rho_map_is_monotone() {
    for f in CopulaFamily::ALL {
        let (lo, hi) = theta_bounds(f).unwrap();
        let rho: Vec<f64> = (0..20)
            .map(|k| rho_from_theta(f, lo + (hi - lo) * k as f64 / 19.0).unwrap())
            .collect();
        let increasing = f != CopulaFamily::GumbelBarnett;
        for w in rho.windows(2) {
            assert!(if increasing { w[1] > w[0] } else { w[1] < w[0] }, "{f}: {w:?}");
        }
    }
}

#[test]
fn sampler_examples() {
    let ind = BivariateCopula::new(CopulaFamily::Gaussian, 0.0).unwrap().sample(10_000, 1);
    let (u, v): (Vec<f64>, Vec<f64>) = ind.into_iter().unzip();
    assert!(spearman_rho(&u, &v).unwrap().abs() < 0.03);
    let dep = BivariateCopula::new(CopulaFamily::Gaussian, 0.9).unwrap().sample(10_000, 2);
    let (u, v): (Vec<f64>, Vec<f64>) = dep.into_iter().unzip();
    assert!((spearman_rho(&u, &v).unwrap() - gaussian_rho(0.9)).abs() < 0.03);
    for f in CopulaFamily::ALL {
        let t = random_thetas(f, 1, 3)[0];
        let c = BivariateCopula::new(f, t).unwrap();
        assert_eq!(c.sample(5, 11), c.sample(5, 11));
    }
}

/// Largest gap between the empirical CDF of `m` draws and the copula CDF on
/// a 10x10 grid.
pub fn ecdf_sup_norm(c: &BivariateCopula, m: usize, seed: u64) -> f64 {
    let draws = c.sample(m, seed);
    let mut counts = [[0usize; 10]; 10];
    for (u, v) in draws {
        // bucket k means "<= (k+1)/10"
        let a = ((u * 10.0).ceil() as usize).clamp(1, 10) - 1;
        let b = ((v * 10.0).ceil() as usize).clamp(1, 10) - 1;
        counts[a][b] += 1;
    }
    let mut worst: f64 = 0.0;
    for a in 0..10 {
        for b in 0..10 {
            let n: usize = (0..=a).map(|i| (0..=b).map(|j| counts[i][j]).sum::<usize>()).sum();
            let (u, v) = ((a + 1) as f64 / 10.0, (b + 1) as f64 / 10.0);
            worst = worst.max((n as f64 / m as f64 - c.cdf(u, v).unwrap()).abs());
        }
    }
    worst
}

#[test]
fn sampler_matches_cdf() {
    for (f, t) in [
        (CopulaFamily::Gaussian, 0.7),
        (CopulaFamily::Clayton, 2.0),
        (CopulaFamily::Gumbel, 2.5),
        (CopulaFamily::Joe, 2.0),
        (CopulaFamily::Amh, -0.6),
        (CopulaFamily::GumbelBarnett, 0.8),
    ] {
        let c = BivariateCopula::new(f, t).unwrap();
        let d = ecdf_sup_norm(&c, 100_000, 5);
        assert!(d <= 0.01, "{f} {t}: {d}");
    }
}
