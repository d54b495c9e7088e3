//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{amo, max_abs_diff, sorted, w, GOLDEN};
use qps_core::duality::fourier_conjugation_check;
use qps_core::extension::lipschitz_extension;
use qps_core::grid::TorusGrid;
use qps_core::lattice::SiteSet;
use qps_core::multiscale::{
    eigenvalue_gradient, initial_step, kappa_for, run_multiscale, ContinuationConfig, Growth, MultiscaleConfig,
    RhoRule, ScaleSchedule, SimplicityRule,
};
use qps_core::operator::{build_dual, restrict, DualOperator};
use qps_core::report::{run, DualityOutput};
use qps_core::spectral::{eig_matrix, eig_sym, poisson_expand};

type Outcome = (bool, String);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn desk(coupling: f64, levels: usize) -> MultiscaleConfig {
    MultiscaleConfig {
        schedule: ScaleSchedule::new(6, Growth::Geometric(2), coupling, levels).unwrap(),
        kappa: None,
        rho: RhoRule::Desk,
        continuation: ContinuationConfig {
            simplicity: SimplicityRule::Fixed(1e-2),
            ..ContinuationConfig::default()
        },
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn duality_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for q in 1..=50u64 {
        for p in (0..q).filter(|&p| gcd(p, q) == 1) {
            for l in [0.1, 0.5, 1.0, 2.0] {
                match fourier_conjugation_check(&amo(l, p as f64 / q as f64, 0.17), 4) {
                    Ok(r) if r.frequency.denominators[0] == q => worst = worst.max(r.mismatch),
                    _ => return (false, format!("{p}/{q} at λ = {l} not checked")),
                }
                checks += 1;
            }
        }
    }
    (worst <= 1e-8, format!("{checks} fibered checks, max mismatch {worst:.2e}"))
}

fn decoupled_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (x, a, r) = (rng.random::<f64>(), rng.random::<f64>(), rng.random_range(0..=20usize));
        let b = build_dual(&amo(0.0, a, x), vec![0], r).unwrap();
        let got = eig_matrix(&b.matrix).unwrap().values;
        let want = sorted((-(r as i64)..=r as i64).map(|n| w(&[x + n as f64 * a])).collect());
        worst = worst.max(max_abs_diff(&got, &want));
    }
    (worst <= 1e-12, format!("100 boxes, max deviation {worst:.2e}"))
}

fn initial_bounds(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut accepted, mut violations, mut tries) = (0, 0, 0);
    while accepted < 50 && tries < 10_000 {
        tries += 1;
        let l = 10f64.powf(-3.0 + rng.random::<f64>());
        let (x, a) = (rng.random::<f64>(), rng.random::<f64>());
        let Some(kappa) = kappa_for(&[x], &[a], 6) else { continue };
        let p = amo(l, a, x);
        let Ok(c) = initial_step(&p, 6, kappa) else { continue };
        accepted += 1;
        let dist = c.sites().transfer(&c.psi, &SiteSet::centered_cube(1, 6));
        let centre = c.sites().index_of(&[0]).unwrap();
        let d: f64 = dist
            .iter()
            .enumerate()
            .map(|(i, v)| if i == centre { (v.abs() - 1.0).powi(2) } else { v * v })
            .sum::<f64>()
            .sqrt();
        if (c.energy - w(&[x])).abs() > l * p.potential.sup_norm() || d > 2.0 * l * 2.0 / kappa {
            violations += 1;
        }
    }
    (accepted == 50 && violations == 0, format!("{accepted} certificates, {violations} violations"))
}

fn poisson(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut done, mut worst) = (0, 0.0f64);
    while done < 20 {
        let p = amo(rng.random_range(0.02..0.5), rng.random::<f64>(), rng.random::<f64>());
        let op = DualOperator::new(&p);
        let inner_r = rng.random_range(4..=8usize);
        let outer = SiteSet::centered_cube(1, rng.random_range(8..=16usize).max(inner_r + 1));
        let inner = SiteSet::centered_cube(1, inner_r);
        let s = eig_sym(&restrict(&op, &outer).unwrap()).unwrap();
        let k = rng.random_range(0..s.len());
        if eig_sym(&restrict(&op, &inner).unwrap()).unwrap().distance(s.values[k]) <= 1e-6 {
            continue;
        }
        let got = poisson_expand(&op, &outer, &s.vector(k), s.values[k], &inner).unwrap();
        worst = worst.max(max_abs_diff(&got, &outer.transfer(&s.vector(k), &inner)));
        done += 1;
    }
    (worst <= 1e-8, format!("20 expansions, max error {worst:.2e}"))
}

fn contraction() -> Outcome {
    let diffs = |l: f64| {
        let t = run_multiscale(&amo(l, GOLDEN, 0.13), &desk(l, 3)).unwrap();
        t.certificates.iter().skip(1).map(|c| (c.energy_diff, c.vector_diff)).collect::<Vec<_>>()
    };
    let (a, b) = (diffs(1e-2), diffs(1e-3));
    if a.len() != 2 || b.len() != 2 {
        return (false, format!("levels reached: {} and {}", a.len() + 1, b.len() + 1));
    }
    let ratios: Vec<(f64, f64)> = a.iter().zip(&b).map(|(x, y)| (x.0 / y.0, x.1 / y.1)).collect();
    let pass = ratios.iter().all(|r| r.0 >= 5.0 && r.1 >= 5.0);
    let text = ratios.iter().map(|r| format!("dE ×{:.1}, dψ ×{:.1}", r.0, r.1)).collect::<Vec<_>>().join("; ");
    (pass, text)
}

fn gradients(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut done, mut worst, mut tries) = (0, 0.0f64, 0);
    let h = 1e-6;
    while done < 20 && tries < 1000 {
        tries += 1;
        let (l, x) = (rng.random_range(0.005..0.05), rng.random::<f64>());
        let p = amo(l, GOLDEN, x);
        let energy = |y: f64| {
            run_multiscale(&p.with_phase(vec![y]), &desk(l, 2))
                .ok()
                .filter(|t| t.certificates.len() == 2)
                .map(|t| t.last().energy)
        };
        let Ok(t) = run_multiscale(&p, &desk(l, 2)) else { continue };
        if t.certificates.len() < 2 {
            continue;
        }
        let (Some(up), Some(down)) = (energy(x + h), energy(x - h)) else { continue };
        let g = eigenvalue_gradient(t.last(), &p)[0];
        worst = worst.max((g - (up - down) / (2.0 * h)).abs() / g.abs());
        done += 1;
    }
    (done == 20 && worst <= 1e-5, format!("{done} certificates, max relative error {worst:.2e}"))
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn golden_record(dir: &Path) -> qps_core::report::ResultRecord {
    run(configs().join("golden.toml"), "all", Some(dir)).unwrap().record
}

fn gram(dir: &Path) -> Outcome {
    let Some(DualityOutput::Irrational { families, .. }) = golden_record(dir).duality else {
        return (false, "no family output".into());
    };
    let devs: Vec<f64> = families.iter().map(|f| f.gram.deviation()).collect();
    let enveloped = families.iter().all(|f| f.gram.deviation() <= f.envelope);
    let smallest = families.iter().find(|f| f.coupling == 5e-4).map(|f| f.gram.deviation());
    let monotone = devs.windows(2).all(|d| d[1] < d[0]);
    let pass = enveloped && monotone && smallest.is_some_and(|d| d <= 0.1);
    (pass, format!("deviations [{}] over λ = 5e-2, 5e-3, 5e-4", sci(&devs)))
}

fn refinement(dir: &Path) -> Outcome {
    let Some(DualityOutput::Irrational { intertwiner, .. }) = golden_record(dir).duality else {
        return (false, "no intertwiner output".into());
    };
    let series = |f: &dyn Fn(&qps_core::report::IntertwinerOutput) -> f64| intertwiner.iter().map(f).collect::<Vec<_>>();
    let gram = series(&|o| o.isometry.gram_deviation);
    let inter = series(&|o| o.intertwining);
    let halves = |v: &[f64]| v.len() == 3 && v.windows(2).all(|d| d[1] * 2.0 <= d[0]);
    (
        halves(&gram) && halves(&inter),
        format!("Q*Q − χ_G [{}], intertwining [{}]", sci(&gram), sci(&inter)),
    )
}

fn extension_cases() -> Outcome {
    let (mut passed, mut worst_ratio) = (0, 0.0f64);
    let cases: Vec<(usize, f64, f64)> = vec![
        (1, 0.1, 0.2),
        (1, 0.1, 0.35),
        (1, 0.05, 0.15),
        (1, 0.2, 0.3),
        (1, 0.08, 0.45),
        (2, 0.1, 0.15),
        (2, 0.1, 0.25),
        (2, 0.2, 0.3),
        (2, 0.15, 0.2),
        (2, 0.12, 0.35),
    ];
    for (k, &(dim, delta, hole)) in cases.iter().enumerate() {
        let n = if dim == 1 { 1024 } else { 128 };
        let g = TorusGrid::new(dim, n);
        let mask: Vec<bool> = (0..g.len())
            .map(|i| g.point(i).iter().map(|t| (t - 0.5).powi(2)).sum::<f64>().sqrt() > hole)
            .collect();
        let values: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                0.01 * p.iter().enumerate().map(|(j, t)| (std::f64::consts::TAU * (t + 0.1 * (k + j) as f64)).sin()).product::<f64>()
            })
            .collect();
        let (f, r) = lipschitz_extension(g, &mask, &values, 0.01, delta, 1.0).unwrap();
        let exact = (0..g.len()).filter(|&i| mask[i]).all(|i| f.values[i].to_bits() == values[i].to_bits());
        worst_ratio = worst_ratio.max(r.max_grad_off_mask / r.bound);
        if exact && r.within {
            passed += 1;
        }
    }
    (passed == 10, format!("{passed}/10 cases, max |∇F|/(C′ε/δ) = {worst_ratio:.3}"))
}

fn level_sets(dir: &Path) -> Outcome {
    let out = run(configs().join("decoupled.toml"), "ac-estimate", Some(dir)).unwrap();
    let ac = out.record.ac_estimate.unwrap();
    let Some(arcsine) = ac.arcsine else { return (false, "no arcsine comparison".into()) };
    let sets = ac.level_sets.iter().all(|l| l.within);
    (
        arcsine.max_relative_error <= 0.05 && sets,
        format!(
            "arcsine max bin error {:.2}% over {} bins, {} level sets bounded: {sets}",
            100.0 * arcsine.max_relative_error,
            arcsine.bins.len(),
            ac.level_sets.len()
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("a"), dir.join("b"));
    let ra = golden_record(&a);
    let rb = golden_record(&b);
    let same = std::fs::read(a.join("record.json")).unwrap() == std::fs::read(b.join("record.json")).unwrap();
    (same && ra == rb, format!("record.json identical: {same}"))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let d = |name: &str| tmp.path().join(name);
    let criteria: Vec<(f64, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (30.0, Box::new(duality_exactness)),
        (5.0, Box::new(|| decoupled_oracle(&mut ChaCha8Rng::seed_from_u64(2)))),
        (60.0, Box::new(|| initial_bounds(&mut ChaCha8Rng::seed_from_u64(3)))),
        (60.0, Box::new(|| poisson(&mut ChaCha8Rng::seed_from_u64(4)))),
        (300.0, Box::new(contraction)),
        (60.0, Box::new(|| gradients(&mut rng))),
        (300.0, Box::new(|| gram(&d("gram")))),
        (300.0, Box::new(|| refinement(&d("q")))),
        (60.0, Box::new(extension_cases)),
        (60.0, Box::new(|| level_sets(&d("ac")))),
        (f64::INFINITY, Box::new(|| determinism(&d("det")))),
    ];
    let mut failed = 0;
    for (n, (limit, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = check();
        let secs = t.elapsed().as_secs_f64();
        let ok = pass && secs < limit;
        if !ok {
            failed += 1;
        }
        println!("criterion {}: {} {detail} ({secs:.2}s)", n + 1, if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
