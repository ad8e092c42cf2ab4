//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vnls::engine::{
    apply_update, estimate_variance, local_energy_h, vnls_epoch, vnls_exact, vqmc_exact, EpochEstimate,
    LocalEnergySample, TrainConfig,
};
use vnls::operators::{Pauli, PauliSum, PauliTerm};
use vnls::oracle::{exact_loss, exact_solve, fidelity, ising_fidelity, ising_identities, rayleigh_quotient, Oracle};
use vnls::problems::{ising_problem, random_pauli_problem, LinearProblem};
use vnls::sampling::{metropolis_sample, SamplerConfig};
use vnls::states::{born_weights, enumerate, DenseState, Flavor, Rbm, Wavefunction};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    (0..dim).map(|_| gaussian(rng)).collect()
}

/// Random Hermitian Pauli sum: real coefficients on random strings.
fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum {
    let list = (0..terms)
        .map(|_| {
            let factors: Vec<(usize, Pauli)> = (0..n)
                .filter_map(|q| match rng.gen_range(0..4) {
                    0 => None,
                    1 => Some((q, Pauli::X)),
                    2 => Some((q, Pauli::Y)),
                    _ => Some((q, Pauli::Z)),
                })
                .collect();
            PauliTerm::new(n, c(rng.gen_range(-1.0..1.0), 0.0), factors).unwrap()
        })
        .collect();
    PauliSum::new(n, list).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_h: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for case in 0..50 {
        let n = 1 + case % 8;
        let terms = rng.gen_range(1..=8);
        let h = random_hermitian(&mut rng, n, terms);
        let psi = DenseState::new(random_vector(&mut rng, 1 << n)).unwrap();
        let mut b_values = random_vector(&mut rng, 1 << n);
        for v in b_values.iter_mut().skip(1) {
            if rng.gen_bool(0.3) {
                *v = c(0.0, 0.0);
            }
        }
        let b = DenseState::new(b_values).unwrap();

        let exact_h = rayleigh_quotient(&h, psi.amplitudes());
        let mut mean_h = c(0.0, 0.0);
        for (x, w) in born_weights(&psi).unwrap() {
            mean_h += local_energy_h(&h, &psi, x).unwrap() * w;
        }
        worst_h = worst_h.max((mean_h - exact_h).norm() / exact_h.norm().max(1.0));

        let est = vnls_exact(&h, &b, &psi).unwrap();
        let loss = exact_loss(&h, b.amplitudes(), psi.amplitudes());
        worst_l = worst_l.max(rel_err(est.objective.re, loss)).max(est.objective.im.abs() / loss.max(1.0));
    }
    let msg = format!("50 cases, worst Rayleigh error {worst_h:.2e}, worst loss error {worst_l:.2e}");
    if worst_h < 1e-10 && worst_l < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn eigenvectors(h: &PauliSum) -> Vec<Vec<Complex64>> {
    let eig = h.to_dense().unwrap().symmetric_eigen();
    (0..eig.eigenvalues.len()).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut hamiltonians = vec![
        PauliSum::parse("1 Z0", 1).unwrap(),
        PauliSum::parse("1 X0\n1 X1\n1 X2\n1 X3\n0.7 Z0 Z1\n0.7 Z1 Z2\n0.7 Z2 Z3", 4).unwrap(),
        PauliSum::parse("1 X0 X1\n1 Y0 Y1\n1 Z0 Z1\n1 X1 X2\n1 Y1 Y2\n1 Z1 Z2\n0.3 Y0\n0.2 X2", 3).unwrap(),
        ising_problem(6, 10.0).unwrap().a,
    ];
    for n in [5, 8] {
        hamiltonians.push(random_hermitian(&mut rng, n, 6));
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for h in &hamiltonians {
        for v in eigenvectors(h) {
            let psi = DenseState::new(v).unwrap();
            let samples: Vec<LocalEnergySample> = born_weights(&psi)
                .unwrap()
                .into_iter()
                .map(|(x, weight)| LocalEnergySample {
                    x,
                    weight,
                    local_energy: local_energy_h(h, &psi, x).unwrap(),
                    log_grad: Vec::new(),
                })
                .collect();
            worst = worst.max(estimate_variance(&samples));
            count += 1;
        }
    }
    let msg = format!("{count} eigenvectors of {} operators, largest variance {worst:.2e}", hamiltonians.len());
    if worst < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn finite_difference<W: Wavefunction + Clone>(psi: &W, loss: impl Fn(&W) -> f64, h: f64) -> Vec<f64> {
    let theta = psi.params();
    (0..theta.len())
        .map(|k| {
            let mut plus = psi.clone();
            let mut t = theta.clone();
            t[k] += h;
            plus.set_params(&t).unwrap();
            let mut minus = psi.clone();
            t[k] = theta[k] - h;
            minus.set_params(&t).unwrap();
            (loss(&plus) - loss(&minus)) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 4;
        let flavor = if case % 2 == 0 { Flavor::Real } else { Flavor::Complex };
        let psi = Rbm::init_gaussian(n, 1.0, flavor, 0.3, rng.gen()).unwrap();
        let grad;
        let fd;
        if case % 3 == 0 {
            let h = random_hermitian(&mut rng, n, 5);
            grad = vqmc_exact(&h, &psi).unwrap().gradient;
            fd = finite_difference(&psi, |p| rayleigh_quotient(&h, &enumerate(p).unwrap()).re, 1e-5);
        } else {
            let p = if case % 3 == 1 { ising_problem(n, 10.0).unwrap() } else { random_pauli_problem(n, 4, rng.gen()).unwrap() };
            grad = vnls_exact(&p.a, &p.b, &psi).unwrap().gradient;
            fd = finite_difference(&psi, |s| exact_loss(&p.a, p.b.amplitudes(), &enumerate(s).unwrap()), 1e-5);
        }
        let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&fd).max(1e-8));
    }

    let mut fisher_worst: f64 = 0.0;
    for (n, flavor, seed) in [(4, Flavor::Real, 1u64), (5, Flavor::Complex, 2), (6, Flavor::Real, 3)] {
        let psi = Rbm::init_gaussian(n, 1.0, flavor, 0.3, seed).unwrap();
        let exact = vqmc_exact(&PauliSum::parse("1 I", n).unwrap(), &psi).unwrap().fisher;
        let (batch, _) = metropolis_sample(&psi, 200_000, &SamplerConfig::default(), seed).unwrap();
        let samples = batch
            .indices
            .iter()
            .map(|&x| LocalEnergySample { x, weight: 1.0, local_energy: c(0.0, 0.0), log_grad: psi.log_grad(x) })
            .collect();
        let sampled = EpochEstimate::from_samples(samples, 1.0).fisher;
        fisher_worst = fisher_worst.max((&sampled - &exact).norm() / exact.norm());
    }
    let msg = format!("100 gradients, worst relative error {worst:.2e}; Fisher worst relative Frobenius error {fisher_worst:.3}");
    if worst < 1e-4 && fisher_worst < 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scaled_problem(p: &LinearProblem, ca: f64, cb: f64) -> LinearProblem {
    LinearProblem::new(p.a.scaled(c(ca, 0.0)), p.b.scaled(c(cb, 0.0)).unwrap(), p.kappa).unwrap()
}

fn criterion_4() -> Outcome {
    let config = TrainConfig { batch_size: 256, epochs: 3, ..TrainConfig::default() };
    let mut failures = Vec::new();
    let mut checked = 0;
    for (k, base) in [ising_problem(6, 10.0).unwrap(), random_pauli_problem(5, 6, 11).unwrap()].into_iter().enumerate() {
        for flavor in [Flavor::Real, Flavor::Complex] {
            let psi0 = Rbm::init_gaussian(base.n(), 2.0, flavor, 0.2, 40 + k as u64).unwrap();
            for epoch in 0..config.epochs {
                let reference = vnls_epoch(&base.a, &base.b, &psi0, &config, epoch).unwrap();
                for cb in [2.0, 0.25, 1024.0] {
                    let p = scaled_problem(&base, 1.0, cb);
                    let est = vnls_epoch(&p.a, &p.b, &psi0, &config, epoch).unwrap();
                    let same = est.samples.iter().zip(&reference.samples).all(|(s, r)| s.local_energy == r.local_energy);
                    let mut u1 = psi0.clone();
                    let mut u2 = psi0.clone();
                    apply_update(&mut u1, &reference, &config).unwrap();
                    apply_update(&mut u2, &est, &config).unwrap();
                    if !same || u1.params() != u2.params() {
                        failures.push(format!("b*{cb}"));
                    }
                    checked += 1;
                }
                for ca in [2.0, 0.5, 8.0] {
                    let p = scaled_problem(&base, ca, 1.0);
                    let est = vnls_epoch(&p.a, &p.b, &psi0, &config, epoch).unwrap();
                    let c2 = ca * ca;
                    let energies = est.samples.iter().zip(&reference.samples).all(|(s, r)| s.local_energy == r.local_energy * c2);
                    let grads = est.gradient.iter().zip(&reference.gradient).all(|(g, r)| *g == r * c2);
                    if !(energies && grads) {
                        failures.push(format!("A*{ca}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let msg = format!("{checked} scaled epochs compared bit for bit");
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; mismatches: {failures:?}"))
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut trials = 0;
    let mut violations = 0;
    let mut worst_identity: f64 = 0.0;
    let mut tightest: f64 = 0.0;
    for kappa in [10.0, 50.0] {
        for n in 4..=10 {
            let problem = ising_problem(n, kappa).unwrap();
            let oracle = Oracle::new(&problem).unwrap();
            for t in 0..200 {
                let psi: Vec<Complex64> = if t % 2 == 0 {
                    random_vector(&mut rng, 1 << n)
                } else {
                    let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
                    let noise = random_vector(&mut rng, 1 << n);
                    let scale = eps * norm_c(&oracle.solution) / norm_c(&noise);
                    oracle.solution.iter().zip(&noise).map(|(x, e)| x + e * scale).collect()
                };
                let r = oracle.report(&psi).unwrap();
                let bound = r.bound.unwrap();
                trials += 1;
                if !bound.bound_satisfied {
                    violations += 1;
                }
                tightest = tightest.max(r.trace_distance / bound.bound);
                worst_identity = worst_identity.max((r.trace_distance.powi(2) + r.fidelity - 1.0).abs());
            }
        }
    }

    // shrinking A leaves the corrected bound unchanged but breaks the form
    // without the 1/‖A‖ factor, on states erring along the softest mode
    let base = ising_problem(6, 10.0).unwrap();
    let shrunk = scaled_problem(&base, 0.1, 1.0);
    let oracle = Oracle::new(&shrunk).unwrap();
    let eig = shrunk.a.to_dense().unwrap().symmetric_eigen();
    let (soft, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    let mode: Vec<Complex64> = eig.eigenvectors.column(soft).iter().copied().collect();
    let mut naive_broken = 0;
    let mut corrected_held = 0;
    for eps in [1e-3, 1e-2, 1e-1] {
        let scale = eps * norm_c(&oracle.solution);
        let psi: Vec<Complex64> = oracle.solution.iter().zip(&mode).map(|(x, m)| x + m * scale).collect();
        let b = oracle.report(&psi).unwrap().bound.unwrap();
        naive_broken += usize::from(!b.naive_satisfied);
        corrected_held += usize::from(b.bound_satisfied);
    }

    let msg = format!(
        "{trials} states, {violations} violations, max dist/bound {tightest:.4}, max |dist²+Fid−1| {worst_identity:.1e}; \
         0.1·A: corrected bound held {corrected_held}/3, naive bound failed {naive_broken}/3"
    );
    if violations == 0 && worst_identity < 1e-10 && corrected_held == 3 && naive_broken > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn norm_c(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let mut rows = 0;
    for kappa in [10.0, 50.0, 100.0] {
        for n in 2..=10 {
            let id = ising_identities(n, kappa).unwrap();
            rows += 1;
            let entry_ok = id.entry_perturbation <= id.entry_bound;
            // the norm bound assumes ‖A⁻¹‖ = κ, which the closed-form
            // coefficients only approximate; two qubits is below its range
            let norm_ok = id.distance_sqr <= id.distance_bound;
            if n == 2 {
                notes.push(format!("n=2 kappa={kappa}: ‖b̂−A⁻¹b̂‖²={:.4} vs {:.4}", id.distance_sqr, id.distance_bound));
            }
            if !id.exact_to(1e-12) || !entry_ok || (n >= 3 && !norm_ok) {
                failures.push(format!("n={n} kappa={kappa}: {id:?}"));
            }
        }
    }
    let msg = format!(
        "{rows} (n, kappa) pairs: identities exact to 1e-12 and entry bound for n in 2..=10, norm bound for n in 3..=10 (outside: {})",
        notes.join(", ")
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; failures: {failures:?}"))
    }
}

fn criterion_7() -> Outcome {
    let values: Vec<(usize, f64)> = (5..=12).map(|n| (n, ising_fidelity(n, 10.0).unwrap())).collect();
    let above = values.iter().all(|&(_, f)| f > 0.99);
    let monotone = values.windows(2).all(|w| w[1].1 >= w[0].1);
    let listing: Vec<String> = values.iter().map(|(n, f)| format!("{n}:{f:.6}")).collect();
    let msg = format!("Fid(b, A⁻¹b) at kappa=10: {}", listing.join(" "));
    if above && monotone {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [10, 11, 12] {
        let start = Instant::now();
        let problem = ising_problem(n, 10.0).unwrap();
        let reference = exact_solve(&problem.a, problem.b.amplitudes()).unwrap();
        let mut psi = Rbm::init_gaussian(n, 2.0, Flavor::Real, Flavor::Real.default_sigma(), 0).unwrap();
        let initial = fidelity(&enumerate(&psi).unwrap(), &reference);
        let config = TrainConfig { oracle_every: Some(10), ..TrainConfig::default() };
        let records = vnls::engine::train_vnls(&problem.a, &problem.b, &mut psi, &config, Some(&reference)).unwrap();
        let fids: Vec<f64> = records.iter().filter_map(|r| r.fidelity).collect();
        let last = *fids.last().unwrap();
        let lowest = fids.iter().copied().fold(initial, f64::min);
        let pass = last >= 0.99 && lowest >= initial - 0.01;
        ok &= pass;
        lines.push(format!(
            "n={n}: initial {initial:.6}, final {last:.8}, lowest {lowest:.6}, {:.0}s",
            start.elapsed().as_secs_f64()
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn window_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let problem = ising_problem(12, 10.0).unwrap();
    let mut psi = Rbm::init_gaussian(12, 2.0, Flavor::Complex, Flavor::Complex.default_sigma(), 0).unwrap();
    let config = TrainConfig::default();
    let records = vnls::engine::train_vnls(&problem.a, &problem.b, &mut psi, &config, None).unwrap();
    let w = records.len() / 10;
    let loss: Vec<f64> = records.iter().map(|r| r.loss).collect();
    let var: Vec<f64> = records.iter().map(|r| r.loss_var).collect();
    let (early, late) = (window_mean(&loss[..w]), window_mean(&loss[loss.len() - w..]));
    let (early_var, late_var) = (window_mean(&var[..w]), window_mean(&var[var.len() - w..]));
    let msg = format!(
        "loss first 10% {early:.3e}, last 10% {late:.3e}; loss variance {early_var:.3e} -> {late_var:.3e}; {:.0}s",
        start.elapsed().as_secs_f64()
    );
    if late < 0.25 * early && late_var < early_var {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_vnls")).args(args).output().expect("run vnls");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let h_path = dir.path().join("h.op");
    std::fs::write(&h_path, "n=5\n1 X0\n1 X1\n1 X2\n1 X3\n1 X4\n0.5 Z0 Z1\n0.5 Z2 Z3\n-0.3 Y1 Y2\n").unwrap();
    let runs: [Vec<&str>; 3] = [
        vec!["solve", "--ising", "7", "10", "--epochs", "25", "--batch", "256", "--oracle-every", "5", "--seed", "9"],
        vec!["solve", "--ising", "6", "20", "--model", "rbm-complex", "--epochs", "15", "--batch", "200", "--chains", "3"],
        vec!["vqmc", "--operator", h_path.to_str().unwrap(), "--epochs", "20", "--batch", "128", "--seed", "4"],
    ];
    let mut identical = 0;
    for args in &runs {
        let a = run_cli(args);
        let b = run_cli(args);
        if a == b && !a.is_empty() {
            identical += 1;
        }
    }
    let psi = Rbm::init_gaussian(6, 2.0, Flavor::Complex, 0.2, 3).unwrap();
    let (b1, _) = metropolis_sample(&psi, 1000, &SamplerConfig::default(), 77).unwrap();
    let (b2, _) = metropolis_sample(&psi, 1000, &SamplerConfig::default(), 77).unwrap();
    let msg = format!("{identical}/{} CLI runs byte-identical on repeat, sampler batches equal: {}", runs.len(), b1 == b2);
    if identical == runs.len() && b1 == b2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("estimator consistency", criterion_1),
        ("zero variance at eigenvectors", criterion_2),
        ("gradient and Fisher correctness", criterion_3),
        ("scaling invariance", criterion_4),
        ("error bound", criterion_5),
        ("Ising identities", criterion_6),
        ("Ising fidelity scan", criterion_7),
        ("real RBM training", criterion_8),
        ("complex RBM training", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Option<Vec<usize>> = std::env::var("VNLS_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if filter.as_ref().is_some_and(|f| !f.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
