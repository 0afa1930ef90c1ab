//! Release gate: every shipping criterion checked in order, one printed
//! line per criterion, with the time budgets pinned in code. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines as they
//! complete; on failure the collected reasons are repeated in the panic
//! message.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dwork::algebra::{scalar, Scalar, SuperPolynomial};
use dwork::fmanifold::{solve_f_manifold, verify_f_axioms, verify_ind_qm};
use dwork::frobenius::{frobenius_structure, rhb_check, verify_frobenius_axioms, verify_pairing_axioms};
use dwork::gaussmanin::HbarWindow;
use dwork::groebner::{
    charge_zero_basis, jacobian_groebner, reduce_to_basis, BasisData, DivisionStrategy,
    GroebnerData,
};
use dwork::model::{build_model, ModelSetup};
use dwork::primitive::{solve_weak_primitive, solve_zeta_truncated, verify_gcm, Seeds};
use dwork::series::{MultiIndex, SymTensor};
use dwork::verify::{run_suite, SuiteConfig, SuiteKind};

type Context = (ModelSetup, GroebnerData, BasisData);

fn prepare(n: usize, k: usize, generators: &[&str]) -> Context {
    let model = build_model(n, k, generators).expect("test model is valid");
    let gb = jacobian_groebner(&model);
    let basis = charge_zero_basis(&model, &gb).expect("finite quotient");
    (model, gb, basis)
}

fn cubic() -> Context {
    prepare(2, 1, &["x0^3+x1^3+x2^3"])
}

fn quadrics() -> Context {
    prepare(3, 2, &["x0^2+x1^2+x2^2+x3^2", "x0^2+2*x1^2+3*x2^2+4*x3^2"])
}

fn quartic() -> Context {
    prepare(3, 1, &["x0^4+x1^4+x2^4+x3^4"])
}

fn budget(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!(
            "{label} took {elapsed:.2?}, budget {limit:.2?}"
        ))
    }
}

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn criterion(&mut self, number: usize, label: &str, run: impl FnOnce() -> Result<(), String>) {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        match &outcome {
            Ok(()) => println!("criterion {number:2} ({label}): PASS ({elapsed:.2?})"),
            Err(why) => println!("criterion {number:2} ({label}): FAIL ({elapsed:.2?}): {why}"),
        }
        if let Err(why) = outcome {
            self.failures.push(format!("criterion {number} ({label}): {why}"));
        }
    }
}

fn check(condition: bool, message: impl Fn() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn weight_profile(basis: &BasisData) -> Vec<usize> {
    let top = basis.weights().iter().copied().max().unwrap_or(0);
    let mut profile = vec![0usize; top as usize + 1];
    for w in basis.weights() {
        profile[*w as usize] += 1;
    }
    profile
}

fn tensor_entries(t: &SymTensor<Vec<Scalar>>) -> Vec<(MultiIndex, Vec<Scalar>)> {
    t.entries().map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn dimension_oracle() -> Result<(), String> {
    let start = Instant::now();
    let (_, _, basis) = cubic();
    let names: Vec<String> = (0..basis.mu()).map(|i| basis.element(i).to_string()).collect();
    check(names == ["1", "y1*x0*x1*x2"], || {
        format!("cubic basis came out as {names:?}")
    })?;
    let (_, _, basis) = quadrics();
    check(basis.mu() == 2, || {
        format!("two-quadric mu = {}, expected 2", basis.mu())
    })?;
    budget("cubic and two-quadric bases", start.elapsed(), Duration::from_secs(1))?;

    let start = Instant::now();
    let (_, _, basis) = quartic();
    check(basis.mu() == 21, || {
        format!("quartic mu = {}, expected 21", basis.mu())
    })?;
    let profile = weight_profile(&basis);
    check(profile == [1, 19, 1], || {
        format!("quartic weight profile {profile:?}, expected [1, 19, 1]")
    })?;
    budget("quartic basis", start.elapsed(), Duration::from_secs(60))
}

fn suite_gate(
    contexts: &[(&str, &Context)],
    suites: Vec<SuiteKind>,
    samples: usize,
    seed: u64,
    min_samples: usize,
) -> Result<(), String> {
    for (name, (model, gb, basis)) in contexts {
        let mut cfg = SuiteConfig::new(seed, samples);
        cfg.suites = suites.clone();
        let report = run_suite(model, gb, basis, &cfg).map_err(|e| e.to_string())?;
        check(report.passed(), || {
            let broken: Vec<String> = report
                .suites
                .iter()
                .flat_map(|s| s.checks.iter())
                .filter(|c| !c.passed)
                .map(|c| {
                    format!(
                        "{}: {}",
                        c.name,
                        c.counterexample.as_deref().unwrap_or("no witness")
                    )
                })
                .collect();
            format!("{name}: {}", broken.join("; "))
        })?;
        let deepest = report
            .suites
            .iter()
            .flat_map(|s| s.checks.iter())
            .map(|c| c.samples)
            .max()
            .unwrap_or(0);
        check(deepest >= min_samples, || {
            format!("{name}: deepest check saw {deepest} samples, needed {min_samples}")
        })?;
    }
    Ok(())
}

fn f_manifold_gate(contexts: &[(&str, &Context)]) -> Result<(), String> {
    let start = Instant::now();
    for (name, (model, gb, basis)) in contexts {
        let out = solve_f_manifold(model, gb, basis, 3, DivisionStrategy::FirstMatch)
            .map_err(|e| format!("{name}: {e}"))?;
        let report = verify_f_axioms(&out, 3);
        check(report.passed(), || format!("{name}: axiom check failed: {report:?}"))?;
        for degree in 2..=3 {
            for indices in MultiIndex::all_of_degree(basis.mu(), degree) {
                let qm = verify_ind_qm(model, gb, basis, &out, &indices)
                    .map_err(|e| format!("{name}: {e}"))?;
                check(qm.holds, || {
                    format!("{name}: congruence fails at t^[{indices}]")
                })?;
            }
        }
    }
    budget("order-3 solves with axiom checks", start.elapsed(), Duration::from_secs(30))
}

fn strategy_independence_gate(contexts: &[(&str, &Context)]) -> Result<(), String> {
    for (name, (model, gb, basis)) in contexts {
        let first = solve_f_manifold(model, gb, basis, 3, DivisionStrategy::FirstMatch)
            .map_err(|e| format!("{name}: {e}"))?;
        let last = solve_f_manifold(model, gb, basis, 3, DivisionStrategy::LastMatch)
            .map_err(|e| format!("{name}: {e}"))?;
        check(tensor_entries(&first.a) == tensor_entries(&last.a), || {
            format!("{name}: structure constants depend on the division strategy")
        })?;
    }
    Ok(())
}

fn weak_primitive_gate() -> Result<(), String> {
    let start = Instant::now();
    let (model, gb, basis) = cubic();
    let seeds = Seeds::zero(&model, &basis);
    let strategy = DivisionStrategy::FirstMatch;

    let weak = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy)
        .map_err(|e| e.to_string())?;
    let report = verify_gcm(&model, &gb, &basis, &weak, strategy).map_err(|e| e.to_string())?;
    check(report.passed(), || {
        format!("closure residual is not zero: {:?}", report.failures)
    })?;

    let truncated = solve_zeta_truncated(&model, &gb, &basis, &seeds, 1, 2, strategy)
        .map_err(|e| e.to_string())?;
    check(
        weak.a0 == truncated.a0 && weak.a1 == truncated.a1 && weak.zeta == truncated.zeta,
        || "level-1 truncation differs from the weak solve".to_string(),
    )?;

    let short = solve_zeta_truncated(&model, &gb, &basis, &seeds, 0, 2, strategy)
        .map_err(|e| e.to_string())?;
    check(short.n_zeta() == 0, || {
        format!("level-0 truncation kept {} levels", short.n_zeta())
    })?;
    for alpha in 0..basis.mu() {
        for beta in alpha..basis.mu() {
            let key = MultiIndex::pair(alpha, beta);
            let product = &basis.element(alpha) * &basis.element(beta);
            let first = reduce_to_basis(&model, &gb, &basis, &product, strategy)
                .map_err(|e| e.to_string())?;
            let negated = first.delta_lambda.scale(&scalar(-1));
            let second = reduce_to_basis(&model, &gb, &basis, &negated, strategy)
                .map_err(|e| e.to_string())?;
            check(short.a0.get(&key) == Some(&first.coefficients), || {
                format!("short-system level 0 differs at ({alpha},{beta})")
            })?;
            check(short.a1.get(&key) == Some(&second.coefficients), || {
                format!("short-system level 1 differs at ({alpha},{beta})")
            })?;
        }
    }
    budget("weak primitive solves", start.elapsed(), Duration::from_secs(60))
}

fn frobenius_gate(contexts: &[(&str, &Context)]) -> Result<(), String> {
    for (name, (model, gb, basis)) in contexts {
        let data = frobenius_structure(model, gb, basis, DivisionStrategy::FirstMatch)
            .map_err(|e| format!("{name}: {e}"))?;
        let report = verify_frobenius_axioms(&data);
        check(report.passed(), || format!("{name}: {report:?}"))?;
        check(data.is_nondegenerate(), || {
            format!("{name}: metric is degenerate")
        })?;
        if *name == "cubic" {
            let expected = vec![
                vec![scalar(0), scalar(1)],
                vec![scalar(1), scalar(0)],
            ];
            check(data.metric() == expected, || {
                format!("cubic metric {:?}", data.metric())
            })?;
        }
    }
    Ok(())
}

fn pairing_gate(contexts: &[(&str, &Context)]) -> Result<(), String> {
    for (name, (model, gb, basis)) in contexts {
        let mut rng = ChaCha8Rng::seed_from_u64(271828);
        let report = verify_pairing_axioms(
            model,
            gb,
            basis,
            &mut rng,
            20,
            HbarWindow::new(-2, 4),
            2,
            DivisionStrategy::FirstMatch,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        check(report.passed(), || {
            format!(
                "{name}: H1 {:?} H2 {:?} H3 {:?} H4 {:?} H5 {:?}",
                report.symmetry,
                report.sesquilinearity,
                report.parameter_compat,
                report.hbar_compat,
                report.metric_slice
            )
        })?;
        check(report.samples == 20, || {
            format!("{name}: ran {} sample pairs, wanted 20", report.samples)
        })?;
    }
    Ok(())
}

fn rhb_gate(contexts: &[(&str, &Context)]) -> Result<(), String> {
    for (name, (model, gb, basis)) in contexts {
        let lifts: Vec<Vec<SuperPolynomial>> =
            (0..basis.mu()).map(|i| vec![basis.element(i)]).collect();
        let report = rhb_check(model, gb, basis, &lifts, DivisionStrategy::FirstMatch)
            .map_err(|e| format!("{name}: {e}"))?;
        check(report.passed(), || {
            format!("{name}: {:?}", report.failures)
        })?;
        check(report.elements_checked == basis.mu(), || {
            format!("{name}: checked {} of {}", report.elements_checked, basis.mu())
        })?;
        let expected: Vec<Scalar> = basis
            .weights()
            .iter()
            .map(|w| scalar(model.k() as i64 + w))
            .collect();
        check(report.diagonal == expected, || {
            format!("{name}: diagonal {:?}", report.diagonal)
        })?;
        if *name == "cubic" {
            check(report.diagonal == vec![scalar(1), scalar(2)], || {
                format!("cubic diagonal {:?}", report.diagonal)
            })?;
        }
    }
    Ok(())
}

fn determinism_gate() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = dir.path().join("cubic.json");
    std::fs::write(&model, r#"{"n": 2, "k": 1, "generators": ["x0^3+x1^3+x2^3"]}"#)
        .map_err(|e| e.to_string())?;
    let path = model.to_str().expect("utf8 path");
    let commands: Vec<Vec<&str>> = vec![
        vec!["basis", path],
        vec!["fmanifold", "--order", "2", path],
        vec!["primitive", "--order", "2", path],
        vec!["frobenius", path],
        vec!["pairing", "--hbar-order", "4", path],
        vec!["verify", "--suite", "all", "--samples", "10", "--seed", "5", path],
    ];
    for args in commands {
        let run = |args: &[&str]| {
            Command::new(env!("CARGO_BIN_EXE_dwork"))
                .args(args)
                .output()
                .map_err(|e| e.to_string())
        };
        let first = run(&args)?;
        let second = run(&args)?;
        check(first.status.success(), || {
            format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&first.stderr)
            )
        })?;
        check(first.stdout == second.stdout && !first.stdout.is_empty(), || {
            format!("{args:?} is not byte-deterministic")
        })?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let cubic_ctx = cubic();
    let quadrics_ctx = quadrics();
    let quartic_ctx = quartic();
    let pair: Vec<(&str, &Context)> =
        vec![("cubic", &cubic_ctx), ("two quadrics", &quadrics_ctx)];
    let all: Vec<(&str, &Context)> = vec![
        ("cubic", &cubic_ctx),
        ("two quadrics", &quadrics_ctx),
        ("quartic", &quartic_ctx),
    ];

    let mut gate = Gate { failures: Vec::new() };
    gate.criterion(1, "dimension oracle", dimension_oracle);
    gate.criterion(2, "dGBV axiom suite", || {
        suite_gate(
            &all,
            vec![SuiteKind::Differentials, SuiteKind::Dgbv],
            50,
            20260818,
            50,
        )
    });
    gate.criterion(3, "weak Q-Delta lemma", || {
        suite_gate(&all, vec![SuiteKind::QsDeltaLemma], 50, 20260818, 50)
    });
    gate.criterion(4, "F-manifold constants", || f_manifold_gate(&pair));
    gate.criterion(5, "strategy independence", || strategy_independence_gate(&pair));
    gate.criterion(6, "weak primitive form", weak_primitive_gate);
    gate.criterion(7, "Frobenius axioms", || frobenius_gate(&all));
    gate.criterion(8, "pairing axioms", || pairing_gate(&all));
    gate.criterion(9, "RHB normal form", || rhb_gate(&all));
    gate.criterion(10, "CLI determinism", determinism_gate);

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
