//! Command-line front end: parse a model document, run the requested
//! solver and print the result as JSON.
//!
//! Every command reads the model from a JSON file {"n": .., "k": ..,
//! "generators": [..]} and writes a single JSON document to standard
//! output (or to `--out`). All rational numbers are serialized as exact
//! strings, object keys are sorted, and runs with equal inputs produce
//! byte-identical output. Exit status 0 means success, 1 a domain error
//! (bad model, weight violation, window underflow), 2 a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::Zero;
use serde_json::{json, Map, Value};

use dwork::algebra::{Scalar, SuperPolynomial};
use dwork::fmanifold::solve_f_manifold;
use dwork::frobenius::{frobenius_structure, modified_pairing, verify_frobenius_axioms};
use dwork::gaussmanin::HbarWindow;
use dwork::groebner::{
    charge_zero_basis, jacobian_groebner, BasisData, DivisionStrategy, GroebnerData,
};
use dwork::model::{model_from_json, ModelSetup};
use dwork::primitive::{solve_weak_primitive, solve_zeta_truncated, Seeds};
use dwork::series::{FormalSeries, SymTensor};
use dwork::verify::{run_suite, SuiteConfig, SuiteKind};

#[derive(Parser)]
#[command(name = "dwork", version, about = "Exact dGBV computations for Calabi-Yau complete intersections", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the charge-zero monomial basis of the Jacobian quotient
    Basis(SharedArgs),
    /// Solve for the structure constants of the formal product
    Fmanifold(FmanifoldArgs),
    /// Solve the closure problem for a weak primitive form
    Primitive(PrimitiveArgs),
    /// Constant structure tensors, the metric and the axiom checks
    Frobenius(SharedArgs),
    /// Table of the modified pairing on basis elements
    Pairing(PairingArgs),
    /// Run the randomized axiom suites
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Model document: {"n": .., "k": .., "generators": [..]}
    model: PathBuf,

    /// Monomial order used by the division engine
    #[arg(long, default_value = "grevlex", value_parser = ["grevlex"])]
    monomial_order: String,

    /// Write the JSON document here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FmanifoldArgs {
    #[command(flatten)]
    shared: SharedArgs,

    /// Truncation order in the deformation parameters
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    order: u32,
}

#[derive(Args)]
struct PrimitiveArgs {
    #[command(flatten)]
    shared: SharedArgs,

    /// Truncation order in the deformation parameters
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    order: u32,

    /// Seed file: {"zeta0": {"0": "polytext", ..}, "zeta1": {..}}
    #[arg(long)]
    zeta_seed: Option<PathBuf>,

    /// Truncate the unknown series at this hbar level instead of
    /// enforcing the full closure relation
    #[arg(long)]
    zeta_hbar_order: Option<u32>,
}

#[derive(Args)]
struct PairingArgs {
    #[command(flatten)]
    shared: SharedArgs,

    /// Upper end of the hbar window [-2, H]
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(i32).range(-2..))]
    hbar_order: i32,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    shared: SharedArgs,

    /// Which suite to run
    #[arg(long, default_value = "all", value_parser = ["all", "differentials", "dgbv", "charge", "qs-delta-lemma"])]
    suite: String,

    /// Random samples per check
    #[arg(long, default_value_t = 50)]
    samples: usize,

    /// Seed for the sample streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Basis(shared) => {
            let (_, _, basis) = prepare(&shared.model)?;
            let names: Vec<String> = (0..basis.mu())
                .map(|i| basis.element(i).to_string())
                .collect();
            let doc = json!({
                "mu": basis.mu(),
                "basis": names,
                "weights": basis.weights(),
            });
            emit(&doc, shared.out.as_deref())
        }
        Command::Fmanifold(args) => {
            let (model, gb, basis) = prepare(&args.shared.model)?;
            let order = args.order as usize;
            let out = solve_f_manifold(&model, &gb, &basis, order, strategy())
                .map_err(|e| e.to_string())?;
            let doc = json!({
                "order": order,
                "a": scalar_tensor_json(&out.a, order),
            });
            emit(&doc, args.shared.out.as_deref())
        }
        Command::Primitive(args) => {
            let (model, gb, basis) = prepare(&args.shared.model)?;
            let order = args.order as usize;
            let seeds = match &args.zeta_seed {
                Some(path) => read_seeds(path, &model, &basis)?,
                None => Seeds::zero(&model, &basis),
            };
            let out = match args.zeta_hbar_order {
                Some(n) => {
                    solve_zeta_truncated(&model, &gb, &basis, &seeds, n as usize, order, strategy())
                }
                None => solve_weak_primitive(&model, &gb, &basis, &seeds, order, strategy()),
            }
            .map_err(|e| e.to_string())?;
            let zeta: Vec<Value> = out
                .zeta
                .iter()
                .map(|level| poly_tensor_json(level, order))
                .collect();
            let doc = json!({
                "order": order,
                "n_zeta": out.n_zeta(),
                "zeta": zeta,
                "a0": scalar_tensor_json(&out.a0, order),
                "a1": scalar_tensor_json(&out.a1, order),
                "a1_vanishes": out.a1_is_zero(),
            });
            emit(&doc, args.shared.out.as_deref())
        }
        Command::Frobenius(shared) => {
            let (model, gb, basis) = prepare(&shared.model)?;
            let data = frobenius_structure(&model, &gb, &basis, strategy())
                .map_err(|e| e.to_string())?;
            let check = verify_frobenius_axioms(&data);
            let mut g = Map::new();
            for alpha in 0..data.mu() {
                for beta in 0..data.mu() {
                    g.insert(
                        format!("{alpha},{beta}"),
                        Value::String(data.metric_entry(alpha, beta).to_string()),
                    );
                }
            }
            let doc = json!({
                "a": scalar_tensor_json(data.constants(), 2),
                "g": g,
                "axioms": {
                    "D1": check.associativity.is_none(),
                    "D2": check.commutativity.is_none(),
                    "D3": check.invariance.is_none(),
                    "D4": check.flat_identity.is_none(),
                    "D5": check.potential.is_none(),
                },
                "nondegenerate": check.nondegenerate,
            });
            emit(&doc, shared.out.as_deref())
        }
        Command::Pairing(args) => {
            let (model, gb, basis) = prepare(&args.shared.model)?;
            let window = HbarWindow::new(-2, args.hbar_order);
            let mut table = Map::new();
            for alpha in 0..basis.mu() {
                let left = FormalSeries::from_polynomial(basis.element(alpha));
                for beta in 0..basis.mu() {
                    let right = FormalSeries::from_polynomial(basis.element(beta));
                    let value =
                        modified_pairing(&model, &gb, &basis, &left, &right, window, strategy())
                            .map_err(|e| e.to_string())?;
                    table.insert(format!("{alpha},{beta}"), value.to_json());
                }
            }
            let doc = json!({
                "window": [-2, args.hbar_order],
                "table": table,
            });
            emit(&doc, args.shared.out.as_deref())
        }
        Command::Verify(args) => {
            let (model, gb, basis) = prepare(&args.shared.model)?;
            let mut cfg = SuiteConfig::new(args.seed, args.samples);
            cfg.suites = SuiteKind::parse(&args.suite)
                .expect("suite names are validated by the argument parser");
            let report = run_suite(&model, &gb, &basis, &cfg).map_err(|e| e.to_string())?;
            let doc = serde_json::to_value(&report).map_err(|e| e.to_string())?;
            emit(&doc, args.shared.out.as_deref())
        }
    }
}

fn strategy() -> DivisionStrategy {
    DivisionStrategy::FirstMatch
}

fn prepare(path: &Path) -> Result<(ModelSetup, GroebnerData, BasisData), String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let model = model_from_json(&text).map_err(|e| e.to_string())?;
    let gb = jacobian_groebner(&model);
    let basis = charge_zero_basis(&model, &gb).map_err(|e| e.to_string())?;
    Ok((model, gb, basis))
}

/// Parse {"zeta0": {"rho": polytext, ..}, "zeta1": {..}}; missing levels
/// and missing entries default to zero. The weight and charge conditions
/// are enforced by the seed constructor.
fn read_seeds(path: &Path, model: &ModelSetup, basis: &BasisData) -> Result<Seeds, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let level = |key: &str| -> Result<Vec<SuperPolynomial>, String> {
        let mut seeds = vec![SuperPolynomial::zero(model.vars()); basis.mu()];
        let Some(section) = doc.get(key) else {
            return Ok(seeds);
        };
        let map = section
            .as_object()
            .ok_or_else(|| format!("seed entry {key} must be an object"))?;
        for (index_text, poly) in map {
            let index: usize = index_text
                .parse()
                .map_err(|_| format!("seed index {index_text} is not a basis index"))?;
            if index >= basis.mu() {
                return Err(format!(
                    "seed index {index} out of range (mu = {})",
                    basis.mu()
                ));
            }
            let poly_text = poly
                .as_str()
                .ok_or_else(|| format!("seed {key}/{index_text} must be a polynomial string"))?;
            seeds[index] = model.parse(poly_text).map_err(|e| e.to_string())?;
        }
        Ok(seeds)
    };
    Seeds::new(model, basis, level("zeta0")?, level("zeta1")?).map_err(|e| e.to_string())
}

/// {"order": m, "entries": {"a1,a2,..->rho": "p/q", ..}} with zero entries
/// omitted; keys sort lexicographically in the output.
fn scalar_tensor_json(tensor: &SymTensor<Vec<Scalar>>, order: usize) -> Value {
    let mut entries = Map::new();
    for (key, values) in tensor.entries() {
        for (rho, value) in values.iter().enumerate() {
            if !value.is_zero() {
                entries.insert(format!("{key}->{rho}"), Value::String(value.to_string()));
            }
        }
    }
    json!({"order": order, "entries": entries})
}

/// {"order": m, "entries": {"a1,a2,..": "polytext", ..}}, zero entries
/// omitted.
fn poly_tensor_json(tensor: &SymTensor<SuperPolynomial>, order: usize) -> Value {
    let mut entries = Map::new();
    for (key, value) in tensor.entries() {
        if !value.is_zero() {
            entries.insert(key.to_string(), Value::String(value.to_string()));
        }
    }
    json!({"order": order, "entries": entries})
}

fn emit(doc: &Value, out: Option<&Path>) -> Result<(), String> {
    let text = format!("{doc}\n");
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
