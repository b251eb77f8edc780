//! Command-line driver: compute ring presentations from presentation files,
//! print projected relation matrices, verify results against the universal
//! matrices, compare two presentations, and emit bundled examples.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse error (or bad usage),
//! 3 validation error, 4 verification failure.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use defring::deform::{
    compare_surjection, projected_matrix, ring_presentation, ring_presentation_to_json,
    universal_matrices, DeformError,
};
use defring::presentation::{parse_presentation, Presentation, PresentationError};
use defring::verify::{check_relations, EntryOutcome};

const FIXTURES: &[(&str, &str)] = &[
    (
        "cyclotomic_regular",
        include_str!("../fixtures/cyclotomic_regular.dsl"),
    ),
    (
        "cyclotomic_691",
        include_str!("../fixtures/cyclotomic_691.dsl"),
    ),
    (
        "cyclotomic_augmented",
        include_str!("../fixtures/cyclotomic_augmented.dsl"),
    ),
    (
        "wingberg_tame",
        include_str!("../fixtures/wingberg_tame.dsl"),
    ),
    (
        "wingberg_wild",
        include_str!("../fixtures/wingberg_wild.dsl"),
    ),
];

#[derive(Parser)]
#[command(
    name = "defring",
    version,
    about = "Explicit presentations of universal deformation rings over Z_p"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// Override the prime from the file header
    #[arg(long)]
    p: Option<u64>,
    /// Override the p-adic precision N (coefficients mod p^N)
    #[arg(long)]
    prec: Option<u32>,
    /// Override the degree cap D (series truncated past total degree D)
    #[arg(long)]
    deg: Option<usize>,
}

#[derive(Args)]
struct Output {
    /// Emit machine-readable JSON instead of text
    #[arg(long)]
    json: bool,
    /// Write to a file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the ring presentation Z_p[[Y_1..Y_d']]/I of an input file
    Compute {
        /// Presentation file, or `-` for standard input
        input: String,
        #[command(flatten)]
        over: Overrides,
        #[command(flatten)]
        output: Output,
    },
    /// Print the projected relation matrix (rows: X_inf generators)
    Fox {
        /// Presentation file, or `-` for standard input
        input: String,
        #[command(flatten)]
        over: Overrides,
        #[command(flatten)]
        output: Output,
    },
    /// Re-derive every relation on the universal matrices and check each
    /// entry against the computed ideal
    Verify {
        /// Presentation file, or `-` for standard input
        input: String,
        #[command(flatten)]
        over: Overrides,
        /// Drop the ideal generator with this index (0-based) before
        /// checking; a diagnostic for exercising the failure path
        #[arg(long)]
        drop_gen: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Map the variables of a source presentation onto a quotient's
    Compare {
        /// The larger (source) presentation file
        source: String,
        /// The smaller (quotient) presentation file
        quotient: String,
        #[command(flatten)]
        output: Output,
    },
    /// Print a bundled example presentation
    Fixture {
        /// One of: cyclotomic_regular, cyclotomic_691, cyclotomic_augmented,
        /// wingberg_tame, wingberg_wild
        name: String,
    },
}

enum AppError {
    Io(String),
    Parse(String),
    Validation(String),
    Verification(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Io(_) => 1,
            AppError::Parse(_) => 2,
            AppError::Validation(_) => 3,
            AppError::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Io(m)
            | AppError::Parse(m)
            | AppError::Validation(m)
            | AppError::Verification(m) => m,
        }
    }
}

fn from_presentation_error(e: PresentationError) -> AppError {
    match e {
        PresentationError::Parse { .. } => AppError::Parse(e.to_string()),
        other => AppError::Validation(other.to_string()),
    }
}

fn from_deform_error(e: DeformError) -> AppError {
    AppError::Validation(e.to_string())
}

fn read_input(path: &str) -> Result<String, AppError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| AppError::Io(format!("reading standard input: {e}")))?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| AppError::Io(format!("reading `{path}`: {e}")))
    }
}

/// Parse an input file, honoring overrides. Later header lines win, so an
/// override is an appended header line.
fn load_presentation(path: &str, over: &Overrides) -> Result<Presentation, AppError> {
    let mut text = read_input(path)?;
    if let Some(p) = over.p {
        text.push_str(&format!("\np {p}"));
    }
    if let Some(prec) = over.prec {
        text.push_str(&format!("\nprec {prec}"));
    }
    if let Some(deg) = over.deg {
        text.push_str(&format!("\ndeg {deg}"));
    }
    let pres = parse_presentation(&text).map_err(from_presentation_error)?;
    let violations = pres.validate();
    if violations.is_empty() {
        Ok(pres)
    } else {
        Err(AppError::Validation(violations.join("\n")))
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| AppError::Io(format!("writing `{}`: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_compute(input: &str, over: &Overrides, output: &Output) -> Result<(), AppError> {
    let pres = load_presentation(input, over)?;
    let rp = ring_presentation(&pres).map_err(from_deform_error)?;
    let content = if output.json {
        let mut s = ring_presentation_to_json(&rp);
        s.push('\n');
        s
    } else {
        rp.render_text()
    };
    write_output(&output.out, &content)
}

fn cmd_fox(input: &str, over: &Overrides, output: &Output) -> Result<(), AppError> {
    let pres = load_presentation(input, over)?;
    let matrix = projected_matrix(&pres).map_err(from_deform_error)?;
    let content = if output.json {
        let entries: Vec<serde_json::Value> = matrix
            .gen_names
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let row: Vec<serde_json::Value> = matrix
                    .rel_names
                    .iter()
                    .enumerate()
                    .map(|(j, r)| {
                        serde_json::json!({
                            "generator": g,
                            "relation": r,
                            "series": matrix.entries[i][j].render(),
                        })
                    })
                    .collect();
                serde_json::Value::Array(row)
            })
            .collect();
        let doc = serde_json::json!({
            "p": pres.p(),
            "prec": pres.prec(),
            "deg": pres.deg(),
            "rows": matrix.gen_names,
            "cols": matrix.rel_names,
            "entries": entries,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    } else {
        let mut s = format!(
            "projected relation matrix (p = {}, precision N = {}, degree cap D = {})\n",
            pres.p(),
            pres.prec(),
            pres.deg()
        );
        if matrix.rel_names.is_empty() {
            s.push_str("no relations\n");
        }
        for (j, r) in matrix.rel_names.iter().enumerate() {
            s.push_str(&format!("column {r}:\n"));
            for (i, g) in matrix.gen_names.iter().enumerate() {
                s.push_str(&format!(
                    "  d {r} / d {g} = {}\n",
                    matrix.entries[i][j].render()
                ));
            }
        }
        s
    };
    write_output(&output.out, &content)
}

fn cmd_verify(
    input: &str,
    over: &Overrides,
    drop_gen: Option<usize>,
    output: &Output,
) -> Result<(), AppError> {
    let pres = load_presentation(input, over)?;
    let mut rp = ring_presentation(&pres).map_err(from_deform_error)?;
    if let Some(idx) = drop_gen {
        if idx >= rp.ideal.len() {
            return Err(AppError::Validation(format!(
                "--drop-gen {idx}: the ideal has only {} generators",
                rp.ideal.len()
            )));
        }
        rp.ideal.remove(idx);
    }
    let asg = universal_matrices(&pres, &rp);
    let report =
        check_relations(&pres, &rp, &asg).map_err(|e| AppError::Validation(e.to_string()))?;
    let content = if output.json {
        let checks: Vec<serde_json::Value> = report
            .entries
            .iter()
            .map(|e| {
                let (outcome, detail) = match &e.outcome {
                    EntryOutcome::Zero => ("zero", serde_json::Value::Null),
                    EntryOutcome::ExactMatch { generator, negated } => (
                        "exact_match",
                        serde_json::json!({ "generator": generator, "negated": negated }),
                    ),
                    EntryOutcome::Member => ("member", serde_json::Value::Null),
                    EntryOutcome::Fail { residue } => {
                        ("fail", serde_json::json!({ "residue": residue }))
                    }
                };
                serde_json::json!({
                    "relation": e.relation,
                    "row": e.row + 1,
                    "col": e.col + 1,
                    "outcome": outcome,
                    "detail": detail,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "p": rp.p,
            "prec": rp.prec,
            "deg": rp.deg,
            "passed": report.passed(),
            "checks": checks,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    } else {
        format!(
            "verification (p = {}, precision N = {}, degree cap D = {})\n{}",
            rp.p,
            rp.prec,
            rp.deg,
            report.render_text()
        )
    };
    write_output(&output.out, &content)?;
    if report.passed() {
        Ok(())
    } else {
        Err(AppError::Verification(
            "one or more relation entries are not in the computed ideal".to_string(),
        ))
    }
}

fn cmd_compare(source: &str, quotient: &str, output: &Output) -> Result<(), AppError> {
    let none = Overrides {
        p: None,
        prec: None,
        deg: None,
    };
    let gs = load_presentation(source, &none)?;
    let g = load_presentation(quotient, &none)?;
    let report = compare_surjection(&gs, &g).map_err(from_deform_error)?;
    let content = if output.json {
        let doc = serde_json::json!({
            "p": gs.p(),
            "prec": gs.prec(),
            "deg": gs.deg(),
            "var_map": report
                .var_map
                .iter()
                .map(|(a, b)| serde_json::json!({ "source": a, "quotient": b }))
                .collect::<Vec<_>>(),
            "kernel_vars": report.kernel_vars,
            "dim_bound": report.dim_bound,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    } else {
        report.render_text()
    };
    write_output(&output.out, &content)
}

fn cmd_fixture(name: &str) -> Result<(), AppError> {
    match FIXTURES.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => {
            print!("{text}");
            Ok(())
        }
        None => Err(AppError::Parse(format!(
            "unknown fixture `{name}`; available: {}",
            FIXTURES
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.cmd {
        Cmd::Compute {
            input,
            over,
            output,
        } => cmd_compute(input, over, output),
        Cmd::Fox {
            input,
            over,
            output,
        } => cmd_fox(input, over, output),
        Cmd::Verify {
            input,
            over,
            drop_gen,
            output,
        } => cmd_verify(input, over, *drop_gen, output),
        Cmd::Compare {
            source,
            quotient,
            output,
        } => cmd_compare(source, quotient, output),
        Cmd::Fixture { name } => cmd_fixture(name),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
