use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qat_core::harness::{
    disagree, evaluate, export_attention, export_embeddings, load_tsv, read_predictions, train_files,
    write_predictions, TrainConfig, Trained,
};
use qat_core::qkernel::{build_kernel_circuit, gram_matrix, kernel, KernelParams};
use qat_core::{QatError, Result};

#[derive(Parser)]
#[command(name = "qat", version, about = "Quantum-attention text classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write config, vocab, metrics and checkpoints to --out
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a labelled TSV
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write predictions, one class index per line
        #[arg(long)]
        preds: Option<PathBuf>,
    },
    /// Compare two prediction files against gold labels
    Disagree {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Write one `<index>_attn.csv` per example
    ExportAttn {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write pooled sentence encodings as CSV
    ExportEmbed {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the quantum kernel
    Kernel(KernelArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// `theta0=…`, `theta1=…` (comma-separated) and optional `depth=…`
    #[arg(long)]
    params: PathBuf,
    /// Input vector: comma-separated values or a file holding them
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// One input vector per line (tab- or comma-separated); prints the Gram matrix
    #[arg(long, conflicts_with_all = ["y", "dump_state"])]
    gram: Option<PathBuf>,
    /// Print the encoded state of --x as `index,re,im`
    #[arg(long, requires = "x", conflicts_with = "y")]
    dump_state: bool,
}

fn parse_floats(s: &str, source: &str, line: usize) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| QatError::Parse {
                path: source.to_string(),
                line,
                msg: format!("`{t}` is not a number"),
            })
        })
        .collect()
}

fn read_vector(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    if path.is_file() {
        let content = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
        parse_floats(&content, arg, 1)
    } else {
        parse_floats(arg, "<argument>", 1)
    }
}

fn read_kernel_params(path: &Path) -> Result<KernelParams> {
    let content = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
    let source = path.display().to_string();
    let (mut theta0, mut theta1, mut depth) = (None, None, 1usize);
    for (i, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| QatError::Parse {
            path: source.clone(),
            line: i + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        match k.trim() {
            "theta0" => theta0 = Some(parse_floats(v, &source, i + 1)?),
            "theta1" => theta1 = Some(parse_floats(v, &source, i + 1)?),
            "depth" => {
                depth = v
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("invalid depth `{}`", v.trim())))?
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| QatError::Config(format!("{source}: missing `{k}`"));
    let kp = KernelParams::new(
        theta0.ok_or_else(|| missing("theta0"))?,
        theta1.ok_or_else(|| missing("theta1"))?,
    )?;
    Ok(kp.with_depth(depth))
}

fn run_kernel(args: KernelArgs) -> Result<()> {
    let kp = read_kernel_params(&args.params)?;
    if let Some(gram) = args.gram {
        let content = std::fs::read_to_string(&gram).map_err(|e| QatError::io(&gram, e))?;
        let source = gram.display().to_string();
        let xs = content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_floats(l, &source, i + 1))
            .collect::<Result<Vec<_>>>()?;
        for row in gram_matrix(&xs, &kp)? {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            println!("{}", cells.join(","));
        }
        return Ok(());
    }
    let x = read_vector(
        args.x
            .as_deref()
            .ok_or_else(|| QatError::Config("--x or --gram is required".into()))?,
    )?;
    if args.dump_state {
        let state = build_kernel_circuit(&x, &kp)?.run(&kp.flat(), &x)?;
        println!("index,re,im");
        for (i, a) in state.amplitudes().iter().enumerate() {
            println!("{i},{:.16e},{:.16e}", a.re, a.im);
        }
        return Ok(());
    }
    let y = read_vector(
        args.y
            .as_deref()
            .ok_or_else(|| QatError::Config("--y is required".into()))?,
    )?;
    println!("{:?}", kernel(&x, &y, &kp)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            train,
            dev,
            out,
        } => {
            let cfg = TrainConfig::load(&config)?;
            let outcome = train_files(&cfg, &train, &dev, &out)?;
            let best = &outcome.log[outcome.best_epoch];
            println!(
                "best epoch {} dev_accuracy {} dev_macro_f1 {}; {} parameters; wrote {}",
                best.epoch,
                best.dev_accuracy,
                best.dev_macro_f1,
                outcome.final_model.count_params(),
                out.display()
            );
        }
        Command::Eval { ckpt, data, preds } => {
            let t = Trained::load(&ckpt)?;
            let examples = t.encode_file(&data)?;
            let ev = evaluate(&t.model, &examples, t.config.batch_size)?;
            print!("{}", ev.report);
            println!("max_attention,{:?}", ev.max_attention);
            if let Some(p) = preds {
                write_predictions(&p, &ev.preds)?;
            }
        }
        Command::Disagree { a, b, gold } => {
            let gold: Vec<usize> = load_tsv(&gold)?.into_iter().map(|r| r.label).collect();
            print!("{}", disagree(&read_predictions(&a)?, &read_predictions(&b)?, &gold)?);
        }
        Command::ExportAttn { ckpt, data, out } => {
            let t = Trained::load(&ckpt)?;
            let paths = export_attention(&t.model, &t.encode_file(&data)?, &out)?;
            println!("wrote {} attention maps to {}", paths.len(), out.display());
        }
        Command::ExportEmbed { ckpt, data, out } => {
            let t = Trained::load(&ckpt)?;
            let examples = t.encode_file(&data)?;
            export_embeddings(&t.model, &examples, &out)?;
            println!("wrote {} embeddings to {}", examples.len(), out.display());
        }
        Command::Kernel(args) => run_kernel(args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
