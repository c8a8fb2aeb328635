//! CSV exports of attention maps, pooled embeddings and predictions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::data::Example;
use crate::error::{QatError, Result};
use crate::model::Model;
use crate::nn::Mat;

const EXPORT_BATCH: usize = 64;

fn matrix_csv(m: &Mat) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(",")).expect("write to String");
    }
    out
}

/// Writes `<index>_attn.csv` (L×L, row i = attention of token i) for every
/// example. Returns the written paths in example order.
pub fn export_attention(model: &Model, data: &[Example], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| QatError::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(data.len());
    for (c, chunk) in data.chunks(EXPORT_BATCH).enumerate() {
        let ids: Vec<Vec<usize>> = chunk.iter().map(|e| e.tokens.clone()).collect();
        let (_, diag) = model.logits(&ids)?;
        for (k, attn) in diag.attn.iter().enumerate() {
            let path = out_dir.join(format!("{}_attn.csv", c * EXPORT_BATCH + k));
            std::fs::write(&path, matrix_csv(attn)).map_err(|e| QatError::io(&path, e))?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Writes `label,dim0,…,dim{d-1}` with one mean-pooled encoding per example.
pub fn export_embeddings(model: &Model, data: &[Example], out_path: &Path) -> Result<()> {
    let d = model.config().embed_dim;
    let mut out = String::from("label");
    for j in 0..d {
        write!(out, ",dim{j}").expect("write to String");
    }
    out.push('\n');
    for chunk in data.chunks(EXPORT_BATCH) {
        let ids: Vec<Vec<usize>> = chunk.iter().map(|e| e.tokens.clone()).collect();
        let (_, diag) = model.logits(&ids)?;
        for (e, row) in chunk.iter().zip(diag.pooled.rows()) {
            write!(out, "{}", e.label).expect("write to String");
            for v in row {
                write!(out, ",{v:?}").expect("write to String");
            }
            out.push('\n');
        }
    }
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| QatError::io(parent, e))?;
    }
    std::fs::write(out_path, out).map_err(|e| QatError::io(out_path, e))
}

/// One 0-based class index per line.
pub fn write_predictions(path: &Path, preds: &[usize]) -> Result<()> {
    let mut out = String::new();
    for p in preds {
        writeln!(out, "{p}").expect("write to String");
    }
    std::fs::write(path, out).map_err(|e| QatError::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<usize>> {
    let content = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| QatError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: format!("`{}` is not a class index", l.trim()),
            })
        })
        .collect()
}
