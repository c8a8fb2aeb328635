//! `key=value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; unknown keys and duplicate keys
//! are errors. Defaults: batch 64, lr 3e-5, dropout 0.1, 15 epochs, d = 64,
//! 6 qubits.

use std::path::Path;

use crate::error::{QatError, Result};
use crate::model::{AttentionKind, ModelConfig};
use crate::nn::AdamWConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// `vocab_size` is filled in from the training vocabulary.
    pub model: ModelConfig,
    pub optim: AdamWConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Cap on vocabulary size, reserved ids included.
    pub max_vocab: Option<usize>,
    /// Set when the file pins `vocab_size`; training then checks it.
    pub fixed_vocab: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            optim: AdamWConfig::default(),
            batch_size: 64,
            epochs: 15,
            max_vocab: None,
            fixed_vocab: false,
        }
    }
}

const KEYS: &[&str] = &[
    "vocab_size",
    "embed_dim",
    "seq_len",
    "n_qubits",
    "attention_kind",
    "n_heads",
    "n_classes",
    "dropout",
    "interference_coeff",
    "kernel_depth",
    "classifier_hidden",
    "seed",
    "batch_size",
    "epochs",
    "lr",
    "weight_decay",
    "beta1",
    "beta2",
    "eps",
    "max_vocab",
];

impl TrainConfig {
    pub fn parse(content: &str, source: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| QatError::Parse {
                path: source.to_string(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| QatError::io(path, e))?;
        Self::parse(&content, &path.display().to_string())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        let m = &mut self.model;
        match key {
            "vocab_size" => {
                m.vocab_size = num(key, value)?;
                self.fixed_vocab = true;
            }
            "embed_dim" => m.embed_dim = num(key, value)?,
            "seq_len" => m.seq_len = num(key, value)?,
            "n_qubits" => m.n_qubits = num(key, value)?,
            "attention_kind" => m.attention_kind = value.parse::<AttentionKind>().map_err(|e| e.to_string())?,
            "n_heads" => m.n_heads = num(key, value)?,
            "n_classes" => m.n_classes = num(key, value)?,
            "dropout" => m.dropout = num(key, value)?,
            "interference_coeff" => m.interference_coeff = Some(num(key, value)?),
            "kernel_depth" => m.kernel_depth = num(key, value)?,
            "classifier_hidden" => m.classifier_hidden = Some(num(key, value)?),
            "seed" => m.seed = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "lr" => self.optim.lr = num(key, value)?,
            "weight_decay" => self.optim.weight_decay = num(key, value)?,
            "beta1" => self.optim.beta1 = num(key, value)?,
            "beta2" => self.optim.beta2 = num(key, value)?,
            "eps" => self.optim.eps = num(key, value)?,
            "max_vocab" => self.max_vocab = Some(num(key, value)?),
            _ => unreachable!("key list checked by caller"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(QatError::Config("batch_size must be positive".into()));
        }
        if self.model.attention_kind.is_multi()
            && (self.model.n_heads == 0 || !self.model.embed_dim.is_multiple_of(self.model.n_heads))
        {
            return Err(QatError::HeadDivisibility {
                what: "embed_dim",
                dim: self.model.embed_dim,
                heads: self.model.n_heads,
            });
        }
        if !(0.0..1.0).contains(&self.model.dropout) {
            return Err(QatError::Config(format!(
                "dropout {} not in [0, 1)",
                self.model.dropout
            )));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_config_string(&self) -> String {
        let m = &self.model;
        let o = &self.optim;
        let mut lines = vec![
            format!("vocab_size={}", m.vocab_size),
            format!("embed_dim={}", m.embed_dim),
            format!("seq_len={}", m.seq_len),
            format!("n_qubits={}", m.n_qubits),
            format!("attention_kind={}", m.attention_kind),
            format!("n_heads={}", m.n_heads),
            format!("n_classes={}", m.n_classes),
            format!("dropout={:?}", m.dropout),
            format!("kernel_depth={}", m.kernel_depth),
            format!("seed={}", m.seed),
            format!("batch_size={}", self.batch_size),
            format!("epochs={}", self.epochs),
            format!("lr={:?}", o.lr),
            format!("weight_decay={:?}", o.weight_decay),
            format!("beta1={:?}", o.beta1),
            format!("beta2={:?}", o.beta2),
            format!("eps={:?}", o.eps),
        ];
        if let Some(c) = m.interference_coeff {
            lines.push(format!("interference_coeff={c:?}"));
        }
        if let Some(h) = m.classifier_hidden {
            lines.push(format!("classifier_hidden={h}"));
        }
        if let Some(v) = self.max_vocab {
            lines.push(format!("max_vocab={v}"));
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = TrainConfig::parse("# nothing\n\n", "t").unwrap();
        assert_eq!((c.batch_size, c.epochs), (64, 15));
        assert_eq!(c.optim.lr, 3e-5);
        assert_eq!(c.model.dropout, 0.1);
        assert_eq!((c.model.embed_dim, c.model.n_qubits), (64, 6));
    }

    #[test]
    fn parses_values_and_comments() {
        let c = TrainConfig::parse(
            "attention_kind = classical_multi  # baseline\nn_heads=2\nlr=1e-3\ninterference_coeff=2\n",
            "t",
        )
        .unwrap();
        assert_eq!(c.model.attention_kind, AttentionKind::ClassicalMulti);
        assert_eq!(c.model.n_heads, 2);
        assert_eq!(c.optim.lr, 1e-3);
        assert_eq!(c.model.interference_coeff, Some(2.0));
    }

    #[test]
    fn rejects_typos_and_duplicates() {
        assert!(matches!(
            TrainConfig::parse("embed_dims=3", "t"),
            Err(QatError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            TrainConfig::parse("seed=1\nseed=2", "t"),
            Err(QatError::Parse { line: 2, .. })
        ));
        assert!(TrainConfig::parse("seed=abc", "t").is_err());
        assert!(TrainConfig::parse("seed", "t").is_err());
        assert!(TrainConfig::parse("attention_kind=classical_multi\nn_heads=3", "t").is_err());
    }

    #[test]
    fn canonical_string_round_trips() {
        let mut c = TrainConfig::parse(
            "lr=0.001\nmax_vocab=50\nclassifier_hidden=12\ninterference_coeff=1.5",
            "t",
        )
        .unwrap();
        c.model.vocab_size = 42;
        c.fixed_vocab = true;
        assert_eq!(TrainConfig::parse(&c.to_config_string(), "t").unwrap(), c);
    }
}
