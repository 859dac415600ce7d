//! Run configuration: a flat `key = value` file with `[section]` headers,
//! every knob defaulted, unknown keys rejected. Command-line flags override
//! file values; `--help-config` prints the reference below.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synth::SynthConfig;
use crate::train::{PairLoss, ReconLoss, TrainConfig, Variant};

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Input manifest for `run`/`ablate`.
    pub manifest: Option<PathBuf>,
    pub n_top_genes: usize,
    /// Ground-truth labels CSV; when unset, `truth_labels.csv` next to the
    /// manifest is picked up automatically if present.
    pub truth_labels: Option<PathBuf>,
    pub k_spatial: usize,
    pub train: TrainConfig,
    /// Cluster count for k-means on the latent embedding; also the default
    /// for the anchor filter's cluster count.
    pub domains: usize,
    /// Explicit anchor-filter cluster count, if the user split it from
    /// `domains`.
    pub kc: Option<usize>,
    pub synth: SynthConfig,
    pub pas_k: usize,
    pub lisi_k: usize,
    /// Per-gene Moran's I / Geary's C on the denoised expression.
    pub spatial_stats: bool,
    pub n_seeds: usize,
    pub out_dir: PathBuf,
    pub export_graph: bool,
    pub dump_triplets: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            n_top_genes: 3000,
            truth_labels: None,
            k_spatial: 6,
            train: TrainConfig::default(),
            domains: 4,
            kc: None,
            synth: SynthConfig::default(),
            pas_k: 10,
            lisi_k: 30,
            spatial_stats: false,
            n_seeds: 5,
            out_dir: PathBuf::from("out"),
            export_graph: false,
            dump_triplets: false,
        }
    }
}

impl RunConfig {
    /// Re-derives dependent defaults; call after any override. The anchor
    /// filter clusters into `domains` groups unless `kc` was set.
    pub fn finalize(&mut self) {
        self.train.g2n.kc = self.kc.unwrap_or(self.domains);
    }

    pub fn validate_run(&self) -> Result<()> {
        self.train.validate()?;
        if self.n_top_genes == 0 {
            return Err(Error::config("n_top_genes must be at least 1"));
        }
        if self.k_spatial == 0 {
            return Err(Error::config("k_spatial must be at least 1"));
        }
        if self.domains < 2 {
            return Err(Error::config("domains must be at least 2"));
        }
        if self.pas_k == 0 || self.lisi_k == 0 {
            return Err(Error::config("pas_k and lisi_k must be at least 1"));
        }
        if self.n_seeds == 0 {
            return Err(Error::config("n_seeds must be at least 1"));
        }
        Ok(())
    }
}

/// Every accepted (section, key) pair.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("data", "manifest"),
    ("data", "n_top_genes"),
    ("data", "truth_labels"),
    ("graph", "k_spatial"),
    ("train", "epochs"),
    ("train", "warmup_epochs"),
    ("train", "g2n_refresh_every"),
    ("train", "lambda"),
    ("train", "gamma"),
    ("train", "tau"),
    ("train", "rho"),
    ("train", "lr"),
    ("train", "weight_decay"),
    ("train", "disc_steps_per_epoch"),
    ("train", "seed"),
    ("train", "variant"),
    ("train", "recon_loss"),
    ("train", "pair_loss"),
    ("g2n", "kg"),
    ("g2n", "kc"),
    ("g2n", "n_pos"),
    ("cluster", "domains"),
    ("synth", "n_slices"),
    ("synth", "grid_side"),
    ("synth", "n_domains"),
    ("synth", "n_genes"),
    ("synth", "signature_strength"),
    ("synth", "batch_shift_sd"),
    ("synth", "noise_sd"),
    ("synth", "dropout_rate"),
    ("synth", "drop_domain_on_slice"),
    ("synth", "seed"),
    ("metrics", "pas_k"),
    ("metrics", "lisi_k"),
    ("metrics", "spatial_stats"),
    ("ablate", "n_seeds"),
];

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| {
        Error::config(format!("line {line}: invalid value {value:?} for {key}: {e}"))
    })
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::config(format!(
            "line {line}: invalid value {other:?} for {key} (expected true or false)"
        ))),
    }
}

fn apply(cfg: &mut RunConfig, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
    if !KNOWN_KEYS.contains(&(section, key)) {
        return Err(Error::config(format!(
            "line {line}: unknown key {key:?} in section [{section}]"
        )));
    }
    match (section, key) {
        ("data", "manifest") => cfg.manifest = Some(PathBuf::from(value)),
        ("data", "n_top_genes") => cfg.n_top_genes = parse_value(key, value, line)?,
        ("data", "truth_labels") => cfg.truth_labels = Some(PathBuf::from(value)),
        ("graph", "k_spatial") => cfg.k_spatial = parse_value(key, value, line)?,
        ("train", "epochs") => cfg.train.epochs = parse_value(key, value, line)?,
        ("train", "warmup_epochs") => cfg.train.warmup_epochs = parse_value(key, value, line)?,
        ("train", "g2n_refresh_every") => {
            cfg.train.g2n_refresh_every = parse_value(key, value, line)?
        }
        ("train", "lambda") => cfg.train.weights.lambda = parse_value(key, value, line)?,
        ("train", "gamma") => cfg.train.weights.gamma = parse_value(key, value, line)?,
        ("train", "tau") => cfg.train.weights.tau = parse_value(key, value, line)?,
        ("train", "rho") => cfg.train.rho = parse_value(key, value, line)?,
        ("train", "lr") => cfg.train.lr = parse_value(key, value, line)?,
        ("train", "weight_decay") => cfg.train.weight_decay = parse_value(key, value, line)?,
        ("train", "disc_steps_per_epoch") => {
            cfg.train.disc_steps_per_epoch = parse_value(key, value, line)?
        }
        ("train", "seed") => cfg.train.seed = parse_value(key, value, line)?,
        ("train", "variant") => {
            cfg.train.variant = Variant::from_str(value)
                .map_err(|e| Error::config(format!("line {line}: {e}")))?
        }
        ("train", "recon_loss") => {
            cfg.train.recon = ReconLoss::from_str(value)
                .map_err(|e| Error::config(format!("line {line}: {e}")))?
        }
        ("train", "pair_loss") => {
            cfg.train.pair = PairLoss::from_str(value)
                .map_err(|e| Error::config(format!("line {line}: {e}")))?
        }
        ("g2n", "kg") => cfg.train.g2n.kg = parse_value(key, value, line)?,
        ("g2n", "kc") => cfg.kc = Some(parse_value(key, value, line)?),
        ("g2n", "n_pos") => cfg.train.g2n.n_pos = parse_value(key, value, line)?,
        ("cluster", "domains") => cfg.domains = parse_value(key, value, line)?,
        ("synth", "n_slices") => cfg.synth.n_slices = parse_value(key, value, line)?,
        ("synth", "grid_side") => cfg.synth.grid_side = parse_value(key, value, line)?,
        ("synth", "n_domains") => cfg.synth.n_domains = parse_value(key, value, line)?,
        ("synth", "n_genes") => cfg.synth.n_genes = parse_value(key, value, line)?,
        ("synth", "signature_strength") => {
            cfg.synth.signature_strength = parse_value(key, value, line)?
        }
        ("synth", "batch_shift_sd") => cfg.synth.batch_shift_sd = parse_value(key, value, line)?,
        ("synth", "noise_sd") => cfg.synth.noise_sd = parse_value(key, value, line)?,
        ("synth", "dropout_rate") => cfg.synth.dropout_rate = parse_value(key, value, line)?,
        ("synth", "drop_domain_on_slice") => {
            cfg.synth.drop_domain_on_slice = parse_bool(key, value, line)?
        }
        ("synth", "seed") => cfg.synth.seed = parse_value(key, value, line)?,
        ("metrics", "pas_k") => cfg.pas_k = parse_value(key, value, line)?,
        ("metrics", "lisi_k") => cfg.lisi_k = parse_value(key, value, line)?,
        ("metrics", "spatial_stats") => cfg.spatial_stats = parse_bool(key, value, line)?,
        ("ablate", "n_seeds") => cfg.n_seeds = parse_value(key, value, line)?,
        _ => unreachable!("key list and match arms are in sync"),
    }
    Ok(())
}

/// Parses config text over the defaults. `#` and `;` start comments;
/// blank lines are ignored; keys live under `[section]` headers.
pub fn parse_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {line_no}: malformed section header {line:?}")))?
                .trim();
            if !KNOWN_KEYS.iter().any(|&(s, _)| s == name) {
                return Err(Error::config(format!("line {line_no}: unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {line_no}: expected key = value, got {line:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if section.is_empty() {
            return Err(Error::config(format!(
                "line {line_no}: key {key:?} appears before any [section] header"
            )));
        }
        apply(&mut cfg, &section, key, value, line_no)?;
    }
    cfg.finalize();
    Ok(cfg)
}

pub fn parse_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    parse_str(&text)
}

/// The reference page printed by `--help-config`.
pub fn help_text() -> String {
    let mut s = String::from(
        "Configuration reference. Format: `key = value` lines under [section]\n\
         headers; `#` or `;` start comments; unknown keys are errors. Every\n\
         key is optional and defaults to the value shown.\n\n\
         [data]\n\
         manifest            = <path>   # slice manifest JSON (run/ablate input)\n\
         n_top_genes         = 3000     # highly variable genes kept\n\
         truth_labels        = <path>   # ground-truth CSV; default: truth_labels.csv next to the manifest\n\n\
         [graph]\n\
         k_spatial           = 6        # spatial nearest neighbors per spot\n\n\
         [train]\n\
         epochs              = 600\n\
         warmup_epochs       = 200      # reconstruction-only epochs\n\
         g2n_refresh_every   = 50       # anchor rebuild period after warm-up\n\
         lambda              = 0.5      # adversarial weight in the objective\n\
         gamma               = 2.0      # cosine-error sharpening exponent\n\
         tau                 = 1.0      # triplet margin\n\
         rho                 = 0.5      # masked spot fraction per epoch\n\
         lr                  = 0.001\n\
         weight_decay        = 0.0002\n\
         disc_steps_per_epoch = 1\n\
         seed                = 0\n\
         variant             = full     # full | only-mask | mask-gan | mask-g2n\n\
         recon_loss          = sce      # sce | mse\n\
         pair_loss           = triplet  # triplet | contrastive\n\n\
         [g2n]\n\
         kg                  = 50       # cross-slice similarity candidates per anchor\n\
         kc                  = <domains># clusters for the semantic filter\n\
         n_pos               = 10       # positive budget per anchor (n_pos/2 sampled)\n\n\
         [cluster]\n\
         domains             = 4        # k-means clusters on the latent embedding\n\n\
         [synth]\n\
         n_slices            = 3\n\
         grid_side           = 10       # spots per slice = grid_side^2\n\
         n_domains           = 4        # vertical expression bands\n\
         n_genes             = 200\n\
         signature_strength  = 2.0\n\
         batch_shift_sd      = 1.0      # per-(slice, gene) offset scale\n\
         noise_sd            = 0.5\n\
         dropout_rate        = 0.3\n\
         drop_domain_on_slice = false   # remove the last domain from slice 0\n\
         seed                = 0\n\n\
         [metrics]\n\
         pas_k               = 10       # spatial neighbors for the anomaly score\n\
         lisi_k              = 30       # embedding neighbors for mixing scores\n\
         spatial_stats       = false    # per-gene Moran's I / Geary's C on denoised output\n\n\
         [ablate]\n\
         n_seeds             = 5        # seeds per variant\n",
    );
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_str("").unwrap();
        assert_eq!(cfg.n_top_genes, 3000);
        assert_eq!(cfg.k_spatial, 6);
        assert_eq!(cfg.train.epochs, 600);
        assert_eq!(cfg.train.g2n.kc, 4, "anchor clusters default to domains");
        assert_eq!(cfg.domains, 4);
        assert!(cfg.manifest.is_none());
    }

    #[test]
    fn sections_comments_and_whitespace_parse() {
        let text = "
# top comment
[train]
epochs = 10   ; trailing comment
  lambda=0.25
variant = mask-gan

[cluster]
domains = 7
";
        let cfg = parse_str(text).unwrap();
        assert_eq!(cfg.train.epochs, 10);
        assert_eq!(cfg.train.weights.lambda, 0.25);
        assert_eq!(cfg.train.variant, Variant::MaskGan);
        assert_eq!(cfg.domains, 7);
        assert_eq!(cfg.train.g2n.kc, 7, "kc follows domains unless set");
    }

    #[test]
    fn explicit_kc_wins_over_domains() {
        let cfg = parse_str("[g2n]\nkc = 9\n[cluster]\ndomains = 5\n").unwrap();
        assert_eq!(cfg.train.g2n.kc, 9);
        assert_eq!(cfg.domains, 5);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let err = parse_str("[train]\nlearning_rate = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
        assert_eq!(err.exit_code(), 2);
        assert!(parse_str("[models]\nepochs = 5\n").is_err());
        assert!(parse_str("epochs = 5\n").is_err(), "key before section");
        assert!(parse_str("[train]\nepochs\n").is_err(), "missing =");
        assert!(parse_str("[train\nepochs = 5\n").is_err(), "malformed header");
    }

    #[test]
    fn bad_values_name_the_line() {
        let err = parse_str("[train]\nepochs = soon\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("epochs"), "{msg}");
        assert!(parse_str("[synth]\ndrop_domain_on_slice = yes\n").is_err());
        assert!(parse_str("[train]\nvariant = fancy\n").is_err());
    }

    #[test]
    fn every_known_key_appears_in_the_help_page() {
        let help = help_text();
        for (section, key) in KNOWN_KEYS {
            assert!(help.contains(&format!("[{section}]")), "missing section {section}");
            assert!(help.contains(key), "missing key {key}");
        }
    }

    #[test]
    fn every_documented_key_round_trips_through_the_parser() {
        let text = "
[data]
manifest = data/manifest.json
n_top_genes = 100
truth_labels = data/truth.csv
[graph]
k_spatial = 8
[train]
epochs = 12
warmup_epochs = 4
g2n_refresh_every = 2
lambda = 0.3
gamma = 3
tau = 0.5
rho = 0.4
lr = 0.01
weight_decay = 0.001
disc_steps_per_epoch = 2
seed = 42
variant = mask-g2n
recon_loss = mse
pair_loss = contrastive
[g2n]
kg = 20
kc = 3
n_pos = 6
[cluster]
domains = 5
[synth]
n_slices = 2
grid_side = 6
n_domains = 3
n_genes = 50
signature_strength = 1.5
batch_shift_sd = 0.5
noise_sd = 0.1
dropout_rate = 0.2
drop_domain_on_slice = true
seed = 9
[metrics]
pas_k = 5
lisi_k = 15
spatial_stats = true
[ablate]
n_seeds = 3
";
        let cfg = parse_str(text).unwrap();
        assert_eq!(cfg.manifest.as_deref(), Some(Path::new("data/manifest.json")));
        assert_eq!(cfg.n_top_genes, 100);
        assert_eq!(cfg.truth_labels.as_deref(), Some(Path::new("data/truth.csv")));
        assert_eq!(cfg.k_spatial, 8);
        assert_eq!(cfg.train.epochs, 12);
        assert_eq!(cfg.train.warmup_epochs, 4);
        assert_eq!(cfg.train.g2n_refresh_every, 2);
        assert_eq!(cfg.train.weights.gamma, 3.0);
        assert_eq!(cfg.train.weights.tau, 0.5);
        assert_eq!(cfg.train.rho, 0.4);
        assert_eq!(cfg.train.lr, 0.01);
        assert_eq!(cfg.train.weight_decay, 0.001);
        assert_eq!(cfg.train.disc_steps_per_epoch, 2);
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.train.variant, Variant::MaskG2n);
        assert_eq!(cfg.train.recon, ReconLoss::Mse);
        assert_eq!(cfg.train.pair, PairLoss::Contrastive);
        assert_eq!(cfg.train.g2n.kg, 20);
        assert_eq!(cfg.train.g2n.kc, 3);
        assert_eq!(cfg.train.g2n.n_pos, 6);
        assert_eq!(cfg.domains, 5);
        assert_eq!(cfg.synth.n_slices, 2);
        assert_eq!(cfg.synth.grid_side, 6);
        assert_eq!(cfg.synth.n_domains, 3);
        assert_eq!(cfg.synth.n_genes, 50);
        assert_eq!(cfg.synth.signature_strength, 1.5);
        assert_eq!(cfg.synth.batch_shift_sd, 0.5);
        assert_eq!(cfg.synth.noise_sd, 0.1);
        assert_eq!(cfg.synth.dropout_rate, 0.2);
        assert!(cfg.synth.drop_domain_on_slice);
        assert_eq!(cfg.synth.seed, 9);
        assert_eq!(cfg.pas_k, 5);
        assert_eq!(cfg.lisi_k, 15);
        assert!(cfg.spatial_stats);
        assert_eq!(cfg.n_seeds, 3);
    }

    #[test]
    fn run_validation_flags_bad_combinations() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate_run().is_ok());
        cfg.domains = 1;
        assert!(cfg.validate_run().is_err());
        let mut cfg = RunConfig::default();
        cfg.train.warmup_epochs = 1000;
        assert!(cfg.validate_run().is_err());
    }
}
