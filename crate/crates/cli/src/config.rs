use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use clap::Args;
use cloze_forge::corpus::LengthBounds;
use cloze_forge::{AnswerSource, Boundary, GenConfig, NoiseConfig, TranslationMethod, WhMode};
use serde::{Deserialize, Deserializer};

/// Generation settings, shared by the command line and the `[generate]`
/// table of the config file. Unset values fall through to the file, then
/// to defaults.
#[derive(Args, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct GenerateOpts {
    /// Answer prior: NE (named entities) or NP (noun phrases).
    #[arg(long)]
    #[serde(default, deserialize_with = "from_str_opt")]
    pub answer_source: Option<AnswerSource>,
    /// Cloze boundary: sentence or subclause.
    #[arg(long)]
    #[serde(default, deserialize_with = "from_str_opt")]
    pub boundary: Option<Boundary>,
    /// Translation: identity, noisy or external.
    #[arg(long)]
    #[serde(default, deserialize_with = "from_str_opt")]
    pub method: Option<TranslationMethod>,
    /// Wh-word choice: heuristic or random.
    #[arg(long)]
    #[serde(default, deserialize_with = "from_str_opt")]
    pub wh_mode: Option<WhMode>,
    #[arg(long)]
    #[serde(default)]
    pub p_drop: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub shuffle_k: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub p_mask: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub mask_placeholder: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub n_paragraphs: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub questions_per_paragraph: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
    /// Minimum paragraph length in tokens.
    #[arg(long)]
    #[serde(default)]
    pub min_tokens: Option<usize>,
    /// Maximum paragraph length in tokens.
    #[arg(long)]
    #[serde(default)]
    pub max_tokens: Option<usize>,
    /// Tagging plug-in command line (NE answers only).
    #[arg(long)]
    #[serde(default)]
    pub tagger: Option<String>,
    /// Translator plug-in command line (external method).
    #[arg(long)]
    #[serde(default)]
    pub translator: Option<String>,
}

fn from_str_opt<'de, D, T>(de: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = String>,
{
    Option::<String>::deserialize(de)?
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

impl GenerateOpts {
    /// Field-wise: values set here win over `other`.
    pub fn or(self, other: GenerateOpts) -> GenerateOpts {
        GenerateOpts {
            answer_source: self.answer_source.or(other.answer_source),
            boundary: self.boundary.or(other.boundary),
            method: self.method.or(other.method),
            wh_mode: self.wh_mode.or(other.wh_mode),
            p_drop: self.p_drop.or(other.p_drop),
            shuffle_k: self.shuffle_k.or(other.shuffle_k),
            p_mask: self.p_mask.or(other.p_mask),
            mask_placeholder: self.mask_placeholder.or(other.mask_placeholder),
            n_paragraphs: self.n_paragraphs.or(other.n_paragraphs),
            questions_per_paragraph: self
                .questions_per_paragraph
                .or(other.questions_per_paragraph),
            seed: self.seed.or(other.seed),
            min_tokens: self.min_tokens.or(other.min_tokens),
            max_tokens: self.max_tokens.or(other.max_tokens),
            tagger: self.tagger.or(other.tagger),
            translator: self.translator.or(other.translator),
        }
    }

    pub fn to_config(&self) -> GenConfig {
        let d = GenConfig::default();
        let dn = NoiseConfig::default();
        let db = LengthBounds::default();
        GenConfig {
            answer_source: self.answer_source.unwrap_or(d.answer_source),
            boundary: self.boundary.unwrap_or(d.boundary),
            method: self.method.unwrap_or(d.method),
            wh_mode: self.wh_mode.unwrap_or(d.wh_mode),
            noise: NoiseConfig {
                p_drop: self.p_drop.unwrap_or(dn.p_drop),
                shuffle_k: self.shuffle_k.unwrap_or(dn.shuffle_k),
                p_mask: self.p_mask.unwrap_or(dn.p_mask),
                mask_placeholder: self.mask_placeholder.clone().unwrap_or(dn.mask_placeholder),
            },
            n_paragraphs: self.n_paragraphs.unwrap_or(d.n_paragraphs),
            questions_per_paragraph: self
                .questions_per_paragraph
                .unwrap_or(d.questions_per_paragraph),
            seed: self.seed.unwrap_or(d.seed),
            bounds: LengthBounds::new(
                self.min_tokens.unwrap_or(db.min_tokens),
                self.max_tokens.unwrap_or(db.max_tokens),
            ),
        }
    }
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub workers: Option<usize>,
    /// Seed used by every subcommand unless overridden.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub generate: GenerateOpts,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
