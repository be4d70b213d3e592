//! The three generative models: VAE, conditional GAN and VAE-SGAN.
//!
//! Every model exposes the same "produce synthetic rows for these real rows"
//! surface through [`Synthesizer`]:
//!
//! - VAE / VAE-SGAN: `Dec(Enc(x))` using the encoder mean (sampling `z` is
//!   available via [`TrainConfig::stochastic_reconstruction`]).
//! - CGAN: one label-conditioned generation per input row; the seeded noise
//!   draw stands in for the encoder the CGAN does not have.
//!
//! Models serialize to a JSON document (see [`ModelFile`]) holding layer
//! shapes, flattened parameters at full `f64` round-trip precision, the
//! training configuration and its seed.

mod cgan;
mod config;
mod vae;
mod vae_sgan;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cgan::{train_cgan, CganHistory, CganModel};
pub use config::{ReconstructionLoss, TrainConfig};
pub use vae::{
    kl_divergence, reparameterize, train_vae, VaeForward, VaeGradients, VaeHistory, VaeModel,
    VaeNetworks,
};
pub use vae_sgan::{train_vae_sgan, VaeSganHistory, VaeSganModel};

use crate::error::{Error, Result};
use crate::nncore::{Layer, Matrix, Network};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "VAE", alias = "vae")]
    Vae,
    #[serde(rename = "CGAN", alias = "cgan")]
    Cgan,
    #[serde(rename = "VAE-SGAN", alias = "vae-sgan", alias = "vae_sgan", alias = "VAE_SGAN")]
    VaeSgan,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Vae, ModelKind::Cgan, ModelKind::VaeSgan];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vae => "VAE",
            ModelKind::Cgan => "CGAN",
            ModelKind::VaeSgan => "VAE-SGAN",
        }
    }

    /// Lower-case name safe for file paths.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Vae => "vae",
            ModelKind::Cgan => "cgan",
            ModelKind::VaeSgan => "vae-sgan",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "vae" => Ok(ModelKind::Vae),
            "cgan" => Ok(ModelKind::Cgan),
            "vae-sgan" => Ok(ModelKind::VaeSgan),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Produces one synthetic row per input row, labelled like its source row.
pub trait Synthesizer: Send + Sync {
    fn synthesize(&self, x: &Matrix, y: &[usize], rng: &mut Rng) -> Result<Matrix>;
}

impl Synthesizer for VaeModel {
    fn synthesize(&self, x: &Matrix, _y: &[usize], rng: &mut Rng) -> Result<Matrix> {
        if self.config.stochastic_reconstruction {
            self.reconstruct_sampled(x, rng)
        } else {
            self.reconstruct(x)
        }
    }
}

impl Synthesizer for VaeSganModel {
    fn synthesize(&self, x: &Matrix, _y: &[usize], rng: &mut Rng) -> Result<Matrix> {
        if self.config.stochastic_reconstruction {
            self.reconstruct_sampled(x, rng)
        } else {
            self.reconstruct(x)
        }
    }
}

impl Synthesizer for CganModel {
    fn synthesize(&self, x: &Matrix, y: &[usize], rng: &mut Rng) -> Result<Matrix> {
        if x.rows() != y.len() {
            return Err(Error::shape("CGAN synthesize labels", x.rows(), y.len()));
        }
        if x.cols() != self.feature_dim {
            return Err(Error::shape("CGAN synthesize features", self.feature_dim, x.cols()));
        }
        self.generate(y, rng)
    }
}

/// A trained model of any kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GenerativeModel {
    #[serde(rename = "VAE")]
    Vae(VaeModel),
    #[serde(rename = "CGAN")]
    Cgan(CganModel),
    #[serde(rename = "VAE-SGAN")]
    VaeSgan(VaeSganModel),
}

impl GenerativeModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            GenerativeModel::Vae(_) => ModelKind::Vae,
            GenerativeModel::Cgan(_) => ModelKind::Cgan,
            GenerativeModel::VaeSgan(_) => ModelKind::VaeSgan,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        match self {
            GenerativeModel::Vae(m) => &m.config,
            GenerativeModel::Cgan(m) => &m.config,
            GenerativeModel::VaeSgan(m) => &m.config,
        }
    }

    fn networks(&self) -> Vec<(&'static str, &Network)> {
        match self {
            GenerativeModel::Vae(m) => vec![
                ("encoder", &m.networks.encoder),
                ("decoder", &m.networks.decoder),
            ],
            GenerativeModel::Cgan(m) => vec![
                ("generator", &m.generator),
                ("discriminator", &m.discriminator),
            ],
            GenerativeModel::VaeSgan(m) => vec![
                ("encoder", &m.networks.encoder),
                ("decoder", &m.networks.decoder),
                ("discriminator", &m.discriminator),
            ],
        }
    }
}

impl Synthesizer for GenerativeModel {
    fn synthesize(&self, x: &Matrix, y: &[usize], rng: &mut Rng) -> Result<Matrix> {
        match self {
            GenerativeModel::Vae(m) => m.synthesize(x, y, rng),
            GenerativeModel::Cgan(m) => m.synthesize(x, y, rng),
            GenerativeModel::VaeSgan(m) => m.synthesize(x, y, rng),
        }
    }
}

/// Trains a model of `kind` on `(x, y)`.
pub fn train_model(
    kind: ModelKind,
    x: &Matrix,
    y: &[usize],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<GenerativeModel> {
    Ok(match kind {
        ModelKind::Vae => GenerativeModel::Vae(train_vae(x, cfg)?),
        ModelKind::Cgan => GenerativeModel::Cgan(train_cgan(x, y, num_classes, cfg)?),
        ModelKind::VaeSgan => GenerativeModel::VaeSgan(train_vae_sgan(x, y, num_classes, cfg)?),
    })
}

pub const MODEL_FILE_FORMAT: &str = "augforge-model";
pub const MODEL_FILE_VERSION: u32 = 1;

/// Shape summary of one layer in a saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    pub network: String,
    pub index: usize,
    #[serde(rename = "type")]
    pub layer_type: String,
    /// `[in, out]` for dense layers, `[features]` for batch norm, empty otherwise.
    pub shape: Vec<usize>,
}

/// On-disk JSON document for a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: TrainConfig,
    pub layers: Vec<LayerShape>,
    pub model: GenerativeModel,
}

impl ModelFile {
    pub fn new(model: GenerativeModel) -> Self {
        let layers = model
            .networks()
            .into_iter()
            .flat_map(|(name, net)| {
                net.layers().iter().enumerate().map(move |(index, l)| LayerShape {
                    network: name.to_string(),
                    index,
                    layer_type: l.name().to_string(),
                    shape: match l {
                        Layer::Dense(d) => vec![d.input_dim(), d.output_dim()],
                        Layer::BatchNorm(b) => vec![b.state.features()],
                        _ => Vec::new(),
                    },
                })
            })
            .collect();
        ModelFile {
            format: MODEL_FILE_FORMAT.to_string(),
            version: MODEL_FILE_VERSION,
            seed: model.config().seed,
            config: model.config().clone(),
            layers,
            model,
        }
    }
}

pub fn save_model(model: &GenerativeModel, path: &Path) -> Result<()> {
    let file = ModelFile::new(model.clone());
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GenerativeModel> {
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.format != MODEL_FILE_FORMAT || file.version != MODEL_FILE_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported model file {} v{}",
            file.format, file.version
        )));
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(k.slug().parse::<ModelKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<ModelKind>(&json).unwrap(), k);
        }
        assert!("wgan".parse::<ModelKind>().is_err());
    }

    #[test]
    fn model_file_lists_layer_shapes() {
        let model = GenerativeModel::Cgan(CganModel::new(6, 2, &TrainConfig::default()).unwrap());
        let file = ModelFile::new(model);
        let first = &file.layers[0];
        assert_eq!((first.network.as_str(), first.shape.as_slice()), ("generator", &[34usize, 128][..]));
        assert!(file.layers.iter().any(|l| l.network == "discriminator" && l.shape == vec![64, 1]));
    }
}
