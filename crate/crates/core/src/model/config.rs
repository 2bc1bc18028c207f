//! Model and training hyperparameters with overridable defaults.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Dimensions of the per-token input representation
/// e_i = word + pos + lemma + char-conv (+ external), concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRepresentationConfig {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub lemma_dim: usize,
    pub char_dim: usize,
    pub char_filters: usize,
    pub char_window: usize,
    pub external_dim: Option<usize>,
    /// Embedding dropout rate, applied to each token vector while training.
    pub dropout: f64,
}

impl Default for TokenRepresentationConfig {
    fn default() -> TokenRepresentationConfig {
        TokenRepresentationConfig {
            word_dim: 100,
            pos_dim: 50,
            lemma_dim: 50,
            char_dim: 32,
            char_filters: 100,
            char_window: 3,
            external_dim: None,
            dropout: 0.33,
        }
    }
}

impl TokenRepresentationConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("word_dim", self.word_dim),
            ("pos_dim", self.pos_dim),
            ("lemma_dim", self.lemma_dim),
            ("char_dim", self.char_dim),
            ("char_filters", self.char_filters),
            ("char_window", self.char_window),
        ];
        for (name, d) in dims {
            if d == 0 {
                return Err(ModelError::Config(format!("{name} must be > 0")));
            }
        }
        if let Some(d) = self.external_dim {
            if d == 0 {
                return Err(ModelError::Config("external_dim must be > 0".into()));
            }
        }
        if self.char_window % 2 == 0 {
            return Err(ModelError::Config("char_window must be odd".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config("dropout must be in [0,1)".into()));
        }
        Ok(())
    }

    /// Dimension of one concatenated token vector.
    pub fn total_dim(&self) -> usize {
        self.word_dim
            + self.pos_dim
            + self.lemma_dim
            + self.char_filters
            + self.external_dim.unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub repr: TokenRepresentationConfig,
    /// Encoder hidden size per direction; token vectors are twice this.
    pub encoder_hidden: usize,
    pub encoder_layers: usize,
    pub decoder_hidden: usize,
    pub arc_dim: usize,
    pub label_dim: usize,
}

impl Default for NetworkConfig {
    fn default() -> NetworkConfig {
        NetworkConfig {
            repr: TokenRepresentationConfig::default(),
            encoder_hidden: 128,
            encoder_layers: 3,
            decoder_hidden: 128,
            arc_dim: 100,
            label_dim: 64,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.repr.validate()?;
        let dims = [
            ("encoder_hidden", self.encoder_hidden),
            ("encoder_layers", self.encoder_layers),
            ("decoder_hidden", self.decoder_hidden),
            ("arc_dim", self.arc_dim),
            ("label_dim", self.label_dim),
        ];
        for (name, d) in dims {
            if d == 0 {
                return Err(ModelError::Config(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Multiplied into the learning rate after `patience` epochs without
    /// improvement of the checkpoint metric.
    pub lr_decay: f64,
    pub patience: usize,
    pub clip_norm: f64,
    /// Recurrent-connection dropout rate (one mask per sequence).
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beam: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.9,
            lr_decay: 0.75,
            patience: 10,
            clip_norm: 5.0,
            dropout: 0.33,
            epochs: 600,
            batch_size: 32,
            beam: 5,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(ModelError::Config("lr must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(ModelError::Config(format!("{name} must be in [0,1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.lr_decay) || self.lr_decay == 0.0 {
            return Err(ModelError::Config("lr_decay must be in (0,1]".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config("dropout must be in [0,1)".into()));
        }
        if self.clip_norm <= 0.0 {
            return Err(ModelError::Config("clip_norm must be positive".into()));
        }
        if self.batch_size == 0 || self.beam == 0 || self.patience == 0 {
            return Err(ModelError::Config(
                "batch_size, beam, and patience must be > 0".into(),
            ));
        }
        Ok(())
    }
}
