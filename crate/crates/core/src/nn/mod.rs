//! The classifier: two LSTM layers followed by three dense layers
//! (tanh, logistic, hard sigmoid), trained with binary cross-entropy and
//! Adam. Everything runs in `f64` on flat parameter vectors.

mod adam;
mod kernels;
mod model;
mod network;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use model::{Model, Standardization, TrainMeta, MODEL_FORMAT_VERSION};
pub use network::{
    bce_loss, forward_batch, hard_sigmoid, loss_and_gradient, sigmoid, BCE_EPSILON,
};
pub use train::{
    accuracy_and_loss, fit, initialize, train, EpochMetrics, TrainConfig, TrainTrace,
};

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{FRAGMENT_FRAMES, NUM_BINS};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("model format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
}

pub type Result<T> = std::result::Result<T, NnError>;

/// Layer dimensions. The output layer always has a single unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_steps: usize,
    pub input_dim: usize,
    pub lstm1_units: usize,
    pub lstm2_units: usize,
    pub dense1_units: usize,
    pub dense2_units: usize,
    pub output_units: usize,
}

/// Total trainable parameters of [`Architecture::standard`].
pub const STANDARD_PARAM_COUNT: usize = 383_329;

impl Architecture {
    /// LSTM(128, sequences) → LSTM(64) → Dense(64, tanh) → Dense(16,
    /// sigmoid) → Dense(1, hard sigmoid) over 8×513 fragments.
    pub const fn standard() -> Self {
        Self {
            input_steps: FRAGMENT_FRAMES,
            input_dim: NUM_BINS,
            lstm1_units: 128,
            lstm2_units: 64,
            dense1_units: 64,
            dense2_units: 16,
            output_units: 1,
        }
    }

    /// A reduced stack with the same layer types, for tests and experiments.
    pub const fn reduced(
        input_steps: usize,
        input_dim: usize,
        lstm1_units: usize,
        lstm2_units: usize,
        dense1_units: usize,
        dense2_units: usize,
    ) -> Self {
        Self {
            input_steps,
            input_dim,
            lstm1_units,
            lstm2_units,
            dense1_units,
            dense2_units,
            output_units: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.input_steps,
            self.input_dim,
            self.lstm1_units,
            self.lstm2_units,
            self.dense1_units,
            self.dense2_units,
        ];
        if dims.contains(&0) {
            return Err(NnError::InvalidConfig(format!(
                "all layer dimensions must be positive: {self:?}"
            )));
        }
        if self.output_units != 1 {
            return Err(NnError::InvalidConfig(format!(
                "output layer must have 1 unit, got {}",
                self.output_units
            )));
        }
        Ok(())
    }

    /// Values per input sequence.
    pub fn input_len(&self) -> usize {
        self.input_steps * self.input_dim
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self)
    }

    pub fn param_count(&self) -> usize {
        let lstm = |input: usize, units: usize| 4 * (input + units + 1) * units;
        let dense = |input: usize, units: usize| (input + 1) * units;
        lstm(self.input_dim, self.lstm1_units)
            + lstm(self.lstm1_units, self.lstm2_units)
            + dense(self.lstm2_units, self.dense1_units)
            + dense(self.dense1_units, self.dense2_units)
            + dense(self.dense2_units, self.output_units)
    }
}

/// Parameter ranges of one LSTM layer. `kernel` is `4·units × input`,
/// `recurrent` is `4·units × units` and `bias` is `4·units`; gate blocks
/// are ordered input, forget, cell, output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LstmSlots {
    pub input: usize,
    pub units: usize,
    pub kernel: Range<usize>,
    pub recurrent: Range<usize>,
    pub bias: Range<usize>,
}

/// Parameter ranges of one dense layer: `kernel` is `units × input`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseSlots {
    pub input: usize,
    pub units: usize,
    pub kernel: Range<usize>,
    pub bias: Range<usize>,
}

/// Offsets of every tensor inside the flat parameter vector, in storage
/// order: lstm1, lstm2, dense1, dense2, dense3; within a layer kernel,
/// recurrent (LSTM only), bias. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub lstm1: LstmSlots,
    pub lstm2: LstmSlots,
    pub dense1: DenseSlots,
    pub dense2: DenseSlots,
    pub dense3: DenseSlots,
    pub total: usize,
}

/// One entry of the layout descriptor stored in model files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorDesc {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamLayout {
    fn new(arch: &Architecture) -> Self {
        let mut cursor = 0;
        let mut take = |n: usize| {
            let r = cursor..cursor + n;
            cursor += n;
            r
        };
        let mut lstm = |input: usize, units: usize| LstmSlots {
            input,
            units,
            kernel: take(4 * units * input),
            recurrent: take(4 * units * units),
            bias: take(4 * units),
        };
        let lstm1 = lstm(arch.input_dim, arch.lstm1_units);
        let lstm2 = lstm(arch.lstm1_units, arch.lstm2_units);
        let mut dense = |input: usize, units: usize| DenseSlots {
            input,
            units,
            kernel: take(units * input),
            bias: take(units),
        };
        let dense1 = dense(arch.lstm2_units, arch.dense1_units);
        let dense2 = dense(arch.dense1_units, arch.dense2_units);
        let dense3 = dense(arch.dense2_units, arch.output_units);
        Self {
            lstm1,
            lstm2,
            dense1,
            dense2,
            dense3,
            total: cursor,
        }
    }

    pub fn describe(&self) -> Vec<TensorDesc> {
        let mut out = Vec::new();
        for (name, l) in [("lstm1", &self.lstm1), ("lstm2", &self.lstm2)] {
            out.push(TensorDesc {
                name: format!("{name}.kernel"),
                shape: vec![4 * l.units, l.input],
                offset: l.kernel.start,
            });
            out.push(TensorDesc {
                name: format!("{name}.recurrent"),
                shape: vec![4 * l.units, l.units],
                offset: l.recurrent.start,
            });
            out.push(TensorDesc {
                name: format!("{name}.bias"),
                shape: vec![4 * l.units],
                offset: l.bias.start,
            });
        }
        for (name, d) in [
            ("dense1", &self.dense1),
            ("dense2", &self.dense2),
            ("dense3", &self.dense3),
        ] {
            out.push(TensorDesc {
                name: format!("{name}.kernel"),
                shape: vec![d.units, d.input],
                offset: d.kernel.start,
            });
            out.push(TensorDesc {
                name: format!("{name}.bias"),
                shape: vec![d.units],
                offset: d.bias.start,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_parameter_count() {
        let arch = Architecture::standard();
        assert_eq!(arch.param_count(), STANDARD_PARAM_COUNT);
        let layout = arch.layout();
        assert_eq!(layout.total, STANDARD_PARAM_COUNT);
        assert_eq!(layout.lstm1.bias.end, 328_704);
        assert_eq!(layout.lstm2.bias.end - layout.lstm2.kernel.start, 49_408);
        assert_eq!(layout.total - layout.dense1.kernel.start, 5_217);
    }

    #[test]
    fn layout_is_contiguous() {
        let arch = Architecture::reduced(3, 2, 3, 3, 2, 2);
        let desc = arch.layout().describe();
        let mut expected = 0;
        for t in &desc {
            assert_eq!(t.offset, expected, "{}", t.name);
            expected += t.shape.iter().product::<usize>();
        }
        assert_eq!(expected, arch.param_count());
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(Architecture::reduced(0, 2, 3, 3, 2, 2).validate().is_err());
        let mut a = Architecture::standard();
        a.output_units = 2;
        assert!(a.validate().is_err());
    }
}
