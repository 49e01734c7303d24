use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Padding;

/// The trunk output is reshaped to this many one-feature time steps.
pub const RESHAPE_STEPS: usize = 16;
pub const CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel_width: usize,
    pub pool_window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_features: usize,
    pub conv_blocks: Vec<ConvBlock>,
    /// Widths of the ReLU dense layers after flattening; the last must be 16.
    pub dense_trunk: Vec<usize>,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub classes: usize,
}

impl Default for ModelConfig {
    /// 45 features; conv(32, 3) and conv(64, 3) blocks with pool 2; dense
    /// 64 -> 16; two LSTM layers of 64 units.
    fn default() -> Self {
        Self {
            input_features: 45,
            conv_blocks: vec![
                ConvBlock { filters: 32, kernel_width: 3, pool_window: 2 },
                ConvBlock { filters: 64, kernel_width: 3, pool_window: 2 },
            ],
            dense_trunk: vec![64, RESHAPE_STEPS],
            lstm_hidden: 64,
            lstm_layers: 2,
            classes: CLASSES,
        }
    }
}

impl ModelConfig {
    pub const PADDING: Padding = Padding::Same;

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.input_features == 0 {
            return bad("input_features must be >= 1".into());
        }
        if self.classes != CLASSES {
            return bad(format!("classes must be {CLASSES}, got {}", self.classes));
        }
        match self.dense_trunk.last() {
            Some(&RESHAPE_STEPS) => {}
            Some(&w) => return bad(format!("last dense width must be {RESHAPE_STEPS}, got {w}")),
            None => return bad("dense_trunk must not be empty".into()),
        }
        if self.dense_trunk.iter().any(|&w| w == 0) {
            return bad("dense widths must be >= 1".into());
        }
        if self.lstm_hidden == 0 || self.lstm_layers == 0 {
            return bad("lstm_hidden and lstm_layers must be >= 1".into());
        }
        self.flattened_width().map(|_| ())
    }

    /// Width of the flattened conv output, checking every block leaves at
    /// least one position.
    pub fn flattened_width(&self) -> Result<usize> {
        let mut channels = 1;
        let mut len = self.input_features;
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.filters == 0 || b.kernel_width == 0 || b.pool_window == 0 {
                return Err(Error::InvalidConfig(format!("conv block {i} has a zero size")));
            }
            let pad = Self::PADDING.amount(b.kernel_width);
            len = crate::nn::conv_out_len_checked(len, b.kernel_width, 1, pad)
                .ok_or_else(|| Error::InvalidConfig(format!("conv block {i} sees length {len}")))?;
            len /= b.pool_window;
            if len == 0 {
                return Err(Error::InvalidConfig(format!("pooling in block {i} leaves no positions")));
            }
            channels = b.filters;
        }
        Ok(channels * len)
    }
}
