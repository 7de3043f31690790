//! Dataset construction and preprocessing.

mod morse;
mod neuromorse;
mod noise;
mod shd;
mod slicing;
mod smnist;

pub use morse::{morse_code, morse_encode, MORSE_DOT_STEP, MORSE_LETTER_STEP};
pub use neuromorse::{build_neuromorse, NeuroMorse, NULL_WORDS, TRAIN_WORDS};
pub use noise::{add_noise, NoiseKind};
pub use shd::{shd_preprocess, RawEvent, ShdConfig};
pub use slicing::{shd_slice_borders, slice, FrameTensor, SliceBorders};
pub use smnist::{build_smnist, image_to_stream, upsample_nearest, IMAGE_SIDE, SMNIST_LEN};

use crate::stream::EventStream;

/// A stream with its class, or `None` for the null class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub stream: EventStream,
    pub label: Option<usize>,
}

impl LabeledSample {
    pub fn new(stream: EventStream, label: Option<usize>) -> Self {
        Self { stream, label }
    }
}
