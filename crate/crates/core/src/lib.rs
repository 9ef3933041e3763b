//! Syllable pronunciation quality scoring.
//!
//! A patient's pre-operation recordings (class 1) and immediate
//! post-operation recordings (class 0) train a binary LSTM classifier over
//! spectrogram fragments; the classifier's class-1 probability then scores
//! later rehabilitation sessions on a continuous 0–1 scale.

pub mod corpus;
pub mod dataset;
pub mod dsp;
pub mod nn;
pub mod scoring;
pub mod synth;
pub mod wav;
