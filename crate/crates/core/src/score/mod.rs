// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Learned score `s_θ(x, t) ≈ ∇_x log p_t(x)` for an Ornstein–Uhlenbeck
//! forward process, trained by denoising score matching.
//!
//! Quantum states enter through their real embedding; the score field lives
//! on `R^{2·2^n}`.

pub mod checkpoint;
mod net;
mod oracle;
mod ou;
mod train;

pub use net::{net_gradients, time_features, ScoreNet, TrainSample, Workspace, D_TIME};
pub use oracle::{kde_score_oracle, silverman_bandwidth, GaussianScore, KdeScore, ScoreModel, ZeroScore};
pub use ou::{ou_kernel, OuParams};
pub use train::{train, LossCurve, OptimizerKind, Provenance, ScoreDataset, TrainConfig, TrainOutcome, Weighting};
