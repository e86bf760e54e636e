//! Cover song similarity from timbral shape sequences.
//!
//! A song is beat tracked at several tempo biases. Each run of `B` beats is
//! covered by short overlapping windows whose MFCC vectors form a
//! time-ordered point cloud; the cloud is centred, scaled to the unit sphere
//! and summarised by its self-similarity matrix, resized to `d x d`. Two
//! songs are compared through the matrix of distances between their SSM
//! sequences, binarised by mutual nearest neighbours and scored with a
//! diagonal-constrained Smith-Waterman alignment.

pub mod align;
pub mod audio;
pub mod beat;
pub mod cache;
pub mod embed;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod shape;
pub mod simmatch;
pub mod spectral;
pub mod synth;

pub use align::{smith_waterman_constrained, AlignmentResult, ScoreTable};
pub use audio::{load_audio, load_at_rate, resample, AudioSignal, CANONICAL_SAMPLE_RATE};
pub use beat::{beat_track_for_bias, onset_envelope, BeatConfig, BeatTrack};
pub use embed::{mfcc_window, Block, MfccConfig, TimeOrderedPointCloud};
pub use error::{Error, Result};
pub use pipeline::{
    benchmark, extract_features, score_pair, BenchmarkReport, PairScore, PipelineConfig, SongAnalysis,
    SongFeatures,
};
pub use shape::{block_ssm, compute_ssm, normalize_point_cloud, resize_ssm, SsmImage};
pub use simmatch::{binarize_mutual_knn, compute_csm, BinaryCsm, CrossSimilarityMatrix};
