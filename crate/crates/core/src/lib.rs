//! Backward-adaptive differential quantization of time-varying MIMO
//! channel state information, plus the simulation machinery to evaluate
//! it: correlated Rayleigh fading generation, scalar quantizer design,
//! LLS/RLS prediction, gain adaptation, the differential codec itself,
//! singular-vector feedback, and a QPSK link-level BER harness.
//!
//! The codec is *backward* adaptive: predictor weights and the quantizer
//! step size are derived from reconstructed values only, so the far end
//! of the feedback link reproduces them from the index stream alone.

pub mod bessel;
pub mod bitstream;
pub mod cmatrix;
pub mod codec;
pub mod error;
pub mod fading;
pub mod gain;
pub mod link;
pub mod predictor;
pub mod quantizer;
pub mod svd;
pub mod svd_feedback;

pub use cmatrix::CMatrix;
pub use codec::{
    decode_matrix_stream, encode_matrix_stream, CodecConfig, DiffCodecState, MatrixStreamCodec,
    MatrixStreamOutput,
};
pub use error::{Error, Result};
pub use fading::{
    doppler_frequency, generate_trajectory, theoretical_autocorrelation, ChannelTrajectory,
    MobilityProfile,
};
pub use gain::{GainConfig, GainState};
pub use link::{
    ber_run, mmse_precoder, overhead, smse, BerPoint, BerRunConfig, FeedbackScheme, SystemConfig,
};
pub use predictor::{
    lls_fit, wiener_residual_variance, PredictorConfig, PredictorMode, PredictorState, PsiForm,
};
pub use quantizer::{
    gaussian_codebook, kmeans_codebook, lloyd_max_design, singular_value_codebook, Codebook,
    GAUSS_MSE_2BIT, GAUSS_MSE_3BIT,
};
pub use svd::{svd_small, SingularTriple};
pub use svd_feedback::{
    align_columns, decode_singular_stream, encode_singular_stream, haar_denormalize,
    haar_normalize, haar_second_moment, SingularStreamConfig, SingularStreamOutput, UserLayout,
};
