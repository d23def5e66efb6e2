//! Reference architectures for tactile, visual, and combined classifiers.
//!
//! All three share the encoder shapes: a tactile branch maps its input
//! channels through 32 hidden neurons to a 50-neuron code, a vision branch
//! pools each polarity plane 4x4 (stride 4) and maps the pooled pixels
//! through 32 hidden neurons to a 10-neuron code, and a single dense head
//! maps the (concatenated) code to one neuron per class. Weights start at
//! zero; training owns initialization.

use alloc::vec;

use crate::error::CoreError;
use crate::event::{Geometry, Modality};
use crate::mat::Matrix;
use crate::network::{Branch, Layer, Network};
use crate::srm::{PoolLayer, SrmConfig, SrmLayer};

pub const TACTILE_HIDDEN: usize = 32;
pub const TACTILE_CODE: usize = 50;
pub const VISION_HIDDEN: usize = 32;
pub const VISION_CODE: usize = 10;
pub const POOL_KERNEL: u32 = 4;
pub const POOL_STRIDE: u32 = 4;
pub const DEFAULT_POOL_GAIN: f64 = 1.1;

fn dense(n_out: usize, n_in: usize) -> Layer {
    Layer::Dense(SrmLayer::new(Matrix::zeros(n_out, n_in)))
}

fn check_classes(n_classes: usize) -> Result<(), CoreError> {
    if n_classes < 2 {
        return Err(CoreError::InvalidConfig("need at least two classes"));
    }
    Ok(())
}

fn tactile_branch(n_inputs: usize) -> Result<Branch, CoreError> {
    if n_inputs == 0 {
        return Err(CoreError::InvalidConfig("tactile branch needs input channels"));
    }
    Ok(Branch {
        modality: Modality::Tactile,
        layers: vec![
            dense(TACTILE_HIDDEN, n_inputs),
            dense(TACTILE_CODE, TACTILE_HIDDEN),
        ],
    })
}

fn vision_branch(geometry: &Geometry, pool_gain: f64) -> Result<Branch, CoreError> {
    let pool = PoolLayer::new(POOL_KERNEL, POOL_STRIDE, pool_gain)?;
    let pooled = pool.n_out(geometry);
    Ok(Branch {
        modality: Modality::Vision,
        layers: vec![
            Layer::Pool(pool),
            dense(VISION_HIDDEN, pooled),
            dense(VISION_CODE, VISION_HIDDEN),
        ],
    })
}

/// Tactile-only classifier: `n_inputs -> 32 -> 50` encoder and a
/// `50 -> n_classes` head.
pub fn tactile_network(
    n_inputs: usize,
    n_classes: usize,
    config: SrmConfig,
) -> Result<Network, CoreError> {
    check_classes(n_classes)?;
    Network::new(
        vec![tactile_branch(n_inputs)?],
        vec![dense(n_classes, TACTILE_CODE)],
        config,
    )
}

/// Vision-only classifier: `pool(4, 4) -> 32 -> 10` encoder over the given
/// pixel geometry and a `10 -> n_classes` head.
pub fn vision_network(
    geometry: &Geometry,
    n_classes: usize,
    config: SrmConfig,
    pool_gain: f64,
) -> Result<Network, CoreError> {
    check_classes(n_classes)?;
    Network::new(
        vec![vision_branch(geometry, pool_gain)?],
        vec![dense(n_classes, VISION_CODE)],
        config,
    )
}

/// Combined classifier: the tactile and vision branches run side by side
/// and a `60 -> n_classes` head reads their concatenated codes.
pub fn multimodal_network(
    n_tactile_inputs: usize,
    geometry: &Geometry,
    n_classes: usize,
    config: SrmConfig,
    pool_gain: f64,
) -> Result<Network, CoreError> {
    check_classes(n_classes)?;
    Network::new(
        vec![
            tactile_branch(n_tactile_inputs)?,
            vision_branch(geometry, pool_gain)?,
        ],
        vec![dense(n_classes, TACTILE_CODE + VISION_CODE)],
        config,
    )
}

/// Taxel count of the stock tactile sensor layout.
pub const TACTILE_TAXELS: usize = 156;

/// Pixel geometry of the stock event-camera crop.
pub fn default_vision_geometry() -> Geometry {
    Geometry::new(200, 250, 2).expect("static dimensions are valid")
}
